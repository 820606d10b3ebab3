#!/usr/bin/env python3
"""Reproduce the pinned training-fixture run end to end.

Trains the spectrum-prediction model on the deterministic seed-42 pair
(N=512, sigma=0, k=32, batch 256, lr 1e-3, 5 epochs), prints the epoch-mean
loss table and the final/initial ratio, evaluates identity fidelity at
rho=1, sweeps rho over the 5-point grid, and writes all artifacts (latents,
model, history CSV, config echo) into --out-dir.

Expected numbers (CPU, ~2.5 min): first-step L_total 140221.51; epoch means
934283.6 / 26604.0 / 14185.1 / 11210.5 / 10247.9; ratio 0.0731; per-channel
identity-fidelity ratios 0.945-0.948; sweep distances rising to ~57.7 at
rho=0.5 and easing to ~55.3 at rho=1 (the fixtures module docstring
explains the dip).
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from latentsvd import (AviConfig, TrainConfig, edit_latent, evaluate,
                       save_latent, save_model, train)
from latentsvd.fixtures import training_fixture_pair

RHO_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="runs/fixture",
                    help="artifact directory (default runs/fixture)")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    x, z = training_fixture_pair()
    save_latent(x, out / "x.lat")
    save_latent(z, out / "z.lat")

    cfg = TrainConfig(pairs=((str(out / "x.lat"), str(out / "z.lat")),),
                      n_samples=512, sigma=0.0, k=32,
                      lambdas=(3.0, 10.0, 10.0, 10.0),
                      batch_size=256, lr=1e-3, epochs=5, seed=42)
    t0 = time.perf_counter()
    model, history = train(cfg, loaded_pairs=[(x, z)])
    wall = time.perf_counter() - t0

    save_model(model, out / "fixture.phi")
    history.to_csv(out / "fixture.phi.history.csv")
    with open(out / "fixture.phi.config.json", "w") as fh:
        json.dump(history.config, fh, indent=1, sort_keys=True)

    init = history.steps[0].l_total
    print(f"trained in {wall:.0f}s  ({len(history.steps)} steps)")
    print(f"first-step L_total  {init:.4f}")
    print("epoch   L1          L2          L3          L4          L_total")
    means = history.epoch_means()
    for epoch in sorted(means):
        row = means[epoch]
        print(f"{epoch:>5}   " + "  ".join(
            f"{row[k]:<10.2f}" for k in ("l1", "l2", "l3", "l4", "l_total")))
    final = means[max(means)]["l_total"]
    print(f"final/initial ratio {final / init:.5f}   (pinned 0.07308)")

    report = evaluate(model, x, z, AviConfig(k=32, rho=1.0))
    ratios = ", ".join(f"{r.ratio:.4f}" for r in report.rows)
    print(f"identity-fidelity |y-x|/|y-z| per channel: {ratios}")

    base = edit_latent(x, z, model, AviConfig(k=32, rho=RHO_GRID[0]))
    base64f = base.data.astype(np.float64)
    print("rho sweep, distance from rho=0 edit:")
    for rho in RHO_GRID:
        y = edit_latent(x, z, model, AviConfig(k=32, rho=rho))
        dist = float(np.linalg.norm(y.data.astype(np.float64) - base64f))
        print(f"  rho={rho:.2f}  dist={dist:8.3f}")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
