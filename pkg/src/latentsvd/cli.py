"""Command-line interface: gen | train | edit | interpolate | analyze.

Conventions shared by every subcommand:

* the effective configuration echoes to stderr as one JSON object;
* exit code 0 on success, 2 on usage or validation errors, 1 on runtime
  failures (I/O, non-convergence, divergence);
* all randomness derives from ``--seed`` through the pinned generator, so a
  repeated invocation writes byte-identical artifacts;
* ``LSVD_THREADS`` caps the numeric thread pools (see package __init__).
"""

import argparse
import json
import sys

import numpy as np

from . import analysis, avi, fixtures, latents, linalg, mlp, training

_ = fixtures  # re-exported for scripts; not used directly here


def _echo(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(json.dumps(cfg, default=str), file=sys.stderr)


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args):
    spec = latents.GenSpec(shape=tuple(args.shape), seed=args.seed,
                           mean=args.mean, std=args.std)
    tensor = latents.synth_latent(spec)
    meta = {}
    if args.time_step is not None:
        meta["time_step"] = args.time_step
    if args.total_steps is not None:
        meta["total_steps"] = args.total_steps
    if args.tag is not None:
        meta["tag"] = args.tag
    if meta:
        tensor = tensor.with_meta(**meta)
    latents.save_latent(tensor, args.out)
    print(f"wrote {args.out} shape={tuple(tensor.data.shape)} seed={args.seed}")
    return 0


# ---------------------------------------------------------------------------
# train


def _pairs_from_args(args):
    if len(args.x) != len(args.z):
        raise ValueError("--x and --z must list the same number of latents")
    return tuple(zip(args.x, args.z))


def cmd_train(args):
    cfg = training.TrainConfig(
        pairs=_pairs_from_args(args), n_samples=args.n, sigma=args.sigma,
        k=args.k, rho_train=args.rho_train,
        lambdas=(args.lambda1, args.lambda2, args.lambda3, args.lambda4),
        batch_size=args.batch, lr=args.lr, epochs=args.epochs, seed=args.seed)
    model, history = training.train(cfg)
    mlp.save_model(model, args.out_model)
    with open(str(args.out_model) + ".config.json", "w") as fh:
        json.dump(cfg.echo(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    history_path = args.history or str(args.out_model) + ".history.csv"
    history.to_csv(history_path)
    means = history.epoch_means()
    last = means[max(means)]
    print(f"trained {len(history.steps)} steps; final epoch L_total="
          f"{last['l_total']:.4f}; model -> {args.out_model}")
    return 0


# ---------------------------------------------------------------------------
# edit / interpolate


def cmd_edit(args):
    x = latents.load_latent(args.x)
    z = latents.load_latent(args.z)
    model = mlp.load_model(args.model)
    cfg = avi.AviConfig(k=args.k, rho=args.rho)
    out = avi.edit_latent(x, z, model, cfg, identity_s=args.identity_s)
    latents.save_latent(out, args.out)
    print(f"wrote {args.out} (rho={args.rho}, k={args.k})")
    return 0


def cmd_interpolate(args):
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    if not 0.0 <= args.rho_start <= args.rho_end <= avi.RHO_MAX:
        raise ValueError(f"need 0 <= rho-start <= rho-end <= {avi.RHO_MAX}")
    x = latents.load_latent(args.x)
    z = latents.load_latent(args.z)
    model = mlp.load_model(args.model)
    import os
    os.makedirs(args.out_dir, exist_ok=True)
    rhos = np.linspace(args.rho_start, args.rho_end, args.steps)
    base = None
    for rho in rhos:
        cfg = avi.AviConfig(k=args.k, rho=float(rho))
        out = avi.edit_latent(x, z, model, cfg, identity_s=args.identity_s)
        path = os.path.join(args.out_dir, f"edit_rho{rho:.4f}.lat")
        latents.save_latent(out, path)
        if base is None:
            base = out
        dist = float(np.linalg.norm(out.data.astype(np.float64)
                                    - base.data.astype(np.float64)))
        print(f"rho={rho:.4f} dist_from_first={_fmt(dist)} -> {path}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _load_sequence(paths):
    return [latents.load_latent(p) for p in paths]


def _emit(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _geodesic_report(series, fmt):
    if fmt == "json":
        return json.dumps({
            "mode": series.mode, "p": series.p, "side": series.side,
            "labels": series.labels, "pairs": [list(p) for p in series.pairs],
            "distances": series.distances.tolist(),
            "mean": series.mean.tolist(),
            "variance": series.variance.tolist()}, indent=1) + "\n"
    lines = ["step,label_from,label_to,channel,distance"]
    for row, (i, j) in enumerate(series.pairs):
        for c in range(series.distances.shape[1]):
            lines.append(f"{row},{series.labels[i]},{series.labels[j]},{c},"
                         f"{_fmt(series.distances[row, c])}")
        lines.append(f"{row},{series.labels[i]},{series.labels[j]},mean,"
                     f"{_fmt(series.mean[row])}")
        lines.append(f"{row},{series.labels[i]},{series.labels[j]},var,"
                     f"{_fmt(series.variance[row])}")
    return "\n".join(lines) + "\n"


def cmd_analyze_geodesic(args):
    seq = _load_sequence(args.latents)
    series = analysis.geodesic_trajectory(seq, p=args.p, mode=args.mode,
                                          side=args.side)
    _emit(args.out, _geodesic_report(series, args.format))
    return 0


def _svtrace_report(table, fmt):
    if fmt == "json":
        return json.dumps({"labels": table.labels,
                           "values": table.values.tolist(),
                           "deltas": table.deltas.tolist()}, indent=1) + "\n"
    lines = ["step,label,channel,index,value,delta"]
    T, C, N = table.values.shape
    for t in range(T):
        for c in range(C):
            for i in range(N):
                delta = "" if t == 0 else _fmt(table.deltas[t - 1, c, i])
                lines.append(f"{t},{table.labels[t]},{c},{i},"
                             f"{_fmt(table.values[t, c, i])},{delta}")
    return "\n".join(lines) + "\n"


def cmd_analyze_svtrace(args):
    table = analysis.singular_value_trajectory(_load_sequence(args.latents))
    _emit(args.out, _svtrace_report(table, args.format))
    return 0


def _mobility_report(trace, fmt):
    if fmt == "json":
        return json.dumps({
            "labels": trace.labels, "side": trace.side, "method": trace.method,
            "permutations": trace.permutations.tolist(),
            "cosines": trace.cosines.tolist(),
            "rank_table": trace.rank_table.tolist(),
            "net_shift": trace.net_shift.tolist()}, indent=1) + "\n"
    lines = ["transition,channel,source_rank,target_rank,cosine"]
    T1, C, N = trace.permutations.shape
    for t in range(T1):
        for c in range(C):
            for i in range(N):
                lines.append(f"{t},{c},{i},{trace.permutations[t, c, i]},"
                             f"{_fmt(trace.cosines[t, c, i])}")
    return "\n".join(lines) + "\n"


def cmd_analyze_mobility(args):
    trace = analysis.mobility_trace(_load_sequence(args.latents),
                                    side=args.side, method=args.method)
    _emit(args.out, _mobility_report(trace, args.format))
    return 0


def _theorem_report(report, fmt):
    if fmt == "json":
        return json.dumps({
            "norm": report.norm, "k": report.k, "rate": report.rate,
            "rows": [vars(r) for r in report.rows]}, indent=1) + "\n"
    lines = ["pair,channel,dist_x_fro,dist_z_fro,dist_x_spec,dist_z_spec,"
             "smax_x,smax_z,assumption,holds"]
    for r in report.rows:
        lines.append(f"{r.pair},{r.channel},{_fmt(r.dist_x_fro)},"
                     f"{_fmt(r.dist_z_fro)},{_fmt(r.dist_x_spec)},"
                     f"{_fmt(r.dist_z_spec)},{_fmt(r.smax_x)},{_fmt(r.smax_z)},"
                     f"{int(r.assumption)},{int(r.holds)}")
    return "\n".join(lines) + "\n"


def cmd_analyze_theorem(args):
    if len(args.x) != len(args.z):
        raise ValueError("--x and --z must list the same number of latents")
    pairs = [(latents.load_latent(a), latents.load_latent(b))
             for a, b in zip(args.x, args.z)]
    report = analysis.verify_theorem_corpus(pairs, k=args.k, norm=args.norm)
    _emit(args.out, _theorem_report(report, args.format))
    print(f"inequality holds for {report.rate:.3f} of channels "
          f"({len(report.rows)} rows)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser():
    parser = argparse.ArgumentParser(
        prog="latentsvd",
        description="Channel-wise SVD latent editing and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic latent")
    p.add_argument("--out", required=True)
    p.add_argument("--shape", nargs=3, type=int, default=[4, 64, 64],
                   metavar=("C", "H", "W"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--time-step", type=int, default=None)
    p.add_argument("--total-steps", type=int, default=None)
    p.add_argument("--tag", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the spectrum-prediction model")
    p.add_argument("--x", nargs="+", required=True, help="source latent files")
    p.add_argument("--z", nargs="+", required=True, help="target latent files")
    p.add_argument("--out-model", required=True)
    p.add_argument("--history", default=None,
                   help="loss history CSV (default <out-model>.history.csv)")
    p.add_argument("--n", type=int, default=None,
                   help="samples per pair (default 5000 for one pair, else 500)")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--rho-train", type=float, default=1.0)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda1", type=float, default=3.0)
    p.add_argument("--lambda2", type=float, default=10.0)
    p.add_argument("--lambda3", type=float, default=10.0)
    p.add_argument("--lambda4", type=float, default=10.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("edit", help="edit a latent toward a target")
    p.add_argument("--x", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--identity-s", action="store_true",
                   help="debug: substitute S = S_x, delta_s = 0")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("interpolate", help="sweep the blend strength rho")
    p.add_argument("--x", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rho-start", type=float, default=0.0)
    p.add_argument("--rho-end", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--identity-s", action="store_true")
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("analyze", help="geometry reports over latent files")
    asub = p.add_subparsers(dest="analysis", required=True)

    a = asub.add_parser("geodesic", help="subspace distances along a sequence")
    a.add_argument("--latents", nargs="+", required=True)
    a.add_argument("--p", type=int, default=4)
    a.add_argument("--mode", choices=["consecutive", "against-first"],
                   default="consecutive")
    a.add_argument("--side", choices=["left", "right"], default="left")
    a.add_argument("--out", default=None)
    a.add_argument("--format", choices=["csv", "json"], default="csv")
    a.set_defaults(func=cmd_analyze_geodesic)

    a = asub.add_parser("svtrace", help="singular value trajectories")
    a.add_argument("--latents", nargs="+", required=True)
    a.add_argument("--out", default=None)
    a.add_argument("--format", choices=["csv", "json"], default="csv")
    a.set_defaults(func=cmd_analyze_svtrace)

    a = asub.add_parser("mobility", help="singular vector rank mobility")
    a.add_argument("--latents", nargs="+", required=True)
    a.add_argument("--side", choices=["left", "right"], default="left")
    a.add_argument("--method", choices=["greedy", "hungarian"], default="greedy")
    a.add_argument("--out", default=None)
    a.add_argument("--format", choices=["csv", "json"], default="csv")
    a.set_defaults(func=cmd_analyze_mobility)

    a = asub.add_parser("theorem", help="closeness-to-source inequality check")
    a.add_argument("--x", nargs="+", required=True)
    a.add_argument("--z", nargs="+", required=True)
    a.add_argument("--k", type=int, default=None)
    a.add_argument("--norm", choices=["frobenius", "spectral"],
                   default="frobenius")
    a.add_argument("--out", default=None)
    a.add_argument("--format", choices=["csv", "json"], default="csv")
    a.set_defaults(func=cmd_analyze_theorem)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo(args)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (linalg.SvdConvergenceError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
