"""Tests for the spectrum-prediction MLP: init, forward, backward, Adam,
and binary serialization.

The backward pass is validated against central finite differences; the
forward pass against a hand-written matrix chain; Adam against its
defining update equations on crafted gradients.
"""

import struct

import numpy as np
import pytest

from latentsvd.mlp import (
    AdamState,
    PARAM_FIELDS,
    PhiModel,
    adam_step,
    forward_batch,
    init_model,
    load_model,
    param_shapes,
    phi_backward,
    phi_forward,
    save_model,
)

TINY = (6, 5, 3)  # in, hidden, out — small enough for exhaustive FD


def tiny_model(seed=0):
    return init_model(TINY, seed=seed)


class TestInit:
    def test_deterministic(self):
        a, b = init_model(TINY, seed=7), init_model(TINY, seed=7)
        for (_, pa), (_, pb) in zip(a.params(), b.params()):
            np.testing.assert_array_equal(pa, pb)

    def test_seed_sensitivity(self):
        a, b = init_model(TINY, seed=1), init_model(TINY, seed=2)
        assert not np.array_equal(a.w1, b.w1)

    def test_biases_zero(self):
        m = tiny_model()
        for name, p in m.params():
            if name.startswith("b"):
                assert not np.any(p)

    def test_dtype_float32(self):
        for _, p in tiny_model().params():
            assert p.dtype == np.float32

    def test_he_std_at_production_width(self):
        # 4096-wide hidden layer: sample std of w2 over 16.7M draws must
        # sit within 10% of sqrt(2/4096) (it lands well inside 1%).
        m = init_model((4096, 4096, 64), seed=0)
        target = np.sqrt(2.0 / 4096.0)
        assert abs(float(np.std(m.w2.astype(np.float64))) / target - 1.0) < 0.1
        assert abs(float(np.mean(m.w2.astype(np.float64)))) < 1e-3

    def test_shapes(self):
        shapes = param_shapes(TINY)
        m = tiny_model()
        for name, p in m.params():
            assert p.shape == shapes[name]
        assert shapes["w1"] == (6, 5)
        assert shapes["w_s"] == (5, 3)
        assert shapes["b_s"] == (3,)

    def test_dims_validation(self):
        with pytest.raises(ValueError):
            init_model((0, 4, 2), seed=0)


class TestForward:
    def test_zero_input_zero_bias(self):
        S, ds, _ = phi_forward(tiny_model(), np.zeros(6))
        np.testing.assert_array_equal(S, np.zeros(3))
        np.testing.assert_array_equal(ds, np.zeros(3))

    def test_bit_stable(self):
        m = tiny_model(3)
        x = np.linspace(-1, 1, 6)
        S1, d1, _ = phi_forward(m, x)
        S2, d2, _ = phi_forward(m, x)
        assert S1.tobytes() == S2.tobytes()
        assert d1.tobytes() == d2.tobytes()

    def test_matches_hand_chain(self):
        """Spell out relu(x@W+b) three times plus two linear heads."""
        m = init_model((4, 4, 2), seed=9)
        x = np.array([0.3, -1.2, 0.8, 2.0])
        h = x.copy()
        for W, b in ((m.w1, m.b1), (m.w2, m.b2), (m.w3, m.b3)):
            h = np.maximum(h @ W.astype(np.float64) + b.astype(np.float64), 0.0)
        S_o = h @ m.w_s.astype(np.float64) + m.b_s.astype(np.float64)
        d_o = h @ m.w_d.astype(np.float64) + m.b_d.astype(np.float64)
        S, ds, _ = phi_forward(m, x)
        np.testing.assert_allclose(S, S_o, atol=1e-12)
        np.testing.assert_allclose(ds, d_o, atol=1e-12)

    def test_heads_are_raw_linear(self):
        """No output activation or sorting: negative and unsorted values
        pass straight through."""
        m = tiny_model()
        m.w_s[:] = 0.0
        m.b_s[:] = np.array([-5.0, 3.0, -1.0], dtype=np.float32)
        S, _, _ = phi_forward(m, np.ones(6))
        np.testing.assert_allclose(S, [-5.0, 3.0, -1.0], atol=1e-6)

    def test_batch_matches_single(self):
        m = tiny_model(4)
        X = np.random.default_rng(0).standard_normal((7, 6))
        S_b, d_b, _ = forward_batch(m, X)
        for i in range(7):
            S_i, d_i, _ = phi_forward(m, X[i])
            np.testing.assert_allclose(S_b[i], S_i, atol=1e-14)
            np.testing.assert_allclose(d_b[i], d_i, atol=1e-14)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            phi_forward(tiny_model(), np.zeros(5))
        with pytest.raises(ValueError):
            phi_forward(tiny_model(), np.full(6, np.nan))


class TestBackward:
    def test_zero_upstream_grads(self):
        m = tiny_model(1)
        x = np.random.default_rng(1).standard_normal(6)
        _, _, cache = phi_forward(m, x)
        grads = phi_backward(m, cache, np.zeros(3), np.zeros(3))
        for name in PARAM_FIELDS:
            assert not np.any(grads[name])

    def test_head_separation(self):
        """The S head never receives gradient from delta_s and vice
        versa; the shared trunk receives both."""
        m = tiny_model(2)
        x = np.random.default_rng(2).standard_normal(6)
        _, _, cache = phi_forward(m, x)
        gS = np.array([1.0, -2.0, 0.5])
        only_S = phi_backward(m, cache, gS, np.zeros(3))
        assert not np.any(only_S["w_d"]) and not np.any(only_S["b_d"])
        assert np.any(only_S["w_s"])
        both = phi_backward(m, cache, gS, np.array([0.3, 0.3, 0.3]))
        np.testing.assert_array_equal(both["w_s"], only_S["w_s"])
        assert np.any(both["w_d"])

    def test_matches_finite_differences(self):
        """Scalar objective J = <gS, S> + <gd, ds> checked parameter by
        parameter against central differences.  Steps are materialized
        in float32 so the difference quotient uses the exact step the
        parameter actually took."""
        m = tiny_model(5)
        rng = np.random.default_rng(5)
        x = rng.standard_normal(6)
        gS = rng.standard_normal(3)
        gd = rng.standard_normal(3)

        _, _, cache = phi_forward(m, x)
        analytic = phi_backward(m, cache, gS, gd)

        def objective():
            S, ds, _ = phi_forward(m, x)
            return float(gS @ S + gd @ ds)

        # Keep pre-activations away from ReLU kinks for clean derivatives.
        for a in (cache.a1, cache.a2, cache.a3):
            assert np.all(np.abs(a) > 1e-6)

        checked = 0
        for name, p in m.params():
            flat = p.reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                step = np.float32(1e-4) * max(np.float32(1.0), abs(orig))
                flat[idx] = orig + step
                hi_val = flat[idx]
                hi = objective()
                flat[idx] = orig - step
                lo_val = flat[idx]
                lo = objective()
                flat[idx] = orig
                fd = (hi - lo) / float(hi_val - lo_val)
                err = abs(fd - analytic[name].reshape(-1)[idx])
                denom = max(abs(fd), abs(analytic[name].reshape(-1)[idx]), 1e-8)
                assert err / denom <= 1e-3, (name, idx, fd, analytic[name].reshape(-1)[idx])
                checked += 1
        assert checked == sum(p.size for _, p in m.params())


class TestAdam:
    def test_zero_grads_identity(self):
        m = tiny_model(6)
        before = {n: p.copy() for n, p in m.params()}
        state = AdamState()
        grads = {n: np.zeros_like(p, dtype=np.float64) for n, p in m.params()}
        adam_step(m, state, grads, lr=1e-3)
        assert state.step == 1
        for n, p in m.params():
            np.testing.assert_array_equal(p, before[n])

    def test_first_step_magnitude(self):
        """With g=1 everywhere the first bias-corrected step is exactly
        -lr/(1+eps) ~ -lr; float32 parameter storage quantizes the
        result at ~1e-7 for unit-scale weights."""
        m = tiny_model(7)
        before = m.w1.astype(np.float64).copy()
        state = AdamState()
        grads = {n: np.ones_like(p, dtype=np.float64) for n, p in m.params()}
        adam_step(m, state, grads, lr=1e-3)
        delta = m.w1.astype(np.float64) - before
        np.testing.assert_allclose(delta, -1e-3, atol=2e-7)

    def test_lr_zero_identity(self):
        m = tiny_model(8)
        before = {n: p.copy() for n, p in m.params()}
        state = AdamState()
        grads = {n: np.random.default_rng(8).standard_normal(p.shape) for n, p in m.params()}
        adam_step(m, state, grads, lr=0.0)
        for n, p in m.params():
            np.testing.assert_array_equal(p, before[n])

    def test_matches_reference_equations(self):
        """Two steps against a from-scratch Adam written in the test."""
        m = tiny_model(9)
        state = AdamState()
        rng = np.random.default_rng(9)
        g1 = {n: rng.standard_normal(p.shape) for n, p in m.params()}
        g2 = {n: rng.standard_normal(p.shape) for n, p in m.params()}

        ref = {n: p.astype(np.float64).copy() for n, p in m.params()}
        mom = {n: np.zeros(p.shape) for n, p in m.params()}
        vel = {n: np.zeros(p.shape) for n, p in m.params()}
        lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
        for t, g in ((1, g1), (2, g2)):
            for n in ref:
                mom[n] = b1 * mom[n] + (1 - b1) * g[n]
                vel[n] = b2 * vel[n] + (1 - b2) * g[n] ** 2
                mhat = mom[n] / (1 - b1 ** t)
                vhat = vel[n] / (1 - b2 ** t)
                ref[n] = (ref[n] - lr * mhat / (np.sqrt(vhat) + eps)).astype(np.float32).astype(np.float64)

        adam_step(m, state, g1, lr=lr)
        adam_step(m, state, g2, lr=lr)
        assert state.step == 2
        for n, p in m.params():
            np.testing.assert_array_equal(p.astype(np.float64), ref[n])

    def test_descends_quadratic(self):
        """Driving one weight toward a target with its true gradient:
        Adam closes the gap within 8000 steps (the second-moment
        memory slows the final approach)."""
        m = tiny_model(10)
        state = AdamState()
        zero = {n: np.zeros_like(p, dtype=np.float64) for n, p in m.params()}
        target = 3.0
        for _ in range(8000):
            g = {n: v.copy() for n, v in zero.items()}
            g["w1"][0, 0] = 2.0 * (float(m.w1[0, 0]) - target)
            adam_step(m, state, g, lr=1e-3)
        assert abs(float(m.w1[0, 0]) - target) < 1e-3


class TestSerialization:
    def test_round_trip_identical(self, tmp_path):
        m = tiny_model(11)
        path = tmp_path / "m.phi"
        save_model(m, path)
        back = load_model(path)
        assert back.dims == m.dims
        for (na, pa), (nb, pb) in zip(m.params(), back.params()):
            assert na == nb
            assert pa.tobytes() == pb.tobytes()

    def test_file_size_oracle(self, tmp_path):
        m = tiny_model(12)
        path = tmp_path / "m.phi"
        save_model(m, path)
        n_params = sum(p.size for _, p in m.params())
        assert path.stat().st_size == 20 + 4 * n_params

    def test_header_oracle(self, tmp_path):
        m = tiny_model(13)
        path = tmp_path / "m.phi"
        save_model(m, path)
        raw = path.read_bytes()
        assert raw[:20] == struct.pack("<4sIIII", b"PHI1", 1, 6, 5, 3)

    def test_save_load_save_identical(self, tmp_path):
        m = tiny_model(14)
        p1, p2 = tmp_path / "a.phi", tmp_path / "b.phi"
        save_model(m, p1)
        save_model(load_model(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.phi"
        save_model(tiny_model(), path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(raw)
        with pytest.raises(ValueError, match="magic"):
            load_model(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "t.phi"
        save_model(tiny_model(), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ValueError, match="truncated"):
            load_model(path)

    def test_trailing(self, tmp_path):
        path = tmp_path / "tr.phi"
        save_model(tiny_model(), path)
        path.write_bytes(path.read_bytes() + b"\x07")
        with pytest.raises(ValueError, match="trailing"):
            load_model(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.phi"
        save_model(tiny_model(), path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(raw)
        with pytest.raises(ValueError, match="version"):
            load_model(path)
