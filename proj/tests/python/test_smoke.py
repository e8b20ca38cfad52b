"""End-to-end checks of the python bindings against numpy."""

import math

import numpy as np
import pytest

import qcat

CAT = dict(a=2, b=1, c=3, d=2)


def test_version():
    assert qcat.__version__


def test_map_factories():
    lin = qcat.linear_map(**CAT)
    assert lin.is_linear
    assert lin.matrix == (2, 1, 3, 2)
    kicked = qcat.kicked_map(**CAT, form="momentum", k=1, amplitude=0.05)
    assert not kicked.is_linear
    with pytest.raises(qcat.ConfigError):
        qcat.linear_map(1, 0, 0, 1)  # not hyperbolic


def test_apply_roundtrip():
    m = qcat.kicked_map(**CAT)
    x, xi = qcat.apply(m, 0.2, 0.3, 5)
    back = qcat.apply(m, x, xi, -5)
    assert abs(back[0] - 0.2) < 1e-9 and abs(back[1] - 0.3) < 1e-9


def test_lyapunov():
    lam = qcat.lyapunov(qcat.linear_map(**CAT))
    assert abs(lam - math.log(2 + math.sqrt(3))) < 1e-12
    assert qcat.lyapunov(qcat.kicked_map(**CAT)) > 1.0


def test_dft_and_propagator_unitary():
    for N in (8, 37):
        F = qcat.dft_matrix(N)
        assert np.allclose(F @ F.conj().T, np.eye(N), atol=1e-12)
    U = qcat.propagator_matrix(qcat.kicked_map(**CAT), 32)
    assert np.allclose(U @ U.conj().T, np.eye(32), atol=1e-11)


def test_eigensystem():
    m = qcat.kicked_map(**CAT)
    phases, vecs = qcat.eigensystem(m, 32)
    assert phases.shape == (32,) and vecs.shape == (32, 32)
    assert np.all(np.diff(phases) >= 0)
    assert 0 <= phases[0] and phases[-1] < 2 * math.pi
    U = qcat.propagator_matrix(m, 32)
    resid = U @ vecs - vecs * np.exp(1j * phases)[None, :]
    assert np.abs(resid).max() < 1e-9


def test_husimi():
    psi = qcat.coherent(16, 0.25, 0.5)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    H = qcat.husimi_grid(psi, 32)
    assert H.shape == (32, 32)
    assert abs(H.sum() - 1) < 1e-12
    i, j = np.unravel_index(H.argmax(), H.shape)
    assert (i, j) == (8, 16)  # peak at the center (0.25, 0.5)


def test_refined_weights_sum_to_one():
    m = qcat.kicked_map(**CAT)
    phases, vecs = qcat.eigensystem(m, 16)
    psi = np.ascontiguousarray(vecs[:, 0])
    for depth in (1, 2, 3):
        w = qcat.refined_weights(m, psi, K=2, depth=depth)
        assert len(w) <= 2**depth
        assert all(len(k) == depth for k in w)
        assert abs(sum(w.values()) - 1) < 1e-10


def test_eup_level2_slack_nonnegative():
    m = qcat.kicked_map(**CAT)
    phases, vecs = qcat.eigensystem(m, 32)
    for k in range(0, 32, 8):
        rep = qcat.eup_level2(m, np.ascontiguousarray(vecs[:, k]), depth=2)
        assert rep["slack"] >= -1e-8
        lhs = rep["p_rho"] + rep["p_tau"] + rep["cross_log"]
        assert abs(rep["slack"] - lhs) < 1e-12


def test_dispersive_norm_bounded():
    m = qcat.kicked_map(**CAT)
    n0 = qcat.dispersive_norm(m, 32, [0])
    n01 = qcat.dispersive_norm(m, 32, [0, 1])
    assert 0 < n01 <= n0 + 1e-12 <= 1 + 1e-12


def test_entropy_rate():
    rows = qcat.entropy_rate(qcat.linear_map(**CAT), rows=1, cols=2,
                             samples=20000, depth=4, seed=7)
    assert [r["n"] for r in rows] == [1, 2, 3, 4]
    assert abs(rows[0]["H"] - math.log(2)) < 0.02
    for r in rows:
        assert r["rate"] == pytest.approx(r["H"] / r["n"])


def test_ehrenfest_clock():
    clock = qcat.ehrenfest(math.log(2 + math.sqrt(3)))
    assert clock.lambda_eps == pytest.approx(1.1 * clock.lambda_max)
    assert 1 <= clock.T(64) <= clock.two_T(64)


def test_entropy_bound_rows():
    m = qcat.kicked_map(**CAT)
    rows = qcat.entropy_bound(m, 32, K=2)
    assert len(rows) == 33  # one per eigenstate plus the control row
    assert sum(1 for r in rows if r["state"] == -1) == 1
    slacks = [r["slack"] for r in rows]
    assert slacks == sorted(slacks)
    for r in rows:
        assert r["slack"] == pytest.approx(r["entropy_rate"] - r["rhs"])
