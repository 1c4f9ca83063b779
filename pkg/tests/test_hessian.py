"""Gradient / Hessian checks for the regularized Hamiltonian."""

import numpy as np

from gibbs_lsi.spectral import SpectralSpace, SpectralField, real_inner, sobolev_norms
from gibbs_lsi.measures import GibbsParams, sample_mu, mass
from gibbs_lsi.rng import RngStream
from gibbs_lsi.hessian import (
    NO_BOUND,
    bakry_emery_bound,
    dense_hessian_matrix,
    grad_H,
    hessian_apply_exact,
    hessian_form_exact,
    hessian_form_majorant,
    lambda_star,
    min_eigenvalue,
    reg_hamiltonian,
    sobolev_chain_constant,
)


def _random_field(space, rng, scale=1.0):
    g = rng.complex_normal(space.n_modes)
    return SpectralField(space, scale * g / space.jb)


def _away_from_kink(u, K, pad=0.15):
    return abs(mass(u) - K) > pad


def test_grad_at_zero_and_constant():
    space = SpectralSpace(N=4)
    params = GibbsParams(p=4.0, K=2.0, lam=0.7, R=1.0, N=4)
    zero = SpectralField(space, np.zeros(space.n_modes, complex))
    assert np.max(np.abs(grad_H(zero, params).coeffs)) == 0.0

    # constant field inside the mass cutoff: grad = (1 + 2*lam) c - |c|^2 c
    c = 0.8 - 0.3j
    u = SpectralField(space, np.where(space.freqs == 0, c, 0.0).astype(complex))
    g = grad_H(u, params).coeffs
    expected = (1.0 + 2.0 * params.lam) * c - abs(c) ** 2 * c
    assert abs(g[space.freqs == 0][0] - expected) < 1e-12
    assert np.max(np.abs(g[space.freqs != 0])) < 1e-12


def test_grad_matches_directional_derivative():
    space = SpectralSpace(N=6)
    rng = RngStream(11, 0)
    params = GibbsParams(p=4.0, K=1.0, lam=0.5, R=1.3, N=6)
    eps = 1e-5
    checked = 0
    while checked < 8:
        u = _random_field(space, rng)
        if not _away_from_kink(u, params.K):
            continue
        w = _random_field(space, rng)
        up = SpectralField(space, u.coeffs + eps * w.coeffs)
        um = SpectralField(space, u.coeffs - eps * w.coeffs)
        fd = (reg_hamiltonian(up, params) - reg_hamiltonian(um, params)) / (2 * eps)
        gw = real_inner(grad_H(u, params), w)
        assert abs(fd - gw) < 1e-6 * (1.0 + abs(gw))
        checked += 1


def test_form_at_zero_field():
    space = SpectralSpace(N=5)
    rng = RngStream(12, 0)
    zero = SpectralField(space, np.zeros(space.n_modes, complex))
    # p < 4 regularizes |u| by delta = 1e-8, so allow O(delta^{p-2}) slack
    for p, tol in ((4.0, 1e-10), (3.0, 1e-6)):
        params = GibbsParams(p=p, K=1.0, lam=0.4, R=2.0, N=5)
        for _ in range(4):
            w = _random_field(space, rng)
            l2, h1 = sobolev_norms(w)
            expected = 2.0 * params.lam * l2 + h1
            assert abs(hessian_form_exact(zero, w, params) - expected) < tol
            assert abs(hessian_form_majorant(zero, w, params) - expected) < tol


def test_form_constant_field_single_mode():
    # u = c, w = e^{inx}: exact form 2*lam + <n>^2 - 2|c|^2,
    # majorant version 2*lam + <n>^2 - 3|c|^2 (p = 4, |c|^2 <= K)
    space = SpectralSpace(N=5)
    params = GibbsParams(p=4.0, K=2.0, lam=0.6, R=1.0, N=5)
    c = 0.7 + 0.4j
    u = SpectralField(space, np.where(space.freqs == 0, c, 0.0).astype(complex))
    for n in (1, 3, -2):
        w = SpectralField(space, np.where(space.freqs == n, 1.0, 0.0).astype(complex))
        jb2 = 1.0 + n * n
        fe = hessian_form_exact(u, w, params)
        fm = hessian_form_majorant(u, w, params)
        assert abs(fe - (2 * params.lam + jb2 - 2 * abs(c) ** 2)) < 1e-10
        assert abs(fm - (2 * params.lam + jb2 - 3 * abs(c) ** 2)) < 1e-10


def test_self_adjointness():
    space = SpectralSpace(N=6)
    rng = RngStream(13, 0)
    for p in (4.0, 3.0, 2.5):
        params = GibbsParams(p=p, K=1.0, lam=0.3, R=1.5, N=6)
        for _ in range(5):
            u = sample_mu(space, rng)
            w1 = _random_field(space, rng)
            w2 = _random_field(space, rng)
            a = real_inner(hessian_apply_exact(u, w1, params), w2)
            b = real_inner(w1, hessian_apply_exact(u, w2, params))
            assert abs(a - b) < 1e-10 * (1.0 + abs(a))


def test_finite_difference_hessian():
    space = SpectralSpace(N=6)
    rng = RngStream(14, 0)
    eps = 1e-4
    for p in (4.0, 5.0):
        params = GibbsParams(p=p, K=1.0, lam=0.5, R=1.2, N=6)
        checked = 0
        while checked < 10:
            u = sample_mu(space, rng)
            if not _away_from_kink(u, params.K):
                continue
            w = _random_field(space, rng)
            up = SpectralField(space, u.coeffs + eps * w.coeffs)
            um = SpectralField(space, u.coeffs - eps * w.coeffs)
            fd = (reg_hamiltonian(up, params) - 2 * reg_hamiltonian(u, params)
                  + reg_hamiltonian(um, params)) / eps**2
            form = hessian_form_exact(u, w, params)
            assert abs(fd - form) < 1e-4 * (1.0 + abs(form))
            checked += 1


def test_majorant_dominates_exact_form():
    space = SpectralSpace(N=6)
    rng = RngStream(15, 0)
    for p in (4.0, 3.0, 2.5):
        params = GibbsParams(p=p, K=1.0, lam=0.3, R=1.2, N=6)
        for _ in range(100):
            u = sample_mu(space, rng)
            w = _random_field(space, rng)
            fe = hessian_form_exact(u, w, params)
            fm = hessian_form_majorant(u, w, params)
            assert fm <= fe + 1e-10 * max(1.0, abs(fe))


def test_min_eigenvalue_at_zero():
    params1 = GibbsParams(p=4.0, K=1.0, lam=1.0, R=1.0, N=1)
    space1 = SpectralSpace(N=1)
    zero1 = SpectralField(space1, np.zeros(space1.n_modes, complex))
    rep = min_eigenvalue(zero1, params1)
    assert rep.method == "dense"
    assert abs(rep.min_eigenvalue - 3.0) < 1e-10

    params0 = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=4)
    space4 = SpectralSpace(N=4)
    zero4 = SpectralField(space4, np.zeros(space4.n_modes, complex))
    rep0 = min_eigenvalue(zero4, params0)
    assert abs(rep0.min_eigenvalue - 1.0) < 1e-10


def test_min_eigenvalue_report_invariants():
    space = SpectralSpace(N=6)
    rng = RngStream(16, 0)
    params = GibbsParams(p=4.0, K=1.0, lam=0.8, R=1.5, N=6)
    u = sample_mu(space, rng)
    rep = min_eigenvalue(u, params, method="dense")
    v = rep.attaining_direction
    hv = hessian_apply_exact(u, v, params)
    resid = SpectralField(space, hv.coeffs - rep.min_eigenvalue * v.coeffs)
    l2, _ = sobolev_norms(resid)
    assert np.sqrt(l2) <= rep.residual + 1e-12
    assert rep.residual <= 1e-8 * max(1.0, abs(rep.min_eigenvalue))


def test_dense_vs_iterative():
    space = SpectralSpace(N=8)
    rng = RngStream(17, 0)
    params = GibbsParams(p=4.0, K=1.0, lam=0.6, R=1.1, N=8)
    for _ in range(3):
        u = sample_mu(space, rng)
        d = min_eigenvalue(u, params, method="dense")
        it = min_eigenvalue(u, params, method="iterative", rng=rng)
        assert it.converged
        assert abs(d.min_eigenvalue - it.min_eigenvalue) < 1e-6


def test_dense_matrix_is_symmetric():
    space = SpectralSpace(N=4)
    rng = RngStream(18, 0)
    params = GibbsParams(p=5.0, K=1.0, lam=0.2, R=1.0, N=4)
    u = sample_mu(space, rng)
    A = dense_hessian_matrix(u, params)
    assert A.shape == (2 * space.n_modes, 2 * space.n_modes)
    assert np.max(np.abs(A - A.T)) < 1e-10


def test_bakry_emery_bound():
    assert bakry_emery_bound(1.0) == 2.0
    assert bakry_emery_bound(2.0) == 1.0
    assert bakry_emery_bound(0.0) == NO_BOUND
    assert bakry_emery_bound(-3.0) == NO_BOUND


def test_lambda_star():
    params = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=4)
    # frozen oracle: dense 1-D grid of (m-1)_+^7 - (1+m)^4 over m in [0, 60]
    assert abs(lambda_star(params, 1.0) - 147.5804714553) < 1e-4
    assert lambda_star(params, 1e-12) < 1e-9
    # nondecreasing in C and in K
    vals_c = [lambda_star(params, c) for c in (0.25, 0.5, 1.0, 2.0)]
    assert all(a <= b + 1e-12 for a, b in zip(vals_c, vals_c[1:]))
    vals_k = [lambda_star(GibbsParams(p=4.0, K=k, lam=0.0, R=1.0, N=4), 1.0)
              for k in (0.5, 1.0, 2.0)]
    assert all(a <= b + 1e-12 for a, b in zip(vals_k, vals_k[1:]))


def test_sobolev_chain_constant():
    space = SpectralSpace(N=6)
    rng = RngStream(19, 0)
    # p = 2: (p-1)|u|^0 = 1 <= (1+mass)^4, so C = 1 suffices
    c2 = sobolev_chain_constant(space, 2.0, rng=rng, n_random=100, n_ascent=1)
    assert c2 <= 1.0 + 1e-9

    c4 = sobolev_chain_constant(space, 4.0, rng=rng, n_random=100, n_ascent=2)
    assert c4 > 0.0
    # battery: inequality holds with the returned constant
    for _ in range(200):
        u = sample_mu(space, rng)
        w = _random_field(space, rng)
        l2w, h1w = sobolev_norms(w)
        lhs = 3.0 * space.quad_mean(np.abs(u.grid_values()) ** 2
                                    * np.abs(w.grid_values()) ** 2)
        rhs = c4 * (1.0 + mass(u)) ** 4 * l2w + 0.5 * h1w
        assert lhs <= rhs * (1.0 + 1e-9)
    # larger H1 allowance never needs a larger constant
    rng2 = RngStream(19, 0)
    c4_full = sobolev_chain_constant(space, 4.0, rng=rng2, n_random=100,
                                     n_ascent=2, h1_allowance=1.0)
    assert c4_full <= c4 + 1e-12
