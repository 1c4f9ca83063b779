"""Importance-sampling and pCN chain estimator checks."""

import os

import numpy as np
import pytest

from gibbs_lsi.spectral import SpectralSpace, SpectralField
from gibbs_lsi.measures import (
    GibbsParams,
    lp_integral_block,
    make_log_weight_sharp,
    make_log_weight_soft,
    mass_block,
)
from gibbs_lsi.rng import RngStream
from gibbs_lsi.mc import (
    ChainConfig,
    DegenerateSampleError,
    chain_estimate,
    estimate_reweighted,
    log_partition,
    pcn_chain,
    tv_discrepancy,
)


def _zero_weight(U):
    return np.zeros(len(U))


def test_constant_observable_is_exactly_one():
    space = SpectralSpace(N=3)
    est = estimate_reweighted(space, lambda U: np.ones(len(U)), _zero_weight,
                              5000, RngStream(21, 0))
    assert est.value == 1.0
    assert est.std_error == 0.0
    assert est.estimator == "importance"
    assert est.n_samples == 5000


def test_mass_moment_under_base_measure():
    # N = 1: E mass = sum over |n| <= 1 of <n>^{-2} = 1/2 + 1 + 1/2 = 2
    space = SpectralSpace(N=1)
    est = estimate_reweighted(space, mass_block, _zero_weight, 100000,
                              RngStream(22, 0))
    assert abs(est.value - 2.0) < 3 * est.std_error
    assert est.std_error < 0.02
    # zero weight: every sample counts fully
    assert abs(est.ess - est.n_samples) < 1e-6


def test_sharp_support_indicator():
    space = SpectralSpace(N=2)
    params = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=2)
    lw = make_log_weight_sharp(space, None, params)
    est = estimate_reweighted(
        space, lambda U: (mass_block(U) <= params.K).astype(float), lw,
        20000, RngStream(23, 0))
    assert est.value == 1.0
    assert est.ess <= est.n_samples


def test_log_partition_zero_weight():
    space = SpectralSpace(N=3)
    est = log_partition(space, _zero_weight, 4000, RngStream(24, 0))
    assert est.value == 0.0
    assert est.std_error == 0.0


def test_log_partition_gaussian_mgf():
    # W = Re u_hat(0): Var = 1/2, so log E e^W = 1/4
    space = SpectralSpace(N=2)
    i0 = int(np.where(space.freqs == 0)[0][0])
    est = log_partition(space, lambda U: U[:, i0].real, 400000,
                        RngStream(25, 0))
    assert est.std_error < 0.01
    assert abs(est.value - 0.25) < 4 * est.std_error


def test_log_partition_sharp_stable_in_n():
    space = SpectralSpace(N=4)
    params = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=4)
    lw = make_log_weight_sharp(space, None, params)
    vals = [log_partition(space, lw, n, RngStream(26, k))
            for k, n in enumerate((10000, 100000, 400000))]
    for a, b in ((0, 1), (1, 2), (0, 2)):
        joint = np.hypot(vals[a].std_error, vals[b].std_error)
        assert abs(vals[a].value - vals[b].value) < 3 * joint


def test_pcn_zero_weight_is_iid_mu():
    # beta = 1 turns pCN into independent mu draws; W = 0 accepts everything
    space = SpectralSpace(N=2)
    cfg = ChainConfig(beta=1.0, burn_in=50, thinning=1, n_steps=4000,
                      tune=False)
    init = np.zeros(space.n_modes, complex)
    states = np.array([c for c, _ in pcn_chain(space, _zero_weight, cfg, init,
                                               RngStream(27, 0))])
    # every proposal accepted: consecutive states always change
    assert np.all(np.any(states[1:] != states[:-1], axis=1))
    # marginal covariance matches the base measure at 5 s.e.
    second = np.abs(states) ** 2
    mean = second.mean(axis=0)
    se = second.std(axis=0, ddof=1) / np.sqrt(len(states))
    assert np.all(np.abs(mean - 1.0 / space.jb2) < 5 * se)


def test_pcn_sharp_cutoff_stays_in_ball():
    space = SpectralSpace(N=2)
    params = GibbsParams(p=5.0, K=1.0, lam=0.0, R=1.0, N=2)
    lw = make_log_weight_sharp(space, None, params)
    cfg = ChainConfig(beta=0.3, burn_in=200, thinning=2, n_steps=1500,
                      tune=True)
    init = np.zeros(space.n_modes, complex)
    for coeffs, w in pcn_chain(space, lw, cfg, init, RngStream(28, 0)):
        assert np.isfinite(w)
        assert np.sum(np.abs(coeffs) ** 2) <= params.K + 1e-12


def test_chain_matches_importance_sampling():
    # E over the sharp-cutoff measure of the |u|^{p-2} integral, p = 5
    space = SpectralSpace(N=2)
    params = GibbsParams(p=5.0, K=1.0, lam=0.0, R=1.0, N=2)
    lw = make_log_weight_sharp(space, None, params)
    obs = lambda U: lp_integral_block(space, U, 3.0)
    imp = estimate_reweighted(space, obs, lw, 200000, RngStream(29, 0))
    cfg = ChainConfig(beta=0.25, burn_in=2000, thinning=5, n_steps=30000,
                      tune=True)
    cha = chain_estimate(space, obs, lw, cfg, np.zeros(space.n_modes, complex),
                         RngStream(29, 1))
    assert cha.estimator == "chain"
    joint = np.hypot(imp.std_error, cha.std_error)
    assert abs(imp.value - cha.value) < 5 * joint


def test_tv_identical_weights_is_zero():
    space = SpectralSpace(N=3)
    params = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=3)
    lw = make_log_weight_sharp(space, None, params)
    est = tv_discrepancy(space, lw, lw, 4000, RngStream(30, 0))
    assert est.value == 0.0


def test_tv_soft_to_sharp_shrinks_with_penalty():
    space = SpectralSpace(N=2)
    sharp = make_log_weight_sharp(
        space, None, GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=2))
    tvs = []
    for L in (0.5, 2.0, 8.0, 32.0):
        soft = make_log_weight_soft(
            space, None, GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, L=L, N=2))
        tvs.append(tv_discrepancy(space, soft, sharp, 60000,
                                  RngStream(31, 0)).value)
    assert all(b < a for a, b in zip(tvs, tvs[1:]))
    assert tvs[-1] < 0.1


def test_reproducible_across_worker_counts():
    space = SpectralSpace(N=3)
    params = GibbsParams(p=4.0, K=1.0, lam=0.0, R=1.0, N=3)
    lw = make_log_weight_sharp(space, None, params)
    results = []
    old = os.environ.get("GIBBS_LSI_THREADS")
    try:
        for threads in ("1", "4"):
            os.environ["GIBBS_LSI_THREADS"] = threads
            est = estimate_reweighted(space, mass_block, lw, 30000,
                                      RngStream(32, 0))
            results.append((est.value, est.std_error, est.ess))
    finally:
        if old is None:
            os.environ.pop("GIBBS_LSI_THREADS", None)
        else:
            os.environ["GIBBS_LSI_THREADS"] = old
    assert results[0] == results[1]


def test_all_zero_weights_raise():
    space = SpectralSpace(N=1)
    def impossible(U):
        return np.full(len(U), -np.inf)
    with pytest.raises(DegenerateSampleError):
        estimate_reweighted(space, mass_block, impossible, 100,
                            RngStream(33, 0))
    with pytest.raises(DegenerateSampleError):
        log_partition(space, impossible, 100, RngStream(33, 1))
