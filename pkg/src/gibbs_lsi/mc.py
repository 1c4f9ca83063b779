"""Monte Carlo engine: importance-sampling and pCN-chain estimators.

All estimators are self-normalized: expectations under a Gibbs measure given
by a log-weight W relative to a reference Gaussian are ratios
E[F e^W]/E[e^W] over reference samples.  Proposals other than the reference
are supported through an exact log density ratio (see measures.MixtureProposal);
weights then become e^{W - log dq/dref}, which leaves every estimator exact.

Sampling fans out over numbered substreams and the reduction runs in a fixed
stream order, so results are bit-identical for any worker count.  The worker
count is capped by the GIBBS_LSI_THREADS environment variable (default 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .measures import MixtureProposal, mu_proposal
from .rng import RngStream
from .spectral import SpectralSpace

__all__ = [
    "McEstimate",
    "ChainConfig",
    "DegenerateSampleError",
    "estimate_reweighted",
    "estimate_ratio_custom",
    "log_partition",
    "log_partition_multi",
    "pcn_chain",
    "chain_estimate",
    "tv_discrepancy",
    "collect_streams",
]

_DEFAULT_STREAMS = 32
_BLOCK = 4096


class DegenerateSampleError(RuntimeError):
    """All importance weights vanished; the estimate is undefined."""


@dataclass
class McEstimate:
    value: float
    std_error: float
    ess: float
    n_samples: int
    estimator: str  # "importance" or "chain"

    def joint_se(self, other: "McEstimate") -> float:
        return math.hypot(self.std_error, other.std_error)

    def to_dict(self) -> dict:
        return {
            "value": self.value, "std_error": self.std_error,
            "ess": self.ess, "n_samples": self.n_samples,
            "estimator": self.estimator,
        }


@dataclass
class ChainConfig:
    beta: float = 0.25
    burn_in: int = 2000
    thinning: int = 5
    n_steps: int = 50000
    tune: bool = True
    target_acc: float = 0.25
    target_tol: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("pCN step beta must lie in (0, 1]")


def _thread_count() -> int:
    raw = os.environ.get("GIBBS_LSI_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def collect_streams(space: SpectralSpace, fn, n: int, rng: RngStream,
                    proposal: MixtureProposal | None = None,
                    n_streams: int = _DEFAULT_STREAMS) -> list[dict]:
    """Evaluate fn on proposal blocks over `n_streams` substreams.

    fn(U, log_ratio) -> dict of 1-D arrays (one entry per sample row);
    log_ratio is log dq/dref on each row (zeros for reference proposals).
    Returns the per-stream dicts in stream order regardless of scheduling.
    """
    if n < 2:
        raise ValueError("need n >= 2 samples")
    prop = proposal if proposal is not None else mu_proposal(space)
    counts = [n // n_streams + (1 if i < n % n_streams else 0)
              for i in range(n_streams)]

    def worker(i: int) -> dict:
        sub = rng.substream(i)
        parts: list[dict] = []
        left = counts[i]
        while left > 0:
            nb = min(_BLOCK, left)
            left -= nb
            U = prop.sample_block(nb, sub)
            lr = prop.log_ratio_to_base(U)
            parts.append(fn(U, lr))
        keys = parts[0].keys()
        return {k: np.concatenate([p[k] for p in parts]) for k in keys}

    workers = _thread_count()
    if workers == 1:
        return [worker(i) for i in range(n_streams)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(worker, range(n_streams)))


def _merged(streams: list[dict], key: str) -> np.ndarray:
    return np.concatenate([s[key] for s in streams])


def _ratio_from_arrays(lw: np.ndarray, F: np.ndarray, n: int) -> McEstimate:
    mx = np.max(lw)
    if not np.isfinite(mx):
        raise DegenerateSampleError("all importance weights are zero")
    w = np.exp(lw - mx)
    sw = float(np.sum(w))
    value = float(np.sum(w * F) / sw)
    resid = F - value
    se = float(np.sqrt(np.sum((w * resid) ** 2)) / sw)
    ess = float(sw * sw / np.sum(w * w))
    return McEstimate(value, se, ess, n, "importance")


def estimate_ratio_custom(space: SpectralSpace, fn, n: int, rng: RngStream,
                          proposal: MixtureProposal | None = None,
                          n_streams: int = _DEFAULT_STREAMS) -> McEstimate:
    """Self-normalized estimate where fn(U) -> (log_weight_rows, F_rows).

    The returned log-weights must be relative to the proposal's base
    measure; the proposal correction is applied here.
    """
    def wrapped(U, lr):
        lw, F = fn(U)
        return {"lw": lw - lr, "F": F}

    streams = collect_streams(space, wrapped, n, rng, proposal, n_streams)
    return _ratio_from_arrays(_merged(streams, "lw"), _merged(streams, "F"), n)


def estimate_reweighted(space: SpectralSpace, observable, log_weight, n: int,
                        rng: RngStream, proposal: MixtureProposal | None = None,
                        n_streams: int = _DEFAULT_STREAMS) -> McEstimate:
    """E_rho[F] for d rho proportional to e^{W} d(base), W = log_weight."""
    return estimate_ratio_custom(
        space, lambda U: (log_weight(U), observable(U)), n, rng, proposal,
        n_streams)


def log_partition(space: SpectralSpace, log_weight, n: int, rng: RngStream,
                  proposal: MixtureProposal | None = None,
                  n_streams: int = _DEFAULT_STREAMS) -> McEstimate:
    """log E_base[e^W] with delta-method standard error."""
    return log_partition_multi(space, [log_weight], n, rng, proposal,
                               n_streams)[0]


def log_partition_multi(space: SpectralSpace, log_weights: list, n: int,
                        rng: RngStream,
                        proposal: MixtureProposal | None = None,
                        n_streams: int = _DEFAULT_STREAMS) -> list[McEstimate]:
    """log E[e^{W_j}] for several weights over shared samples (CRN)."""
    keys = [f"lw{j}" for j in range(len(log_weights))]

    def fn(U, lr):
        return {k: wfn(U) - lr for k, wfn in zip(keys, log_weights)}

    streams = collect_streams(space, fn, n, rng, proposal, n_streams)
    out = []
    for k in keys:
        lw = _merged(streams, k)
        mx = np.max(lw)
        if not np.isfinite(mx):
            raise DegenerateSampleError("all importance weights are zero")
        w = np.exp(lw - mx)
        mean_w = float(np.mean(w))
        value = mx + math.log(mean_w)
        sd = float(np.std(w, ddof=1))
        se = sd / (math.sqrt(n) * mean_w)
        ess = float(np.sum(w) ** 2 / np.sum(w * w))
        out.append(McEstimate(value, se, ess, n, "importance"))
    return out


def tv_discrepancy(space: SpectralSpace, log_weight_a, log_weight_b, n: int,
                   rng: RngStream, proposal: MixtureProposal | None = None,
                   n_streams: int = _DEFAULT_STREAMS) -> McEstimate:
    """Total-variation distance between the two normalized reweightings.

    (1/2) E_base | e^{Wa}/Za - e^{Wb}/Zb | over shared samples; the standard
    error comes from the spread of per-stream contributions.
    """
    def fn(U, lr):
        return {"lwa": log_weight_a(U) - lr, "lwb": log_weight_b(U) - lr}

    streams = collect_streams(space, fn, n, rng, proposal, n_streams)
    lwa, lwb = _merged(streams, "lwa"), _merged(streams, "lwb")

    def norm_weights(lw):
        mx = np.max(lw)
        if not np.isfinite(mx):
            raise DegenerateSampleError("all importance weights are zero")
        w = np.exp(lw - mx)
        return w / np.sum(w), float(np.sum(w) ** 2 / np.sum(w * w))

    wa, ess_a = norm_weights(lwa)
    wb, ess_b = norm_weights(lwb)
    diff = np.abs(wa - wb)
    value = 0.5 * float(np.sum(diff))

    sizes = [s["lwa"].size for s in streams]
    edges = np.cumsum([0] + sizes)
    contrib = np.array([0.5 * float(np.sum(diff[a:b]))
                        for a, b in zip(edges[:-1], edges[1:])])
    se = float(np.std(contrib, ddof=1) * math.sqrt(len(contrib)))
    return McEstimate(value, se, min(ess_a, ess_b), n, "importance")


# ---------------------------------------------------------------------------
# preconditioned Crank-Nicolson

def pcn_chain(space: SpectralSpace, log_weight, config: ChainConfig,
              init_coeffs: np.ndarray, rng: RngStream):
    """Generator of (coeffs, log_weight) after burn-in, thinned.

    Proposal u' = sqrt(1-beta^2) u + beta xi with xi ~ (P_N)_* mu, accepted
    with probability min(1, e^{W(u') - W(u)}); mu-reversible, so the chain
    targets e^W dmu.  beta is tuned toward a 0.25 +- 0.05 acceptance rate
    during burn-in only, then frozen.
    """
    u = np.array(init_coeffs, dtype=complex)
    lw = float(log_weight(u[None, :])[0])
    if not np.isfinite(lw):
        raise ValueError("pCN initialization has zero weight")
    beta = config.beta
    window_acc = 0
    window_len = 0
    emitted = 0
    step = 0
    while emitted < config.n_steps:
        xi = rng.complex_normal(space.n_modes) / space.jb
        up = math.sqrt(1.0 - beta * beta) * u + beta * xi
        lwp = float(log_weight(up[None, :])[0])
        if math.log(rng.uniform(1)[0]) < lwp - lw:
            u, lw = up, lwp
            window_acc += 1
        window_len += 1
        step += 1
        in_burn = step <= config.burn_in
        if config.tune and in_burn and window_len == 100:
            rate = window_acc / window_len
            if rate > config.target_acc + config.target_tol:
                beta = min(1.0, beta * 1.1)
            elif rate < config.target_acc - config.target_tol:
                beta = max(1e-4, beta * 0.9)
            window_acc = window_len = 0
        if not in_burn and (step - config.burn_in) % config.thinning == 0:
            emitted += 1
            yield u.copy(), lw


def chain_estimate(space: SpectralSpace, observable, log_weight,
                   config: ChainConfig, init_coeffs: np.ndarray,
                   rng: RngStream, n_batches: int = 32):
    """Chain mean of a (block-style) observable with batch-means errors."""
    vals = np.empty(config.n_steps)
    for i, (u, _) in enumerate(pcn_chain(space, log_weight, config,
                                         init_coeffs, rng)):
        vals[i] = observable(u[None, :])[0]
    nb = min(n_batches, config.n_steps)
    usable = (config.n_steps // nb) * nb
    batches = vals[:usable].reshape(nb, -1).mean(axis=1)
    value = float(vals.mean())
    se = float(np.std(batches, ddof=1) / math.sqrt(nb))
    var = float(np.var(vals, ddof=1))
    ess = float(min(config.n_steps, var / se**2)) if se > 0 else float(config.n_steps)
    return McEstimate(value, se, ess, config.n_steps, "chain")
