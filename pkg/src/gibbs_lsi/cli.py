"""Command-line entry point: config parsing, dispatch, artifact output.

Configuration comes from defaults, then an optional flat `key = value` file,
then flags (highest precedence).  The fully resolved config is echoed to the
output directory before any computation so every run is reproducible from
its own artifacts.  Exit codes: 0 success, 1 assertion/check failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .boue_dupuis import (BdObjective, LinearPotential, OptimizerConfig,
                          SoftPotential, TimeGrid, bd_objective, bd_optimize,
                          epsilon_optimizer_transfer, exact_linear_optimizer)
from .dim2 import GridTooSmallError
from .experiments import (ScalingFamily, blowup_scan, convexity_scan,
                          hessian_of_v_check, lsi_bracket_dim2, v_t_scan)
from .hessian import bakry_emery_bound, min_eigenvalue
from .mc import DegenerateSampleError
from .measures import (GibbsParams, mass_block, sample_mu_bar_block,
                       sample_mu_block)
from .reporting import dump_config, load_config, parse_scalar, write_csv, write_jsonl
from .rng import RngStream
from .spectral import SpectralField, SpectralSpace

__all__ = ["main", "validate_config", "ConfigError"]


class ConfigError(Exception):
    pass


_COMMANDS = ("sample", "hessian", "convexity-scan", "lsi-bracket",
             "bd-optimize", "bd-transfer", "blowup-scan", "hessian-of-v",
             "vt-scan")

_EXPERIMENT_ID = {
    "sample": "sample",
    "hessian": "hessian",
    "convexity-scan": "convexity_scan",
    "lsi-bracket": "lsi_bracket",
    "bd-optimize": "bd_optimize",
    "bd-transfer": "bd_transfer",
    "blowup-scan": "blowup_scan",
    "hessian-of-v": "hessian_of_v",
    "vt-scan": "v_t_scan",
}

_GLOBAL_DEFAULTS = {
    "p": 4.0, "K": 1.0, "lam": 1.0, "R": 1.0, "L": 1.0, "eps0": 0.1,
    "sigma": None, "N": 8, "q_os": 4, "n": 100000, "seed": 0,
    "out": None, "format": "both",
}

_COMMAND_DEFAULTS = {
    "sample": {"n": 16, "t": math.inf},
    "hessian": {"n_random": 3},
    "convexity-scan": {"n_points": 1000},
    "lsi-bracket": {"grid_resolution": 20001, "lam_equiv": 0.5},
    "bd-optimize": {"potential": "linear", "a": 1.0, "kind": "constant",
                    "T": 64, "epochs": 150, "panel": 2048, "M": 0},
    "bd-transfer": {"a": 1.0, "T": 64, "epochs": 120, "panel": 2048},
    "blowup-scan": {"p": 5.0, "M": "1,2,4,8", "n": 400000, "no_chain": False,
                    "sensitivity": False, "n_sens": 100000},
    "hessian-of-v": {"p": 5.0, "M": 4, "R": 8.0, "eps_fd": 0.05, "N": None,
                     "w_mode": 0},
    "vt-scan": {"t": "0,0.25,0.5,1,2,4,8,inf", "M": 1, "N": 32, "n": 50000},
}

_VALUE_FLAGS = ("p", "K", "lam", "R", "L", "eps0", "sigma", "N", "q_os", "n",
                "seed", "out", "format", "t", "M", "a", "kind", "T", "epochs",
                "panel", "n_points", "grid_resolution", "lam_equiv", "eps_fd",
                "potential", "n_random", "w_mode", "n_sens")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbs-lsi",
        description="Gibbs-measure laboratory: sampling, convexity scans, "
                    "log-Sobolev brackets, and variational benchmarks on the "
                    "torus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="flat key = value file; flags override it")
        for key in _VALUE_FLAGS:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key,
                            default=None)
        sp.add_argument("--sensitivity", action="store_true", default=None)
        sp.add_argument("--no-chain", dest="no_chain", action="store_true",
                        default=None)
    return parser


def _parse_list(text, typ):
    if isinstance(text, (list, tuple)):
        return [typ(v) for v in text]
    toks = [t for t in str(text).replace(";", ",").split(",") if t.strip()]
    try:
        return [typ(parse_scalar(t.strip())) for t in toks]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed list {text!r}") from exc


def validate_config(raw: dict, command: str) -> dict:
    """Resolve and range-check a run configuration.

    Raises ConfigError naming the violated invariant; the caller maps that
    to exit code 2.
    """
    cfg = dict(_GLOBAL_DEFAULTS)
    cfg.update(_COMMAND_DEFAULTS.get(command, {}))
    for key, val in raw.items():
        if val is None:
            continue
        cfg[key] = parse_scalar(val) if isinstance(val, str) else val

    def want(key, typ):
        if cfg.get(key) is None:
            return None
        try:
            cfg[key] = typ(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a {typ.__name__}")
        return cfg[key]

    p = want("p", float)
    if not 2.0 <= p < 6.0:
        raise ConfigError("p must lie in [2, 6); the boundary p = 6 is excluded")
    sigma = want("sigma", float)
    if sigma is not None and not sigma > p / 2.0 + 1.0:
        raise ConfigError(
            f"sigma must exceed p/2 + 1 = {p / 2.0 + 1.0} (strict inequality)")
    if want("K", float) <= 0:
        raise ConfigError("K must be > 0")
    if want("lam", float) < 0:
        raise ConfigError("lam must be >= 0")
    if want("R", float) < 0:
        raise ConfigError("R must be >= 0")
    if want("L", float) < 0:
        raise ConfigError("L must be >= 0")
    if not 0.0 < want("eps0", float) < 1.0:
        raise ConfigError("eps0 must lie in (0, 1)")
    if cfg.get("N") is not None and want("N", int) < 0:
        raise ConfigError("N must be >= 0")
    if want("q_os", int) < 2:
        raise ConfigError("q_os must be >= 2")
    if want("n", int) < 2:
        raise ConfigError("n must be >= 2")
    want("seed", int)
    if cfg["format"] not in ("jsonl", "csv", "both"):
        raise ConfigError("format must be one of jsonl, csv, both")

    if command == "convexity-scan":
        if not 2.0 <= p <= 4.0:
            raise ConfigError("convexity scan requires p in [2, 4]")
        if not cfg["R"] > 1.0 / 16.0:
            raise ConfigError("convexity scan requires R > 1/16")
        if want("n_points", int) < 1:
            raise ConfigError("n_points must be >= 1")
    if command == "lsi-bracket":
        if want("grid_resolution", int) < 101:
            raise ConfigError("grid_resolution must be >= 101")
        if want("lam_equiv", float) < 0:
            raise ConfigError("lam_equiv must be >= 0")
    if command in ("bd-optimize", "bd-transfer"):
        if want("T", int) < 1:
            raise ConfigError("T must be >= 1")
        if want("epochs", int) < 1:
            raise ConfigError("epochs must be >= 1")
        if want("panel", int) < 2:
            raise ConfigError("panel must be >= 2")
        want("a", float)
        if command == "bd-optimize":
            if cfg["kind"] not in ("constant", "time_dependent"):
                raise ConfigError("kind must be constant or time_dependent")
            if cfg["potential"] not in ("linear", "soft"):
                raise ConfigError("potential must be linear or soft")
            want("M", int)
    if command == "blowup-scan":
        if not 4.0 < p < 6.0:
            raise ConfigError("blow-up scan requires p in (4, 6)")
        cfg["M_list"] = _parse_list(cfg["M"], int)
        if not cfg["M_list"] or min(cfg["M_list"]) < 1:
            raise ConfigError("M must be a list of integers >= 1")
        want("n_sens", int)
    if command == "hessian-of-v":
        if want("M", int) < 0:
            raise ConfigError("M must be >= 0")
        if not want("eps_fd", float) > 0:
            raise ConfigError("eps_fd must be > 0")
        if want("w_mode", int) is None:
            pass
    if command == "vt-scan":
        cfg["t_list"] = _parse_list(cfg["t"], float)
        if not cfg["t_list"] or min(cfg["t_list"]) < 0:
            raise ConfigError("t must be a list of values >= 0")
        want("M", int)
    if command == "sample":
        t = cfg["t"]
        if not isinstance(t, (int, float)) or t < 0:
            raise ConfigError("t must be a number >= 0 (inf for the base measure)")
    if command == "hessian" and want("n_random", int) < 0:
        raise ConfigError("n_random must be >= 0")

    cfg["experiment"] = _EXPERIMENT_ID[command]
    if cfg.get("out") is None:
        cfg["out"] = os.path.join("gibbs-lsi-out", cfg["experiment"])
    return cfg


def _gibbs_params(cfg: dict, N: int | None = None) -> GibbsParams:
    try:
        return GibbsParams(p=cfg["p"], K=cfg["K"], lam=cfg["lam"], R=cfg["R"],
                           L=cfg["L"], eps0=cfg["eps0"], sigma=cfg["sigma"],
                           N=cfg["N"] if N is None else N)
    except ValueError as exc:
        raise ConfigError(str(exc))


# ---------------------------------------------------------------------------
# command bodies: return (rows, summary, passes)

def _run_sample(cfg):
    space = SpectralSpace(cfg["N"], cfg["q_os"])
    rng = RngStream(cfg["seed"])
    t = float(cfg["t"])
    if math.isinf(t):
        U = sample_mu_block(space, cfg["n"], rng)
        expected = float(np.sum(1.0 / space.jb2))
    else:
        U = sample_mu_bar_block(space, t, cfg["n"], rng)
        expected = float(np.sum(-np.expm1(-t * space.jb2) / space.jb2))
    masses = mass_block(U)
    rows = []
    for i in range(U.shape[0]):
        inter = np.empty(2 * space.n_modes)
        inter[0::2] = U[i].real
        inter[1::2] = U[i].imag
        rows.append({"sample": i, "t": t, "mass": float(masses[i]),
                     "coeffs": inter.tolist()})
    summary = {"mean_mass": float(masses.mean()),
               "expected_mass": expected,
               "mass_se": float(masses.std(ddof=1) / math.sqrt(len(masses)))
               if len(masses) > 1 else 0.0}
    return rows, summary, {}


def _run_hessian(cfg):
    space = SpectralSpace(cfg["N"], cfg["q_os"])
    params = _gibbs_params(cfg)
    rng = RngStream(cfg["seed"])
    points = [("zero", np.zeros(space.n_modes, dtype=complex))]
    for frac in (0.5, 1.0):
        c = np.zeros(space.n_modes, dtype=complex)
        c[space.N] = frac * math.sqrt(cfg["K"])
        points.append((f"constant_{frac}", c))
    draws = sample_mu_block(space, max(cfg["n_random"], 1), rng)
    for i in range(cfg["n_random"]):
        points.append((f"mu_sample_{i}", draws[i]))
    rows = []
    for label, c in points:
        rep = min_eigenvalue(SpectralField(space, c), params)
        rows.append({
            "point": label, "min_eigenvalue": rep.min_eigenvalue,
            "method": rep.method, "residual": rep.residual,
            "converged": rep.converged,
            "ls_bound": bakry_emery_bound(rep.min_eigenvalue),
        })
    summary = {"min_over_points": min(r["min_eigenvalue"] for r in rows)}
    passes = {"all_converged": all(r["converged"] for r in rows)}
    return rows, summary, passes


def _report_to_output(report):
    summary = {"params": report.params, "fitted": report.fitted,
               "passes": report.passes, "notes": report.notes}
    return report.to_records(), summary, report.passes


def _run_convexity(cfg):
    report = convexity_scan(cfg["p"], cfg["K"], RngStream(cfg["seed"]),
                            R=cfg["R"], N=cfg["N"], n_points=cfg["n_points"],
                            q_os=cfg["q_os"])
    return _report_to_output(report)


def _run_lsi_bracket(cfg):
    params = _gibbs_params(cfg, N=0)
    report = lsi_bracket_dim2(params, cfg["grid_resolution"],
                              cfg["lam_equiv"])
    return _report_to_output(report)


def _run_bd_optimize(cfg):
    space = SpectralSpace(cfg["N"], cfg["q_os"])
    grid = TimeGrid(cfg["T"])
    rng = RngStream(cfg["seed"])
    if cfg["potential"] == "linear":
        ell = np.zeros(space.n_modes, dtype=complex)
        ell[space.N] = cfg["a"]
        pot = LinearPotential(space, ell)
        exact = pot.exact_log_partition()
    else:
        fam = ScalingFamily(cfg["K"])
        phi = fam.field(cfg["M"], space) if cfg["M"] > 0 else None
        pot = SoftPotential(space, phi, _gibbs_params(cfg))
        exact = None
    obj = BdObjective(pot, space, grid, cfg["N"])
    opt = OptimizerConfig(epochs=cfg["epochs"], panel=cfg["panel"])
    drift, final, trace, eps = bd_optimize(obj, cfg["kind"], opt, rng)
    rows = [{"record": "trace", "epoch": tr.epoch, "objective": tr.objective,
             "std_error": tr.std_error, "h1_cost": tr.h1_cost,
             "step_size": tr.step_size} for tr in trace]
    final_row = {"record": "final", "value": final.value,
                 "std_error": final.std_error, "epsilon": eps}
    passes = {}
    if exact is not None:
        final_row["exact"] = exact
        final_row["abs_error"] = abs(final.value - exact)
        passes["attains_exact"] = bool(
            abs(final.value - exact) <= 3.0 * final.std_error + 1e-3)
    else:
        first = trace[0].objective
        passes["improved_over_start"] = bool(
            final.value >= first - 2.0 * final.std_error)
    rows.append(final_row)
    summary = {"value": final.value, "std_error": final.std_error,
               "epsilon": eps, "exact": exact, "passes": passes}
    return rows, summary, passes


def _run_bd_transfer(cfg):
    space = SpectralSpace(cfg["N"], cfg["q_os"])
    grid = TimeGrid(cfg["T"])
    rng = RngStream(cfg["seed"])
    ell = np.zeros(space.n_modes, dtype=complex)
    ell[space.N] = cfg["a"]
    pot = LinearPotential(space, ell)
    obj = BdObjective(pot, space, grid, cfg["N"])
    drift = exact_linear_optimizer(space, grid, ell)
    exact = pot.exact_log_partition()
    attained = bd_objective(drift, obj, rng.substream(0), n=cfg["n"])
    eps = math.sqrt(max(exact - attained.value, 0.0)
                    + 2.0 * attained.std_error)
    rows = []
    oks = []
    for i, c in enumerate((-1.0, -0.5, 0.0, 0.5, 1.0)):
        idx = space.N  # mode n = 0

        def F(U, c=c, idx=idx):
            return (U[:, idx].real <= c).astype(float)

        rep = epsilon_optimizer_transfer(drift, obj, F, eps,
                                         rng.substream(10 + i), n=cfg["n"])
        gap = abs(rep.lhs.value - rep.rhs.value)
        rows.append({"observable": f"indicator_re_u0_le_{c}",
                     "lhs": rep.lhs.value, "lhs_se": rep.lhs.std_error,
                     "rhs": rep.rhs.value, "rhs_se": rep.rhs.std_error,
                     "bound": rep.bound, "gap": gap, "ok": rep.ok})
        oks.append(rep.ok)
    summary = {"epsilon": eps, "attained": attained.value,
               "exact": exact, "n_observables": len(rows)}
    return rows, summary, {"transfer_bound_holds": all(oks)}


def _run_blowup(cfg):
    report = blowup_scan(
        cfg["p"], cfg["K"], cfg["M_list"], RngStream(cfg["seed"]),
        eps0=cfg["eps0"], n_per_point=cfg["n"],
        chain_check=not bool(cfg.get("no_chain")),
        sens_eps0=(0.05, 0.2) if cfg.get("sensitivity") else (),
        n_sens=cfg["n_sens"])
    rows, summary, passes = _report_to_output(report)
    for row in rows:
        row["record"] = "point"
    slope_row = {"record": "summary", "slope": report.fitted["slope"],
                 "slope_se": report.fitted["slope_se"],
                 "intercept": report.fitted["intercept"],
                 "c_theta0": report.fitted["c_theta0"],
                 "c_log_partition": report.fitted["c_log_partition"],
                 "gn_constant": report.fitted["gn_constant"]}
    rows.append(slope_row)
    return rows, summary, passes


def _run_hessian_of_v(cfg):
    fam = ScalingFamily(cfg["K"])
    M = cfg["M"]
    N = cfg["N"]
    if N is None:
        N = fam.default_truncation(M) if M > 0 else 32
    space = SpectralSpace(N, cfg["q_os"])
    phi = (fam.field(M, space) if M > 0
           else SpectralField.zero(space))
    if cfg["w_mode"] == 0:
        w = SpectralField.constant(space, 1.0)
    else:
        w = SpectralField.mode(space, cfg["w_mode"], 1.0)
    params = _gibbs_params(cfg, N=N)
    report = hessian_of_v_check(phi, w, params, cfg["n"],
                                RngStream(cfg["seed"]), eps_fd=cfg["eps_fd"])
    return _report_to_output(report)


def _run_vt(cfg):
    fam = ScalingFamily(cfg["K"])
    space = SpectralSpace(cfg["N"], cfg["q_os"])
    phi = (fam.field(cfg["M"], space) if cfg["M"] > 0
           else SpectralField.zero(space))
    params = _gibbs_params(cfg, N=cfg["N"])
    report = v_t_scan(phi, cfg["t_list"], params, cfg["n"],
                      RngStream(cfg["seed"]))
    return _report_to_output(report)


_RUNNERS = {
    "sample": _run_sample,
    "hessian": _run_hessian,
    "convexity-scan": _run_convexity,
    "lsi-bracket": _run_lsi_bracket,
    "bd-optimize": _run_bd_optimize,
    "bd-transfer": _run_bd_transfer,
    "blowup-scan": _run_blowup,
    "hessian-of-v": _run_hessian_of_v,
    "vt-scan": _run_vt,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    raw = {}
    if args.config is not None:
        try:
            raw.update(load_config(args.config))
        except (OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    for key in vars(args):
        if key in ("command", "config"):
            continue
        val = getattr(args, key)
        if val is not None:
            raw[key] = val

    try:
        cfg = validate_config(raw, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    echo = {k: v for k, v in cfg.items()
            if k not in ("M_list", "t_list") and v is not None}
    dump_config(os.path.join(outdir, "config.txt"), echo)

    try:
        rows, summary, passes = _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GridTooSmallError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateSampleError as exc:
        print(f"estimation failure: {exc}", file=sys.stderr)
        return 1

    exp = cfg["experiment"]
    for row in rows:
        row.setdefault("seed", cfg["seed"])
    if cfg["format"] in ("jsonl", "both"):
        records = [dict(row) for row in rows]
        records.append({"record": "run_summary", "experiment": exp,
                        "seed": cfg["seed"], **summary})
        write_jsonl(os.path.join(outdir, f"{exp}.jsonl"), records)
    if cfg["format"] in ("csv", "both"):
        write_csv(os.path.join(outdir, f"{exp}.csv"), rows)

    ok = all(passes.values()) if passes else True
    for name, val in sorted(passes.items()):
        print(f"{exp}: {name}: {'pass' if val else 'FAIL'}")
    print(f"{exp}: {'ok' if ok else 'FAILED'} ({len(rows)} rows) -> {outdir}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
