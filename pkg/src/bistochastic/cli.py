"""Command line: ``bistochastic {analyze,simulate,verify,gen}``.

Exit codes: 0 success, 1 a bound was violated, 2 invalid input,
3 contraction audit inconclusive. Errors are printed to stderr as JSON.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    certify,
    identity_channel,
    make_amplitude_damping,
    make_depolarizing,
    make_random_unitary_mixture,
    tensor_product,
)
from .contraction import (
    DEFAULT_RESTARTS,
    PAIR_OPTIMIZATION,
    ContractionEstimate,
    estimate_contraction_rate,
    exact_contraction_rate,
    product_rate,
    sample_ratio_audit,
)
from .dynamics import (
    GAP,
    MAIN,
    SHARP,
    check_convergence_envelope,
    check_main_bound,
    check_main_bound_batch,
    check_sharp_bound,
    check_sharp_bound_batch,
    check_streater_bound,
    check_streater_bound_batch,
    in_sharp_class,
    iterate_orbit,
)
from .errors import BistochasticError, InvalidInput, NotErgodic
from .io import channel_to_dict, dump_channel, dumps, encode_matrix, load_channel, load_state, orbit_csv
from .matrix import DEFAULT_TOL, Tolerances, maximally_mixed, projector, random_density
from .qubit import king_ruskai_form, qubit_gap_exact
from .spectral import spectral_gap

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 1, 2, 3

FAMILIES = ("depolarizing", "unitary_mixture", "amplitude_damping", "identity")
VERIFY_FAMILIES = ("qubit_random", "depolarizing", "unitary_mixture", "qubit_product")


@dataclass
class RunConfig:
    command: str
    tolerances: Tolerances = DEFAULT_TOL
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    n_max: int = 10
    trials: int = 1000
    workers: int = 1
    channel: str | None = None
    family: str | None = None
    dim: int = 2
    p: float | None = None
    k: int = 4
    state: str = "pure_0"
    out: str | None = None
    summary: str | None = None
    count: int = 10
    states: int = 100
    p_grid: tuple = field(default_factory=lambda: tuple(round(0.1 * i, 10) for i in range(1, 10)))
    timing: bool = False

    def __post_init__(self):
        if self.n_max < 1:
            raise InvalidInput("--steps must be at least 1")


# -- channel and state sources -----------------------------------------------


def build_channel(cfg: RunConfig):
    """Return ``(channel, descriptor)`` from ``--channel`` or ``--family``."""
    tol = cfg.tolerances
    if cfg.channel:
        return load_channel(cfg.channel, tol), {"path": str(cfg.channel)}
    if cfg.family is None:
        raise InvalidInput("give either --channel PATH or --family NAME")
    desc = {"family": cfg.family, "dim": cfg.dim}
    if cfg.family == "depolarizing":
        p = 0.5 if cfg.p is None else cfg.p
        desc["p"] = p
        return make_depolarizing(cfg.dim, p, tol), desc
    if cfg.family == "unitary_mixture":
        desc.update(k=cfg.k, seed=cfg.seed)
        return make_random_unitary_mixture(cfg.dim, cfg.k, cfg.seed, tol), desc
    if cfg.family == "amplitude_damping":
        if cfg.dim != 2:
            raise InvalidInput("amplitude damping is a qubit family (--dim 2)")
        p = 0.5 if cfg.p is None else cfg.p
        desc["p"] = p
        return make_amplitude_damping(p, tol), desc
    if cfg.family == "identity":
        return identity_channel(cfg.dim), desc
    raise InvalidInput(f"unknown family {cfg.family!r}; choose from {', '.join(FAMILIES)}")


def build_state(spec: str, n: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``pure_0``, ``maximally_mixed``, ``random:SEED`` or a state file path."""
    if spec == "pure_0":
        e = np.zeros(n, dtype=complex)
        e[0] = 1
        return projector(e)
    if spec == "maximally_mixed":
        return maximally_mixed(n)
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidInput(f"bad random state seed in {spec!r}") from exc
        return random_density(n, np.random.default_rng(seed))
    rho = load_state(spec, tol)
    if rho.shape[0] != n:
        raise InvalidInput(f"state file {spec} has dimension {rho.shape[0]}, channel has {n}")
    return rho


def _check_entry(result, asserted: bool, c_source: str | None = None):
    d = asdict(result)
    d.pop("step")
    d["asserted"] = asserted
    if c_source:
        d["rate_source"] = c_source
    return d


def _strict(c: float, tol: Tolerances) -> bool:
    # rates within tol_eig of one come from channels with C = 1 up to round-off
    return c < 1 - tol.tol_eig


def _rate_for_bounds(ch, estimate: ContractionEstimate, audit, tol):
    """(C, source, exact) used on the right-hand side of the rate bounds."""
    exact = exact_contraction_rate(ch, tol)
    if exact is not None:
        return exact, "exact", True
    prod = product_rate(ch, tol)
    if prod is not None and audit is not None and audit.certified and audit.estimate.c_lower <= prod + tol.tol_audit:
        return prod, "max_factor_rate_audited", True
    c = audit.estimate.c_lower if audit is not None else estimate.c_lower
    return c, "estimated_lower_bound", False


# -- analyze ------------------------------------------------------------------


def run_analyze(cfg: RunConfig):
    """Return ``(report, exit_code)``."""
    start = time.perf_counter()
    tol = cfg.tolerances
    ch, source = build_channel(cfg)
    cert = certify(ch, tol)
    report = {
        "tool_version": __version__,
        "seed": cfg.seed,
        "channel_source": source,
        "dim": ch.dim,
        "n_kraus": len(ch),
        "certificate": asdict(cert),
        "status": "ok",
        "spectral": None,
        "contraction": None,
        "audit": None,
        "qubit": None,
        "probe_state": cfg.state,
        "bound_checks": [],
        "skipped": [],
        "runtime_ms": None,
    }
    code = EXIT_OK

    estimate = estimate_contraction_rate(ch, cfg.restarts, cfg.seed, workers=cfg.workers, tol=tol)
    audit = None
    if ch.dim >= 2:
        est_for_audit = estimate
        prod = product_rate(ch, tol)
        if prod is not None:
            est_for_audit = ContractionEstimate(prod, PAIR_OPTIMIZATION, estimate.restarts, estimate.best_pair, True)
        audit = sample_ratio_audit(ch, est_for_audit, cfg.trials, cfg.seed, tol=tol)
        report["audit"] = {
            "trials": audit.trials,
            "max_ratio": audit.max_ratio,
            "initial_violators": audit.initial_violators,
            "violators": [{"trial": i, "ratio": r} for i, r in audit.violators],
            "rounds": audit.rounds,
            "certified": audit.certified,
        }
        if not audit.certified:
            code = EXIT_INCONCLUSIVE
        if audit.estimate.c_lower > estimate.c_lower:
            estimate = audit.estimate
    c, c_source, c_exact = _rate_for_bounds(ch, estimate, audit, tol)
    report["contraction"] = {
        "c_lower": estimate.c_lower,
        "method": estimate.method,
        "restarts": estimate.restarts,
        "converged": estimate.converged,
        "best_pair": [encode_vec(v) for v in estimate.best_pair],
        "rate_for_bounds": c,
        "rate_source": c_source,
        "strictly_contractive": bool(c_exact and _strict(c, tol)),
    }

    if not cert.is_bistochastic:
        report["status"] = "not bistochastic"
        reason = "channel is not bistochastic; entropy bounds require T(1) = T^(1) = 1"
        report["skipped"] = [{"bound_id": b, "reason": reason} for b in (GAP, MAIN, SHARP)]
        return _finish(report, start, cfg), code

    if ch.dim == 2:
        form = king_ruskai_form(ch, tol)
        report["qubit"] = {"M": form.M, "xi_abs": form.xi_abs, "c_exact": form.c_exact,
                           "gap_exact": qubit_gap_exact(form)}

    try:
        spec = spectral_gap(ch, tol)
    except NotErgodic as exc:
        report["status"] = "not ergodic"
        report["spectral"] = {"is_ergodic": False, "reason": str(exc)}
        reason = "channel is not ergodic"
        report["skipped"] = [{"bound_id": b, "reason": reason} for b in (GAP, MAIN, SHARP)]
        return _finish(report, start, cfg), code
    report["spectral"] = asdict(spec)

    sigma = build_state(cfg.state, ch.dim, tol)
    checks = [_check_entry(check_streater_bound(ch, sigma, spec.gap_gamma, tol), True)]
    if _strict(c, tol):
        checks.append(_check_entry(check_main_bound(ch, sigma, c, tol), c_exact, c_source))
        if in_sharp_class(ch, tol) and c_exact:
            checks.append(_check_entry(check_sharp_bound(ch, sigma, c, tol), True, c_source))
        else:
            report["skipped"].append({"bound_id": SHARP, "reason": "channel outside the sharp-bound class"
                                      if c_exact else "contraction rate is only a lower bound"})
    else:
        reason = "not strictly contractive (C = 1 within tol_eig)"
        report["skipped"] += [{"bound_id": MAIN, "reason": reason}, {"bound_id": SHARP, "reason": reason}]
    report["bound_checks"] = checks
    if any(chk["asserted"] and not chk["satisfied"] for chk in checks):
        code = EXIT_VIOLATION
    return _finish(report, start, cfg), code


def encode_vec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _finish(report, start, cfg):
    if cfg.timing:
        report["runtime_ms"] = int(round(1000 * (time.perf_counter() - start)))
    return report


# -- simulate -----------------------------------------------------------------


def run_simulate(cfg: RunConfig):
    """Return ``(csv_text, summary, exit_code)``."""
    tol = cfg.tolerances
    ch, source = build_channel(cfg)
    cert = certify(ch, tol)
    if not cert.is_bistochastic:
        raise InvalidInput("simulate needs a bistochastic channel")
    sigma0 = build_state(cfg.state, ch.dim, tol)
    log = iterate_orbit(ch, sigma0, cfg.n_max, tol)
    summary = {
        "tool_version": __version__,
        "seed": cfg.seed,
        "channel_source": source,
        "state": cfg.state,
        "steps": cfg.n_max,
        "final_trace_dist": float(log.trace_dist[-1]),
        "final_entropy": float(log.entropy[-1]),
        "min_delta_S": float(np.min(log.delta_S)),
        "hermiticity_drift": log.drift,
        "envelope": None,
        "envelope_skipped": None,
    }
    code = EXIT_OK
    c = exact_contraction_rate(ch, tol)
    if c is None:
        summary["envelope_skipped"] = "contraction rate has no closed form for this channel"
    elif not _strict(c, tol):
        summary["envelope_skipped"] = "not strictly contractive (C = 1 within tol_eig)"
    else:
        try:
            kap = spectral_gap(ch, tol).kappa
        except NotErgodic:
            kap = None
        checks = check_convergence_envelope(log, c, kap, tol)
        summary["envelope"] = {
            "rate": c,
            "kappa": kap,
            "checks": len(checks),
            "violations": sum(not r.satisfied for r in checks),
            "worst_margin": min(r.margin for r in checks),
        }
        if summary["envelope"]["violations"]:
            code = EXIT_VIOLATION
    return orbit_csv(log), summary, code


# -- verify -------------------------------------------------------------------


def _child_seeds(seed: int, count: int):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _random_states(n: int, count: int, rng):
    # alternate pure and full-rank states
    return [random_density(n, rng, rank=1 if i % 2 == 0 else None) for i in range(count)]


def _verify_one(cfg: RunConfig, index: int, seed: int):
    """Checks for one channel of the ensemble; returns (records, channel)."""
    tol = cfg.tolerances
    fam = cfg.family
    if fam == "qubit_random":
        ch = make_random_unitary_mixture(2, 4, seed, tol)
    elif fam == "depolarizing":
        ch = make_depolarizing(cfg.dim, cfg.p_grid[index], tol)
    elif fam == "unitary_mixture":
        ch = make_random_unitary_mixture(cfg.dim, cfg.k, seed, tol)
    elif fam == "qubit_product":
        ch = tensor_product(make_random_unitary_mixture(2, 4, seed, tol),
                            make_random_unitary_mixture(2, 4, seed + 1, tol), tol)
    else:
        raise InvalidInput(f"unknown verify family {fam!r}; choose from {', '.join(VERIFY_FAMILIES)}")
    rng = np.random.default_rng(seed)
    states = _random_states(ch.dim, cfg.states, rng)
    records, notes = [], []
    try:
        gamma = spectral_gap(ch, tol).gap_gamma
    except NotErgodic:
        gamma = None
        notes.append("not ergodic")

    c, exact, source = None, False, None
    if fam == "qubit_product":
        prod = product_rate(ch, tol)
        est = ContractionEstimate(prod, PAIR_OPTIMIZATION, 0, (), True)
        audit = sample_ratio_audit(ch, est, cfg.trials, seed, tol=tol)
        if audit.certified and audit.estimate.c_lower <= prod + tol.tol_audit:
            c, exact, source = prod, True, "max_factor_rate_audited"
        else:
            c, source = audit.estimate.c_lower, "estimated_lower_bound"
            notes.append("product rate failed the audit")
    else:
        c = exact_contraction_rate(ch, tol)
        if c is not None:
            exact, source = True, "exact"
        else:
            c = estimate_contraction_rate(ch, cfg.restarts, seed, tol=tol).c_lower
            source = "estimated_lower_bound"
    sharp = exact and _strict(c, tol) and in_sharp_class(ch, tol)

    if states:
        if gamma is not None:
            records += [(j, r, True) for j, r in enumerate(check_streater_bound_batch(ch, states, gamma, tol))]
        if _strict(c, tol):
            records += [(j, r, exact) for j, r in enumerate(check_main_bound_batch(ch, states, c, tol))]
        if sharp:
            records += [(j, r, True) for j, r in enumerate(check_sharp_bound_batch(ch, states, c, tol))]
    return {"index": index, "channel": ch, "states": states, "records": records, "rate": c,
            "rate_source": source, "notes": notes}


def run_verify(cfg: RunConfig):
    """Return ``(report, exit_code)``."""
    if cfg.family not in VERIFY_FAMILIES:
        raise InvalidInput(f"unknown verify family {cfg.family!r}; choose from {', '.join(VERIFY_FAMILIES)}")
    if cfg.count < 0 or cfg.states < 0:
        raise InvalidInput("--count and --states must be nonnegative")
    count = len(cfg.p_grid) if cfg.family == "depolarizing" else cfg.count
    seeds = _child_seeds(cfg.seed, count)
    warnings = []
    if count == 0:
        warnings.append("empty ensemble: nothing to verify")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(lambda a: _verify_one(cfg, *a), enumerate(seeds)))
    else:
        runs = [_verify_one(cfg, i, s) for i, s in enumerate(seeds)]

    summary, informational, violators = {}, {}, []
    for run in sorted(runs, key=lambda r: r["index"]):
        for j, res, asserted in run["records"]:
            bucket = summary if asserted else informational
            agg = bucket.setdefault(res.bound_id, {"checks": 0, "violations": 0, "worst_margin": None})
            agg["checks"] += 1
            if agg["worst_margin"] is None or res.margin < agg["worst_margin"]:
                agg["worst_margin"] = res.margin
            if not res.satisfied:
                agg["violations"] += 1
                if asserted:
                    violators.append({
                        "run": run["index"], "state_index": j, "bound_id": res.bound_id,
                        "lhs": res.lhs, "rhs": res.rhs, "margin": res.margin,
                        "rate": run["rate"], "rate_source": run["rate_source"],
                        "channel": channel_to_dict(run["channel"]),
                        "state": encode_matrix(run["states"][j]),
                    })
        for note in run["notes"]:
            warnings.append(f"run {run['index']}: {note}")
    report = {
        "tool_version": __version__,
        "seed": cfg.seed,
        "family": cfg.family,
        "dim": 2 if cfg.family == "qubit_random" else 4 if cfg.family == "qubit_product" else cfg.dim,
        "count": count,
        "states_per_channel": cfg.states,
        "checks": summary,
        "informational": informational,
        "violators": violators,
        "warnings": warnings,
        "passed": not violators,
    }
    return report, EXIT_VIOLATION if violators else EXIT_OK


# -- gen ----------------------------------------------------------------------


def run_gen(cfg: RunConfig) -> str:
    if cfg.family is None:
        raise InvalidInput("gen needs --family")
    if cfg.family == "unitary_mixture" and cfg.k < 1:
        raise InvalidInput("--k must be at least 1")
    ch, _ = build_channel(cfg)
    return dump_channel(ch)


# -- argument parsing ---------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="bistochastic", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    for name in ("herm", "trace", "psd", "eig", "fix", "bound", "audit"):
        common.add_argument(f"--tol-{name}", type=float, dest=f"tol_{name}")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--channel", help="channel JSON file")
    source.add_argument("--family", help=f"generated channel family: {', '.join(FAMILIES)}")
    source.add_argument("--dim", type=int, default=2)
    source.add_argument("--p", type=float, help="depolarizing / damping parameter")
    source.add_argument("--k", type=int, default=4, help="unitaries in a random mixture")

    a = sub.add_parser("analyze", parents=[common, source], help="certify a channel and check the bounds")
    a.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    a.add_argument("--trials", type=int, default=1000, help="audit samples")
    a.add_argument("--state", default="pure_0", help="probe state for the entropy bounds")
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--timing", action="store_true", help="record runtime_ms (makes output non-reproducible)")

    s = sub.add_parser("simulate", parents=[common, source], help="iterate the channel and log relaxation")
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--state", default="pure_0", help="pure_0, maximally_mixed, random:SEED or a state file")
    s.add_argument("--summary", help="summary JSON file (default: stdout)")

    v = sub.add_parser("verify", parents=[common], help="check the entropy bounds over a seeded ensemble")
    v.add_argument("--family", required=True, help=", ".join(VERIFY_FAMILIES))
    v.add_argument("--dim", type=int, default=3)
    v.add_argument("--k", type=int, default=4)
    v.add_argument("--count", type=int, default=10)
    v.add_argument("--states", type=int, default=100)
    v.add_argument("--p-grid", help="comma-separated depolarizing parameters")
    v.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--workers", type=int, default=1)

    sub.add_parser("gen", parents=[common, source], help="write a channel JSON file")
    return p


def config_from_args(args) -> RunConfig:
    tol = DEFAULT_TOL.override(**{f"tol_{n}": getattr(args, f"tol_{n}")
                                  for n in ("herm", "trace", "psd", "eig", "fix", "bound", "audit")})
    kw = {k: v for k, v in vars(args).items() if not k.startswith("tol_") and v is not None}
    kw.pop("command")
    if "steps" in kw:
        kw["n_max"] = kw.pop("steps")
    if "p_grid" in kw:
        try:
            kw["p_grid"] = tuple(float(x) for x in kw["p_grid"].split(",") if x.strip())
        except ValueError as exc:
            raise InvalidInput(f"bad --p-grid: {exc}") from exc
    return RunConfig(command=args.command, tolerances=tol, **kw)


def _write(text: str, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _error(code, exc):
    payload = {"error": str(exc), "type": type(exc).__name__}
    residual = getattr(exc, "residual", None)
    if residual is not None:
        payload["residual"] = residual
    sys.stderr.write(dumps(payload, indent=None))
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.command == "analyze":
            report, code = run_analyze(cfg)
            _write(dumps(report), cfg.out)
            return code
        if cfg.command == "simulate":
            csv_text, summary, code = run_simulate(cfg)
            _write(csv_text, cfg.out)
            if cfg.summary:
                Path(cfg.summary).write_text(dumps(summary), encoding="utf-8")
            else:
                # keep stdout pure CSV when no --out is given
                (sys.stdout if cfg.out else sys.stderr).write(dumps(summary))
            return code
        if cfg.command == "verify":
            report, code = run_verify(cfg)
            _write(dumps(report), cfg.out)
            return code
        if cfg.command == "gen":
            _write(run_gen(cfg), cfg.out)
            return EXIT_OK
    except BistochasticError as exc:
        return _error(EXIT_INVALID, exc)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
