"""Command-line front end: set generation, optimization, evaluation, family
sweeps and fiber simulation, wired for reproducible file output.

Every command is a pure function of its flags, input files and seed.  Rerun
the same invocation and every written file comes back byte for byte, with
one exception: the manifest JSON that sits next to each output records the
timestamp and wall time of the run that produced it.  Output files point
back at their manifest (JSON outputs through a meta field, CSVs through a
leading comment line), and the manifest lists every path the run wrote.

Scenario files for `simulate` are JSON objects:

    mode          "md", "mdl" or "joint"
    seed          integer noise seed (default 0)
    trials        Monte-Carlo repetitions (md and mdl modes)
    launch_set    path to a launch-set file, relative to the scenario
    fiber         {n, tau0, md_vector, unitary_seed, pa_coeffs?, z?, pa_slope?}
    receiver      keyword arguments of ReceiverModel (md and joint modes)
    measurement   "analytic" or "waveform" (md mode, default "analytic")
    attenuation_rel_noise   relative power-meter noise (mdl mode, default 0)
    simplex_seed  seed of the orthonormal common-mode basis (default: seed)
    domega        detuning for the composed-operator check (joint, default 1.0)

Exit codes: 0 success, 2 bad flags or configuration, 3 numeric failure
(singular set, failed search or estimation), 4 unreadable or malformed
input file.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, fibersim
from .errors import (
    ConfigError,
    DimensionError,
    EstimationFailedError,
    SearchFailedError,
    SingularSetError,
)
from .fibersim import ReceiverModel
from .metrics import metrics, metrics_from_gram
from .optimize import (
    ALGORITHMS,
    OptimizerConfig,
    descend,
    gradient_check,
    jitter_set,
    multi_start,
)
from .sets import (
    LaunchSet,
    canonicalize_phases,
    load_set,
    mub_gram,
    mub_set,
    random_set,
    save_set,
    sic_gram,
    sic_search,
    simplex_set,
    yang_nolan,
    _states_to_json,
)

GEN_FAMILIES = ("yang", "mub", "sic", "simplex", "random")
SWEEP_FAMILIES = ("yang", "mub", "random", "sic", "sic-analytic", "mub-analytic")


class _InputError(Exception):
    """Unreadable or malformed input file; reported with exit code 4."""


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Floats in text outputs use the shortest exact round-trip form."""
    return repr(float(x))


def _load_set_checked(path) -> LaunchSet:
    try:
        return load_set(path)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except (ConfigError, DimensionError) as exc:
        raise _InputError(str(exc)) from exc


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise _InputError(f"{path}: top level must be a JSON object")
    return doc


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path, manifest_name: str, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(f"# manifest: {manifest_name}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _manifest_path(first_output: str) -> str:
    stem = first_output
    for ext in (".json", ".csv"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
            break
    return stem + ".manifest.json"


def _write_manifest(args, outputs, started: float) -> str:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "command")}
    path = _manifest_path(str(outputs[0]))
    _write_json(path, {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time_s": time.time() - started,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    })
    return path


def _print_summary(info: dict) -> None:
    print(json.dumps(info, sort_keys=True))


# ---------------------------------------------------------------------------
# gen-set
# ---------------------------------------------------------------------------

def _build_family(family: str, n: int, seed: int, tol: float) -> LaunchSet:
    if family == "yang":
        return yang_nolan(n)
    if family == "mub":
        return mub_set(n)
    if family == "sic":
        return sic_search(n, seed=seed, tol=tol)
    if family == "random":
        return random_set(n, seed=seed)
    raise ConfigError(f"unknown family {family!r}, pick from {GEN_FAMILIES}")


def cmd_gen_set(args) -> int:
    started = time.time()
    out = args.out or f"{args.family}_n{args.n}.json"
    manifest_name = Path(_manifest_path(out)).name
    if args.family == "simplex":
        sx = simplex_set(args.n, seed=args.seed)
        _write_json(out, {
            "n": args.n,
            "family": "simplex",
            "meta": {"seed": args.seed, "manifest": manifest_name},
            "vectors": _states_to_json(canonicalize_phases(sx.states)),
        })
        summary = {"family": "simplex", "n": args.n, "states": args.n,
                   "out": out}
    else:
        s = _build_family(args.family, args.n, args.seed, args.tol)
        s.meta["manifest"] = manifest_name
        save_set(s, out)
        mt = metrics(s)
        summary = {"family": s.family, "n": s.n, "states": s.m,
                   "xi": mt.xi, "penalty_db": mt.penalty_db, "out": out}
        if "residual" in s.meta:
            summary["residual"] = s.meta["residual"]
    _write_manifest(args, [out], started)
    _print_summary(summary)
    return 0


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _initial_for(init: str, n: int, seed: int, tol: float) -> LaunchSet:
    if init == "sic":
        return sic_search(n, seed=seed, tol=tol)
    if init == "mub":
        return mub_set(n)
    if init == "yang":
        return yang_nolan(n)
    if init.startswith("file:"):
        return _load_set_checked(init[len("file:"):])
    raise ConfigError(
        f"unknown init {init!r}; use random, sic, mub, yang or file:PATH")


def _starts_rows(runs) -> list:
    rows = []
    for i, run in enumerate(runs):
        rows.append([
            str(i), run.algorithm, _fmt(run.initial_xi), _fmt(run.final_xi),
            _fmt(run.grad_norm), str(run.iterations_used),
            str(run.phase1_iters), str(int(run.converged)),
            str(int(run.aborted)), run.stop_reason,
        ])
    return rows


_STARTS_HEADER = ("start,algorithm,initial_xi,final_xi,grad_norm,"
                  "iterations,phase1_iterations,converged,aborted,stop_reason")


def cmd_optimize(args) -> int:
    started = time.time()
    stem = args.out or f"opt_n{args.n}_{args.algo}"
    set_path = stem + ".json"
    starts_path = stem + "_starts.csv"
    traj_path = stem + "_trajectory.csv"
    manifest_name = Path(_manifest_path(set_path)).name
    config = OptimizerConfig(algorithm=args.algo, max_iters=args.max_iter,
                             seed=args.seed)

    if args.init == "random":
        try:
            result = multi_start(args.n, starts=args.starts, config=config)
        except SearchFailedError:
            _write_manifest(args, [set_path], started)
            raise
        runs, best_index = result.runs, result.best_index
    else:
        initial = _initial_for(args.init, args.n, args.seed, args.tol)
        # family constructions can start exactly on a stationary point
        initial = jitter_set(initial, scale=1e-6, seed=args.seed)
        run = descend(initial, config)
        runs, best_index = [run], 0
        if run.aborted:
            _write_csv(starts_path, manifest_name, _STARTS_HEADER,
                       _starts_rows(runs))
            _write_manifest(args, [starts_path], started)
            raise SearchFailedError(
                f"descent from init {args.init!r} aborted: {run.stop_reason}")

    best = runs[best_index]
    best_set = best.final_set
    best_set.meta["manifest"] = manifest_name
    save_set(best_set, set_path)
    _write_csv(starts_path, manifest_name, _STARTS_HEADER, _starts_rows(runs))
    _write_csv(traj_path, manifest_name, "iteration,xi,grad_norm",
               [[str(int(it)), _fmt(xi), _fmt(gn)]
                for it, xi, gn in best.trajectory])
    _write_manifest(args, [set_path, starts_path, traj_path], started)
    mt = metrics(best_set)
    _print_summary({
        "algorithm": args.algo, "n": args.n, "init": args.init,
        "best_start": best_index, "xi": best.final_xi,
        "penalty_db": mt.penalty_db, "iterations": best.iterations_used,
        "converged": best.converged, "out": set_path,
    })
    return 0


# ---------------------------------------------------------------------------
# evaluate and sweep
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    s = _load_set_checked(args.set)
    mt = metrics(s)
    print(json.dumps({
        "n": mt.n, "m": mt.m, "family": s.family, "xi": mt.xi,
        "penalty": mt.penalty, "penalty_db": mt.penalty_db,
        "condition_number": mt.condition_number,
        "singular_values": [float(v) for v in mt.singular_values],
        "log_volume": mt.log_volume, "bound_ok": mt.bound_ok,
    }, sort_keys=True, indent=2))
    return 0


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(math.isqrt(n)) + 1))


def _parse_n_list(text: str) -> list:
    ns = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, dash, hi = part.partition("-")
        try:
            if dash:
                ns.extend(range(int(lo), int(hi) + 1))
            else:
                ns.append(int(part))
        except ValueError as exc:
            raise ConfigError(f"bad n-list entry {part!r}") from exc
    if not ns or any(n < 2 for n in ns):
        raise ConfigError("n-list needs integers >= 2, e.g. '2,3,5-8'")
    return ns


def _sweep_metrics(family: str, n: int, seed: int, tol: float):
    if family == "yang":
        return metrics(yang_nolan(n))
    if family == "mub":
        return metrics(mub_set(n))
    if family == "random":
        return metrics(random_set(n, seed=seed))
    if family == "sic":
        return metrics(sic_search(n, seed=seed, tol=tol))
    if family == "sic-analytic":
        return metrics_from_gram(sic_gram(n))
    if family == "mub-analytic":
        return metrics_from_gram(mub_gram(n))
    raise ConfigError(
        f"unknown sweep family {family!r}, pick from {SWEEP_FAMILIES}")


def cmd_sweep(args) -> int:
    started = time.time()
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if not families:
        raise ConfigError("families list is empty")
    for fam in families:
        if fam not in SWEEP_FAMILIES:
            raise ConfigError(
                f"unknown sweep family {fam!r}, pick from {SWEEP_FAMILIES}")
    ns = _parse_n_list(args.n_list)
    out = args.out or "sweep.csv"
    manifest_name = Path(_manifest_path(out)).name

    rows, skipped = [], []
    for fam in families:
        for n in ns:
            # constructed MUBs exist here for prime mode counts only; the
            # analytic Gram route (mub-analytic) covers every n
            if fam == "mub" and not _is_prime(n):
                skipped.append(f"{fam}:{n}")
                continue
            mt = _sweep_metrics(fam, n, args.seed, args.tol)
            rows.append([str(n), fam, _fmt(mt.xi), _fmt(mt.penalty_db),
                         _fmt(mt.condition_number), _fmt(mt.log_volume)])
    _write_csv(out, manifest_name,
               "n,family,xi,penalty_db,condition_number,log_volume", rows)
    _write_manifest(args, [out], started)
    _print_summary({"rows": len(rows), "skipped": skipped, "out": out})
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _scenario_field(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise _InputError(f"{where}: missing field '{key}'")
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise _InputError(f"{where}: field '{key}' must be {kind.__name__}")
    return value


def _fiber_from(doc: dict, where: str) -> fibersim.FiberModel:
    fd = _scenario_field(doc, "fiber", dict, where)
    sub = f"{where}: fiber"
    n = _scenario_field(fd, "n", int, sub)
    tau0 = _scenario_field(fd, "tau0", float, sub)
    md = np.asarray(_scenario_field(fd, "md_vector", list, sub), dtype=float)
    seed = fd.get("unitary_seed", 0)
    try:
        if "pa_coeffs" in fd:
            return fibersim.synth_mdl_fiber(
                n, np.asarray(fd["pa_coeffs"], dtype=float),
                z=float(fd.get("z", 1.0)), seed=seed, tau0=tau0,
                md_vector=md,
                pa_slope=(np.asarray(fd["pa_slope"], dtype=float)
                          if "pa_slope" in fd else None))
        return fibersim.synth_md_fiber(n, tau0, md, seed=seed)
    except (ConfigError, DimensionError, ValueError) as exc:
        raise _InputError(f"{sub}: {exc}") from exc


def _receiver_from(doc: dict, where: str) -> ReceiverModel:
    rd = _scenario_field(doc, "receiver", dict, where)
    try:
        return ReceiverModel(**rd)
    except (ConfigError, DimensionError, TypeError) as exc:
        raise _InputError(f"{where}: receiver: {exc}") from exc


def _launch_set_from(doc: dict, scenario_path: Path, where: str) -> LaunchSet:
    rel = _scenario_field(doc, "launch_set", str, where)
    path = Path(rel)
    if not path.is_absolute():
        path = scenario_path.parent / path
    return _load_set_checked(path)


def _simulate_md(doc, fiber, scenario_path, where, args):
    ls = _launch_set_from(doc, scenario_path, where)
    rx = _receiver_from(doc, where)
    trials = _scenario_field(doc, "trials", int, where)
    seed = doc.get("seed", 0)
    measurement = doc.get("measurement", "analytic")
    res = fibersim.monte_carlo_md(fiber, ls, rx, trials, seed=seed,
                                  mode=measurement)
    mt = metrics(ls)
    summary = {
        "mode": "md", "n": fiber.n, "trials": trials,
        "measurement": measurement, "set_family": ls.family, "xi": mt.xi,
        "mean_sq_error": res["mean_sq_error"],
        "predicted_mean_sq": res["predicted_mean_sq"],
        "variance_ratio": res["mean_sq_error"] / res["predicted_mean_sq"],
        "mean_error": [float(v) for v in res["mean_error"]],
    }
    trial_rows = [[str(i), _fmt(sq)] for i, sq in enumerate(res["sq_errors"])]
    return summary, ("trial,sq_error", trial_rows)


def _simulate_mdl(doc, fiber, scenario_path, where, args):
    ls = _launch_set_from(doc, scenario_path, where)
    trials = _scenario_field(doc, "trials", int, where)
    seed = doc.get("seed", 0)
    rel_noise = float(doc.get("attenuation_rel_noise", 0.0))
    sx = simplex_set(fiber.n, seed=doc.get("simplex_seed", seed))
    alpha0_true, gamma_true = fibersim.mdl_parameters(fiber)
    ev = np.linalg.eigvalsh(fiber.loss_matrix(squared=True))
    ratio_true = float(ev[-1] / ev[0])

    gamma_sq = alpha0_sq = ratio_sum = 0.0
    trial_rows = []
    for t in range(trials):
        set_records = [
            fibersim.measure_attenuation(fiber, s, rel_noise=rel_noise,
                                         seed=(seed, t, i))
            for i, s in enumerate(ls.states)]
        simplex_records = [
            fibersim.measure_attenuation(fiber, s, rel_noise=rel_noise,
                                         seed=(seed, t, ls.m + i))
            for i, s in enumerate(sx.states)]
        est = fibersim.reconstruct_mdl(ls, sx, set_records, simplex_records)
        g_err = float(np.sum((est.gamma - gamma_true) ** 2))
        gamma_sq += g_err
        alpha0_sq += (est.alpha0 - alpha0_true) ** 2
        ratio_sum += est.mdl_ratio
        trial_rows.append([str(t), _fmt(g_err), _fmt(est.alpha0),
                           _fmt(est.mdl_ratio)])
    summary = {
        "mode": "mdl", "n": fiber.n, "trials": trials,
        "rel_noise": rel_noise, "set_family": ls.family,
        "alpha0_true": alpha0_true, "mdl_ratio_true": ratio_true,
        "gamma_mse": gamma_sq / trials,
        "alpha0_mse": alpha0_sq / trials,
        "mdl_ratio_mean": ratio_sum / trials,
    }
    return summary, ("trial,gamma_sq_error,alpha0,mdl_ratio", trial_rows)


def _simulate_joint(doc, fiber, scenario_path, where, args):
    ls = _launch_set_from(doc, scenario_path, where)
    rx = _receiver_from(doc, where)
    seed = doc.get("seed", 0)
    domega = float(doc.get("domega", 1.0))
    sx = simplex_set(fiber.n, seed=doc.get("simplex_seed", seed))

    est = fibersim.reconstruct_mdl(
        ls, sx,
        [fibersim.measure_attenuation(fiber, s) for s in ls.states],
        [fibersim.measure_attenuation(fiber, s) for s in sx.states])
    equalized = fibersim.equalize(fiber, est)
    w = equalized.base_unitary
    unitarity = float(np.max(np.abs(w.conj().T @ w - np.eye(fiber.n))))
    tau0_est = fibersim.estimate_tau0(equalized, rx, sx)
    records = [fibersim.measure_delay(equalized, s, rx) for s in ls.states]
    md_est = fibersim.reconstruct_md(ls, records, tau0_est)
    composed = fibersim.compose_gd_operator(
        fiber.n, tau0_est, md_est, fibersim.loss_matrix_from_estimate(est))
    direct = fibersim.full_gd_operator(fiber, domega)
    scale = float(np.max(np.abs(direct.dmgds)))
    deviation = float(np.max(np.abs(composed.dmgds - direct.dmgds)) / scale)
    alpha0_true, gamma_true = fibersim.mdl_parameters(fiber)
    md_scale = max(float(np.max(np.abs(fiber.md_vector))), 1e-300)
    summary = {
        "mode": "joint", "n": fiber.n, "domega": domega,
        "set_family": ls.family,
        "equalizer_unitarity": unitarity,
        "tau0_rel_error": abs(tau0_est - fiber.tau0) / abs(fiber.tau0),
        "md_max_rel_error":
            float(np.max(np.abs(md_est - fiber.md_vector))) / md_scale,
        "gamma_max_abs_error":
            float(np.max(np.abs(est.gamma - gamma_true))),
        "dmgds_direct": [float(v) for v in direct.dmgds],
        "dmgds_composed": [float(v) for v in composed.dmgds],
        "dmgd_max_rel_deviation": deviation,
        "defective": bool(direct.defective),
    }
    return summary, None


def cmd_simulate(args) -> int:
    started = time.time()
    scenario_path = Path(args.scenario)
    where = str(scenario_path)
    doc = _read_json(scenario_path)
    mode = _scenario_field(doc, "mode", str, where)
    runners = {"md": _simulate_md, "mdl": _simulate_mdl,
               "joint": _simulate_joint}
    if mode not in runners:
        raise _InputError(f"{where}: mode must be one of {sorted(runners)}")
    fiber = _fiber_from(doc, where)
    out = args.out or scenario_path.stem + "_results.json"
    manifest_name = Path(_manifest_path(out)).name

    summary, trial_table = runners[mode](doc, fiber, scenario_path, where,
                                         args)
    summary["manifest"] = manifest_name
    outputs = [out]
    if args.trials_out and trial_table is not None:
        header, rows = trial_table
        _write_csv(args.trials_out, manifest_name, header, rows)
        outputs.append(args.trials_out)
    _write_json(out, summary)
    _write_manifest(args, outputs, started)
    _print_summary(summary)
    return 0


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------

def cmd_gradcheck(args) -> int:
    worst = gradient_check(args.n, args.algo, trials=args.trials,
                           seed=args.seed)
    _print_summary({"algorithm": args.algo, "n": args.n,
                    "trials": args.trials, "max_rel_error": worst})
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stokesopt",
        description="Launch-state set design and fiber-measurement "
                    "simulation tools.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser(
        "gen-set", help="construct a named launch-set family and save it")
    g.add_argument("--family", required=True, choices=GEN_FAMILIES)
    g.add_argument("--n", type=int, required=True, help="mode count")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tol", type=float, default=1e-8,
                   help="equiangularity residual target for --family sic")
    g.add_argument("--out", default=None,
                   help="output JSON path (default FAMILY_nN.json)")
    g.set_defaults(func=cmd_gen_set)

    o = sub.add_parser(
        "optimize", help="descend the noise-amplification cost")
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--algo", default="hyperspherical", choices=ALGORITHMS)
    o.add_argument("--init", default="random",
                   help="random (multi-start), sic, mub, yang, or file:PATH; "
                        "non-random inits get a deterministic 1e-6 tangent "
                        "nudge off exact stationary points")
    o.add_argument("--starts", type=int, default=8,
                   help="random starts (ignored for non-random --init)")
    o.add_argument("--max-iter", type=int, default=100_000, dest="max_iter")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--tol", type=float, default=1e-8,
                   help="residual target when --init sic builds its start")
    o.add_argument("--out", default=None,
                   help="output stem (default opt_nN_ALGO); writes "
                        "STEM.json, STEM_starts.csv, STEM_trajectory.csv")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser(
        "evaluate", help="print full metrics of a stored launch set")
    e.add_argument("--set", required=True, help="launch-set JSON path")
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser(
        "sweep", help="tabulate family metrics over mode counts as CSV")
    w.add_argument("--families", required=True,
                   help="comma list from: " + ", ".join(SWEEP_FAMILIES)
                        + " (mub rows cover prime n only)")
    w.add_argument("--n-list", required=True, dest="n_list",
                   help="mode counts, e.g. '2,3,5-8'")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--tol", type=float, default=1e-8)
    w.add_argument("--out", default=None, help="CSV path (default sweep.csv)")
    w.set_defaults(func=cmd_sweep)

    s = sub.add_parser(
        "simulate", help="run a measurement scenario (md, mdl or joint)")
    s.add_argument("--scenario", required=True, help="scenario JSON path")
    s.add_argument("--out", default=None,
                   help="summary JSON path (default SCENARIO_results.json)")
    s.add_argument("--trials-out", default=None, dest="trials_out",
                   help="optional per-trial CSV (md and mdl modes)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser(
        "gradcheck", help="compare analytic gradients to finite differences")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--algo", default="projected", choices=ALGORITHMS)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    if "STOKES_OPT_THREADS" not in os.environ:
        os.environ["STOKES_OPT_THREADS"] = str(os.cpu_count() or 1)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularSetError, SearchFailedError, EstimationFailedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
