"""Command-line experiment runner.

    varquad list
    varquad run <preset>... | --config FILE  --out DIR [--seed S] [--iters N] [--jobs K]
    varquad regcheck --samples N --seed S [--N 20 50] [--scales 0.1 1 5]

Set VARQUAD_CI=1 to run presets at their reduced CI budgets.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveConfig, run_adaptive_training
from .losses import ritz_loss
from .network import ActivationKind, CutoffPoly, NetworkParams, eval_u
from .presets import PRESETS, ExperimentPreset, ci_mode, get_preset, load_config
from .problems import get_problem, model_problem_2
from .quadrature import mc_error_curve, oracle_rule
from .regularizer import RegContext, r_total
from .training import DivergenceError, solution_error, train

EXIT_OK, EXIT_ERROR, EXIT_MISS = 0, 1, 2


def list_presets() -> str:
    width = max(map(len, PRESETS))
    return "\n".join(f"{name:<{width}}  {PRESETS[name].description}" for name in sorted(PRESETS))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def check_targets(targets: dict, metrics: dict):
    """Compare metrics with ``{name: (lo, hi)}`` windows; returns ``(report, all_pass)``."""
    report, ok = {}, True
    for name, (lo, hi) in sorted(targets.items()):
        actual = metrics.get(name)
        passed = actual is not None and math.isfinite(actual)
        if passed and lo is not None:
            passed = actual >= lo
        if passed and hi is not None:
            passed = actual <= hi
        ok &= passed
        report[name] = {"min": lo, "max": hi, "actual": _num(actual) if actual is not None else None, "pass": passed}
    return report, ok


def _first_element(problem, preset):
    h = (problem.b - problem.a) / preset.rule_elements
    return problem.a, problem.a + h


def training_metrics(problem, cutoff, params, trace) -> dict:
    m = {
        "train_loss": trace.train_loss[-1],
        "val_loss": trace.val_loss[-1],
        "reg": trace.reg_value[-1],
        "objective": trace.train_loss[-1] + (trace.reg_value[-1] if math.isfinite(trace.reg_value[-1]) else 0.0),
    }
    gaps = np.abs(np.array(trace.train_loss) - np.array(trace.val_loss))
    m["val_gap"] = float(gaps[-1])
    m["max_val_gap"] = float(gaps.max())
    if problem.exact_energy is not None:
        m["train_minus_exact"] = m["train_loss"] - problem.exact_energy
    if problem.exact_energy:
        m["rel_val_gap"] = m["val_gap"] / abs(problem.exact_energy)
        m["max_rel_val_gap"] = m["max_val_gap"] / abs(problem.exact_energy)
    if problem.exact_u is not None:
        m["l2_err"] = solution_error(params, cutoff, problem, "L2")
        m["h1_err"] = solution_error(params, cutoff, problem, "H1")
    return m


def _provenance(preset, seed, iterations):
    return [
        f"varquad {__version__}",
        f"preset={preset.name} problem={preset.problem} loss={preset.loss} seed={seed} iterations={iterations}",
        f"rule={preset.rule_kind} optimizer={preset.optimizer} lr={preset.lr} M={preset.M} "
        f"activation={preset.activation} regularizer={preset.regularizer}",
    ]


def _write_solution(path, problem, cutoff, params, points=1001):
    x = np.linspace(problem.a, problem.b, points)
    u = eval_u(params, cutoff, x, 0)
    exact = problem.exact_u(x) if problem.exact_u is not None else np.full_like(x, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u_nn", "u_exact"])
        for row in zip(x, u, exact):
            w.writerow([f"{v:.17g}" for v in row])


def _run_mc(preset, out):
    ns = 10 ** np.asarray(preset.mc_exponents)
    errs, slope = mc_error_curve(ns, seeds=preset.mc_seeds)
    with open(out / "mc_error.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "mean_abs_error"])
        for n, e in zip(ns, errs):
            w.writerow([int(n), f"{e:.17g}"])
    return {"slope": slope}, None


def execute(preset: ExperimentPreset, out, seed=None, iterations=None, ci=None) -> dict:
    """Run one experiment, write its artifacts into ``out`` and return the summary.

    ``ci`` selects the reduced budgets; by default it follows VARQUAD_CI.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ci = ci_mode() if ci is None else ci
    seed = preset.seed if seed is None else seed
    its = preset.budget(ci) if iterations is None else iterations
    final = dict.fromkeys(("train_loss", "val_loss", "reg", "l2_err", "h1_err"))

    if preset.kind == "mc":
        metrics, _ = _run_mc(preset, out)
        its = 0
    else:
        problem = get_problem(preset.problem)
        cutoff = CutoffPoly.for_problem(problem)
        config = preset.train_config(iterations=its, seed=seed)
        state = None
        if preset.kind == "adaptive":
            acfg = AdaptiveConfig(
                config,
                preset.adaptive_epsilon,
                preset.check_period(ci),
                preset.adaptive_max_checks,
                preset.adaptive_max_refinements,
            )
            params, state, trace = run_adaptive_training(problem, acfg, cutoff)
        else:
            params, trace = train(problem, cutoff, config)
        trace.write_csv(out / "trace.csv", _provenance(preset, seed, its))
        _write_solution(out / "solution.csv", problem, cutoff, params)
        (out / "params.json").write_text(json.dumps(params.to_dict(), indent=1))
        metrics = training_metrics(problem, cutoff, params, trace)
        if state is not None:
            state.write_log(out / "refinement_log.csv")
            lo, hi = _first_element(problem, preset)
            metrics["n_refinements"] = state.n_refinements
            metrics["refinements_outside_first"] = sum(
                1 for r in state.refinement_log if r.left < lo or r.right > hi
            )
            metrics["final_elements"] = state.training_mesh.n_elements
        for k in final:
            final[k] = _num(metrics[k]) if k in metrics else None

    report, ok = check_targets(preset.targets, metrics)
    summary = {
        "preset": preset.name,
        "seed": seed,
        "iterations": its,
        "ci": ci,
        "final": final,
        "metrics": {k: _num(v) for k, v in metrics.items()},
        "targets": report,
        "pass": ok,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    return summary


def run_experiment(preset, out, seed=None, iterations=None, config=None) -> int:
    """Exit-status wrapper around ``execute``.

    ``preset`` is a preset name or object; pass ``config`` (a TOML path) instead
    to run a config file.
    """
    try:
        if config is not None:
            preset = load_config(config)
        elif isinstance(preset, str):
            preset = get_preset(preset)
    except KeyError as exc:
        print(f"error: unknown preset {exc.args[0]!r}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        summary = execute(preset, out, seed, iterations)
    except (OSError, ValueError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    status = "pass" if summary["pass"] else "TARGET MISS"
    print(f"{summary['preset']}: {status} {json.dumps(summary['final'])}")
    return EXIT_OK if summary["pass"] else EXIT_MISS


def _random_params(rng, M, scale):
    draw = lambda *shape: scale * rng.standard_normal(shape)  # noqa: E731
    return NetworkParams(draw(M), draw(M), draw(M), float(draw()), ActivationKind.TANH)


def regcheck(samples=500, seed=0, Ns=(20, 50), scales=(0.1, 1.0, 5.0), M=10) -> dict:
    """Check |F_oracle - F_midpoint| <= R on random networks for the second model problem."""
    problem = model_problem_2()
    cutoff = CutoffPoly.for_problem(problem)
    oracle = oracle_rule(problem)
    ctxs = {N: RegContext(cutoff, problem, N) for N in Ns}
    rng = np.random.default_rng(seed)
    worst = -np.inf
    violations = 0
    R_sum = dict.fromkeys(Ns, 0.0)
    for i in range(samples):
        p = _random_params(rng, M, scales[i % len(scales)])
        F = ritz_loss(p, cutoff, problem, oracle)
        for N, ctx in ctxs.items():
            err = abs(F - ritz_loss(p, cutoff, problem, ctx.rule))
            R = r_total(p, cutoff, ctx)
            R_sum[N] += R
            gap = err - R
            worst = max(worst, gap)
            violations += gap > 1e-9
    return {
        "samples": samples,
        "seed": seed,
        "N": list(Ns),
        "scales": list(scales),
        "max_err_minus_R": float(worst),
        "violations": int(violations),
        "mean_R": {str(N): R_sum[N] / max(samples, 1) for N in Ns},
    }


def _parser():
    ap = argparse.ArgumentParser(prog="varquad", description="Quadrature studies for variational network losses.")
    ap.add_argument("--version", action="version", version=f"varquad {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sub.add_parser("list", help="list experiment presets")

    run = sub.add_parser("run", help="run presets or a config file")
    run.add_argument("presets", nargs="*", metavar="PRESET")
    run.add_argument("--config", action="append", default=[], metavar="FILE")
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--iters", type=int)
    run.add_argument("--jobs", type=int, default=1)

    rc = sub.add_parser("regcheck", help="verify the quadrature-error bound on random networks")
    rc.add_argument("--samples", type=int, default=500)
    rc.add_argument("--seed", type=int, default=0)
    rc.add_argument("--N", type=int, nargs="+", default=[20, 50])
    rc.add_argument("--scales", type=float, nargs="+", default=[0.1, 1.0, 5.0])
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "list":
        print(list_presets())
        return EXIT_OK
    if args.cmd == "regcheck":
        report = regcheck(args.samples, args.seed, tuple(args.N), tuple(args.scales))
        print(json.dumps(report, indent=1))
        return EXIT_MISS if report["violations"] else EXIT_OK

    jobs = [(name, None) for name in args.presets] + [(None, path) for path in args.config]
    if not jobs:
        print("error: give at least one preset or --config", file=sys.stderr)
        return EXIT_ERROR

    def run_one(job):
        name, path = job
        out = args.out if len(jobs) == 1 else args.out / (name or Path(path).stem)
        return run_experiment(name, out, args.seed, args.iters, config=path)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        codes = list(pool.map(run_one, jobs))
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_MISS if EXIT_MISS in codes else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
