"""``pgrates`` command line: run, verify, reproduce."""

import argparse
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis as an
from .errors import ConfigError, InvalidInputError, NumericalError
from .mdp_core import TabularMdp, softmax_policy
from .optimizer import MethodSpec, RunConfig, run
from .suites import SUITES, run_suite, worker_count

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

FIG_SEED = 0
FIT_FLOOR = 1e-13  # values this small are dominated by round-off
FIG4_REWARDS = (1.0, 0.7, 0.3, 0.2, 0.1)
# optimal arm starts far below the others; the rest are log-probabilities
FIG4_LOGITS = (-6.4, math.log(0.9), math.log(0.05), math.log(0.03), math.log(0.02))
FIG4_THRESHOLD = 0.1
FIG5_ALPHAS = (0.5, 1.0, 2.0, 4.0)


def _err(msg):
    print(msg, file=sys.stderr)


def _field_line(text, field):
    """1-based line of the first occurrence of the field's key in ``text``."""
    if not field:
        return None
    key = field.split(".")[-1]
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_config(path):
    """Parse a run config (or a manifest with a ``runs`` list); ConfigError carries field and line."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        if isinstance(data, dict) and "runs" in data:
            return _manifest(data)
        return RunConfig.from_dict(data)
    except ConfigError as exc:
        if exc.line is None:
            exc.line = _field_line(text, exc.field)
        raise
    except InvalidInputError as exc:
        raise ConfigError(str(exc), field=exc.field, line=_field_line(text, exc.field)) from exc
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _manifest(data):
    runs = data["runs"]
    if not isinstance(runs, list) or not runs:
        raise ConfigError("runs must be a non-empty list", field="runs")
    names = [r.get("name", f"run{i}") if isinstance(r, dict) else f"run{i}" for i, r in enumerate(runs)]
    if len(set(names)) != len(names):
        raise ConfigError("run names must be unique", field="name")
    return {name: RunConfig.from_dict(r) for name, r in zip(names, runs)}


def summarize(trace):
    """Trace summary plus the fitted rate (power law, or exponential for entropy runs)."""
    out = trace.summary()
    model = "exponential" if trace.config.method.kind == "entropy" else "power"
    out["rate_model"] = model
    try:
        fit = an.rate_fit(trace, model, floor=FIT_FLOOR)
        out.update(slope=fit.slope, r_squared=fit.r_squared, fit_window=list(fit.window), fit_column=fit.column)
    except InvalidInputError:
        out.update(slope=None, r_squared=None, fit_window=None, fit_column=None)
    return out


def _write_run(trace, csv_path):
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(csv_path)
    summary = summarize(trace)
    summary["config"] = trace.config.to_dict()
    summary_path = csv_path.with_name(csv_path.stem + ".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _run_named(args):
    name, config, out_dir = args
    trace = run(config)
    summary = _write_run(trace, Path(out_dir) / f"{name}.csv")
    return name, summary


def cmd_run(config_path, out_path):
    try:
        config = load_config(config_path)
    except OSError as exc:
        _err(f"config error: cannot read {config_path}: {exc.strerror}")
        return EXIT_USAGE
    except ConfigError as exc:
        where = []
        if exc.field:
            where.append(f"field '{exc.field}'")
        if exc.line:
            where.append(f"line {exc.line}")
        _err(f"config error: {exc}" + (f" ({', '.join(where)})" if where else ""))
        return EXIT_USAGE
    try:
        if isinstance(config, dict):
            jobs = [(name, cfg, out_path) for name, cfg in config.items()]
            workers = min(worker_count(), len(jobs))
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    results = dict(pool.map(_run_named, jobs))
            else:
                results = dict(map(_run_named, jobs))
            print(json.dumps({n: _brief(s) for n, s in results.items()}, sort_keys=True))
        else:
            summary = _write_run(run(config), out_path)
            print(json.dumps(_brief(summary), sort_keys=True))
    except NumericalError as exc:
        _err(f"numerical failure at iteration {exc.t}: {exc}")
        return EXIT_NUMERICAL
    return EXIT_OK


def _brief(summary):
    keys = ("final_delta", "final_soft_delta", "c_running", "rate_model", "slope", "r_squared")
    return {k: summary.get(k) for k in keys}


def cmd_verify(suite, trials, seed):
    if suite not in SUITES:
        _err(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
        return EXIT_USAGE
    reports = run_suite(suite, trials, seed)
    failed = 0
    for rep in reports:
        rep.context.setdefault("seed", seed)
        print(rep.to_json())
        failed += not rep.passed
    return EXIT_CHECKS if failed else EXIT_OK


# ---------------------------------------------------------------------------
# figure reproduction


def figure_instance(seed=FIG_SEED, K=20):
    """Rewards ~ U[0, 1] then logits ~ N(0, 1), both from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    r = rng.uniform(size=K)
    theta = rng.standard_normal(K)
    return r, theta


def fig4_instance():
    return np.array(FIG4_REWARDS), np.array(FIG4_LOGITS)


def _stride(T):
    return max(1, (T - 10_000) // 10_000)


def _first_below(trace, threshold):
    return trace.first_t("delta", lambda d: d < threshold)


def reproduce(figure, out_dir, scale="full"):
    """Run one figure's experiment, write CSVs and ``<figure>_summary.json``; returns the summary."""
    div = 10 if scale == "desk" else 1
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"figure": figure, "scale": scale, "seed": FIG_SEED}
    if figure in ("fig2", "fig3"):
        r, theta = figure_instance()
        problem = TabularMdp.bandit(r)
        if figure == "fig2":
            T = 300_000 // div
            method = MethodSpec("plain", eta=0.4)
        else:
            T = 50_000 // div
            method = MethodSpec("entropy", eta=0.4, tau=0.2)
        trace = run(RunConfig(problem, method, init=theta, iterations=T, record_every=_stride(T)))
        trace.to_csv(out / f"{figure}_trace.csv")
        model = "power" if figure == "fig2" else "exponential"
        fit = an.rate_fit(trace, model, floor=FIT_FLOOR)
        summary.update(iterations=T, fit=fit.to_dict(), run=trace.summary())
        if figure == "fig3":
            plateau = float(softmax_policy(r / 0.2).min())
            summary["min_prob_plateau"] = plateau
            summary["min_prob_final"] = float(trace.min_prob[-1])
            summary["min_prob_relative_gap"] = float(abs(trace.min_prob[-1] - plateau) / plateau)
            summary["min_prob_floor"] = an.min_prob_floor(theta, 0.2)
    elif figure == "fig4":
        r, theta = fig4_instance()
        problem = TabularMdp.bandit(r)
        T = 10_000_000 // div
        plain = run(RunConfig(problem, MethodSpec("plain", eta=0.4), init=theta, iterations=T, record_every=_stride(T)))
        T_ent = min(T, 100_000)
        ent = run(RunConfig(problem, MethodSpec("entropy", eta=0.4, tau=0.2), init=theta, iterations=T_ent,
                            record_every=_stride(T_ent)))
        plain.to_csv(out / "fig4_plain.csv")
        ent.to_csv(out / "fig4_entropy.csv")
        hit_plain, hit_ent = _first_below(plain, FIG4_THRESHOLD), _first_below(ent, FIG4_THRESHOLD)
        censored = hit_plain is None
        ratio = None
        if hit_ent is not None:
            ratio = (T if censored else hit_plain) / hit_ent
        summary.update(
            iterations=T,
            threshold=FIG4_THRESHOLD,
            plain_hit=hit_plain,
            entropy_hit=hit_ent,
            plain_censored=censored,
            ratio=ratio,
            ratio_is_lower_bound=censored,
            initial_policy=softmax_policy(theta).tolist(),
            plain=plain.summary(),
            entropy=ent.summary(),
        )
    elif figure == "fig5":
        r, theta = figure_instance(K=10)
        problem = TabularMdp.bandit(r)
        T = 1_000_000 // div
        per_alpha = []
        for alpha in FIG5_ALPHAS:
            trace = run(RunConfig(problem, MethodSpec("decaying", alpha=alpha), init=theta, iterations=T,
                                  record_every=_stride(T)))
            trace.to_csv(out / f"fig5_alpha{alpha:g}.csv")
            try:
                fit = an.rate_fit(trace, "power", floor=FIT_FLOOR).to_dict()
            except InvalidInputError:
                fit = None
            per_alpha.append({"alpha": alpha, "partial_rate_exponent": -1.0 / alpha, "fit": fit,
                              "run": trace.summary()})
        summary.update(iterations=T, alphas=per_alpha)
    else:
        raise KeyError(figure)
    (out / f"{figure}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_reproduce(figure, out_dir, scale):
    if figure not in ("fig2", "fig3", "fig4", "fig5"):
        _err(f"unknown figure {figure!r}")
        return EXIT_USAGE
    try:
        summary = reproduce(figure, out_dir, scale)
    except NumericalError as exc:
        _err(f"numerical failure at iteration {exc.t}: {exc}")
        return EXIT_NUMERICAL
    print(json.dumps({k: v for k, v in summary.items() if not isinstance(v, (dict, list))}, sort_keys=True))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="pgrates", description="Softmax policy gradient convergence experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run one configuration (or a manifest of runs)")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", required=True, help="trace CSV path (a directory for manifests)")
    pv = sub.add_parser("verify", help="run a randomized verification suite")
    pv.add_argument("--suite", required=True)
    pv.add_argument("--trials", type=int, default=100)
    pv.add_argument("--seed", type=int, default=0)
    pp = sub.add_parser("reproduce", help="reproduce a simulation figure as CSV")
    pp.add_argument("--figure", required=True)
    pp.add_argument("--scale", choices=("full", "desk"), default="full")
    pp.add_argument("--out", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "verify":
        if args.trials < 0:
            _err("--trials must be non-negative")
            return EXIT_USAGE
        return cmd_verify(args.suite, args.trials, args.seed)
    return cmd_reproduce(args.figure, args.out, args.scale)


if __name__ == "__main__":
    sys.exit(main())
