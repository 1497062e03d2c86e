"""Command line: ``flowecon run|validate|report``.

Exit codes: 0 success, 1 invalid configuration, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, kernels
from .analysis import detect_bubble, longest_run, monetary_windows
from .core import DomainError, fmt_float, write_snapshots
from .markets import ConfigError, MarketKind, RunMetrics, ScenarioConfig, parse_config, run
from .meanfield import fit_relaxation_time, mf_price_series, relaxation_time, trade_preference_stats
from .utility import ExpectationKind

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if np.isnan(x) else fmt_float(float(x))


def _write_csv(path: Path, header, rows) -> int:
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
            count += 1
    return count


def price_orientation(cfg: ScenarioConfig) -> tuple[int, int]:
    """Which ``rates[i][j]`` is reported as "the price"."""
    return (1, 0) if cfg.market_kind is MarketKind.CENTRALIZED else (0, 1)


def meanfield_applicable(cfg: ScenarioConfig) -> bool:
    return (cfg.market_kind is MarketKind.DECENTRALIZED and cfg.production is None
            and cfg.endowment is None and 0.0 < cfg.nu < 1.0)


def _summary(cfg: ScenarioConfig, m: RunMetrics) -> dict:
    i, j = price_orientation(cfg)
    fund = m.fundamental(i, j)
    out = {"steps": m.steps, "total_executed": int(m.executed.sum()),
           "total_productions": int(m.productions.sum()), "skip_counters": m.skip_totals()}
    if cfg.market_kind is MarketKind.CENTRALIZED:
        price = m.closing_price
        cum = m.mm_profit()
        out["final_closing_price"] = float(price[-1])
        out["mm_profit_total"] = float(cum[-1])
        out["mm_profit_nondecreasing"] = bool(np.all(np.diff(cum) >= 0))
        if cfg.expectation is not None and cfg.expectation.kind is ExpectationKind.SPECULATIVE:
            b = detect_bubble(price, fund)
            out["bubble"] = {"peak_then_crash": b.detected, "peak_step": b.peak_step,
                             "peak_price": b.peak_price, "crash_step": b.crash_step,
                             "fundamental_monotone": b.fundamental_monotone,
                             "longest_run_above_fundamental": longest_run(price > fund)}
    else:
        price = m.mean_rate(i, j)
    out["final_mean_price"] = float(m.mean_rate(i, j)[-1])
    out["final_fundamental"] = float(fund[-1])
    out["final_relative_gap"] = float(price[-1] / fund[-1] - 1.0)
    if meanfield_applicable(cfg) and m.steps >= 2:
        out["tau_fit"] = fit_relaxation_time(price, fund)
        out["tau_analytic"] = relaxation_time(cfg.nu)
    if cfg.market_kind is MarketKind.DECENTRALIZED and m.n_products >= 3:
        f = m.fraction_using_k
        out["money_product"] = m.money_product
        out["monetary_windows"] = [list(w) for w in monetary_windows(f)]
        out["mean_fraction_using_k"] = float(np.nanmean(f[1:])) if m.steps else None
    return out


def run_scenario(config: ScenarioConfig, out_dir, metrics: Optional[RunMetrics] = None) -> dict:
    """Run ``config``, write CSV outputs and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    m = run(config) if metrics is None else metrics
    elapsed = time.perf_counter() - t0
    T, N, P = m.steps, m.n_agents, m.n_products
    steps = np.arange(T + 1)
    i, j = price_orientation(config)
    files = {}

    r = m.rates(i, j)
    files["prices.csv"] = _write_csv(
        out / "prices.csv", ["step", "mean"] + ["agent_%d" % a for a in range(N)],
        ([t, r[t].mean()] + list(r[t]) for t in steps))

    tot = m.totals()
    fund = m.fundamental(i, j)
    files["totals.csv"] = _write_csv(
        out / "totals.csv", ["step"] + ["total_%d" % k for k in range(P)] + ["fundamental"],
        ([t] + list(tot[t]) + [fund[t]] for t in steps))

    iu, ju = np.triu_indices(P, 1)
    frac = m.fraction_using_k
    skip_keys = list(m.skips)
    files["trades.csv"] = _write_csv(
        out / "trades.csv",
        ["step", "executed", "productions", "fraction_using_k"]
        + ["pair_%d_%d" % (a, b) for a, b in zip(iu, ju)] + skip_keys,
        ([t, m.executed[t], m.productions[t], frac[t]] + [m.pair_counts[t, a, b] for a, b in zip(iu, ju)]
         + [m.skips[k][t] for k in skip_keys] for t in steps))

    stats = np.stack([trade_preference_stats(m.inventories[t]) for t in steps])
    files["preference_stats.csv"] = _write_csv(
        out / "preference_stats.csv", ["step"] + ["x2_%d_%d" % (a, b) for a, b in zip(iu, ju)],
        ([t] + [stats[t, a, b] for a, b in zip(iu, ju)] for t in steps))

    others = [k for k in range(P) if k != (1 if config.market_kind is MarketKind.CENTRALIZED else 0)]
    base = 1 if config.market_kind is MarketKind.CENTRALIZED else 0
    means = {k: m.mean_rate(base, k) for k in others}
    vars_ = {k: m.var_rate(base, k) for k in others}
    files["ww_stats.csv"] = _write_csv(
        out / "ww_stats.csv",
        ["step"] + sum([["mean_%d_%d" % (base, k), "var_%d_%d" % (base, k)] for k in others], []),
        ([t] + sum([[means[k][t], vars_[k][t]] for k in others], []) for t in steps))

    if config.market_kind is MarketKind.CENTRALIZED:
        cum = m.mm_profit()
        files["market.csv"] = _write_csv(
            out / "market.csv",
            ["step", "closing_price", "fundamental", "model_price", "mm_profit_step", "mm_profit_cumulative"],
            ([t, m.closing_price[t], fund[t], m.model_price[t], m.mm_profit_step[t], cum[t]] for t in steps))

    if meanfield_applicable(config):
        sim = m.mean_rate(i, j)
        mf = mf_price_series(sim[0], fund[0], config.nu, T)
        files["meanfield.csv"] = _write_csv(
            out / "meanfield.csv", ["step", "simulated_mean", "meanfield", "relative_error"],
            ([t, sim[t], mf[t], sim[t] / mf[t] - 1.0] for t in steps))

    every = config.snapshot_interval
    if every > 0:
        with open(out / "snapshots.csv", "w", newline="", encoding="utf-8") as fh:
            write_snapshots((m.state(t) for t in range(0, T + 1, every)), fh)
        files["snapshots.csv"] = len(range(0, T + 1, every)) * N

    summary = _summary(config, m)
    manifest = {
        "name": config.name,
        "version": __version__,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "seed": config.seed,
        "steps": T,
        "kernel_backend": kernels.backend(),
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": elapsed,
        "files": [{"path": name, "rows": rows} for name, rows in files.items()],
        "skip_counters": m.skip_totals(),
        "summary": summary,
        "flags": _flags(config, summary),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return manifest


def _flags(cfg: ScenarioConfig, s: dict) -> dict:
    flags = {"price_within_2pct_of_fundamental": abs(s["final_relative_gap"]) < 0.02}
    if "tau_fit" in s:
        flags["tau_within_25pct"] = bool(abs(s["tau_fit"] / s["tau_analytic"] - 1.0) < 0.25)
    if "monetary_windows" in s:
        flags["monetary_phase"] = bool(s["monetary_windows"])
    if "bubble" in s:
        flags["peak_then_crash"] = s["bubble"]["peak_then_crash"]
    if "mm_profit_nondecreasing" in s:
        flags["mm_profit_nondecreasing"] = s["mm_profit_nondecreasing"]
    return flags


def summarize(manifest) -> str:
    """Human-readable report from a manifest dict or a path to ``manifest.json``."""
    if not isinstance(manifest, dict):
        with open(manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
    s = manifest["summary"]
    lines = ["scenario %s (seed %d, %d steps, config %s)" % (
        manifest["name"], manifest["seed"], manifest["steps"], manifest["config_hash"][:12])]
    lines.append("trades executed: %d, productions: %d" % (s["total_executed"], s["total_productions"]))
    lines.append("final mean price %.6g vs fundamental %.6g (gap %+.3g%%)" % (
        s["final_mean_price"], s["final_fundamental"], 100 * s["final_relative_gap"]))
    if "final_closing_price" in s:
        lines.append("final closing price %.6g; market-maker profit %.6g (nondecreasing: %s)" % (
            s["final_closing_price"], s["mm_profit_total"], s["mm_profit_nondecreasing"]))
    if "tau_fit" in s:
        lines.append("relaxation time: fitted %.4g vs analytic %.4g" % (s["tau_fit"], s["tau_analytic"]))
    if "monetary_windows" in s:
        w = s["monetary_windows"]
        lines.append("monetary windows (fraction using product %d > 0.9): %s" % (
            s["money_product"], ", ".join("[%d, %d)" % tuple(x) for x in w) if w else "none"))
    if "bubble" in s:
        b = s["bubble"]
        if b["peak_then_crash"]:
            lines.append("peak then crash: peak %.4g at step %d, crash at step %d" % (
                b["peak_price"], b["peak_step"], b["crash_step"]))
        else:
            lines.append("no peak-then-crash pattern (peak %.4g at step %d)" % (b["peak_price"], b["peak_step"]))
        lines.append("longest run above fundamental: %d steps" % b["longest_run_above_fundamental"])
    skips = ", ".join("%s=%d" % kv for kv in sorted(s["skip_counters"].items()))
    lines.append("skipped operations: %s" % skips)
    return "\n".join(lines)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowecon", description="Gauge-invariant agent-based market simulator.")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run a scenario file or preset name")
    r.add_argument("config")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--steps", type=int)
    r.add_argument("--workers", type=int)
    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("config")
    rep = sub.add_parser("report", help="print a summary of a finished run")
    rep.add_argument("manifest")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "report":
            print(summarize(args.manifest))
            return EXIT_OK
        cfg = parse_config(args.config)
        if args.verb == "validate":
            print("ok: %s (%s, N=%d, P=%d, %d steps)" % (
                cfg.name, cfg.market_kind.value, cfg.n_agents, cfg.n_products, cfg.steps))
            return EXIT_OK
        over = {k: getattr(args, k) for k in ("seed", "steps", "workers") if getattr(args, k) is not None}
        if over:
            cfg = cfg.with_overrides(**over)
        manifest = run_scenario(cfg, args.out)
        print(summarize(manifest))
        return EXIT_OK
    except (ConfigError, DomainError) as exc:
        print("invalid configuration: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
