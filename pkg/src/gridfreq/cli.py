"""Command-line entry point: ``gridfreq run|compare|reserve-calc|analyze``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, MarketInfeasibleError, NumericalError
from .metrics import compute_metrics, load_frequency_csv
from .scenario import compare_scenarios, load_config, reserve_calc, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INFEASIBLE = 0, 2, 3, 4


def _summary(m):
    skew = "n/a" if m.skewness is None else f"{m.skewness:+.3f}"
    lines = [
        f"sigma_f      {m.sigma_f:9.3f} mHz",
        f"pct_out_200  {m.pct_out_200:9.3f} %",
        f"pct_out_150  {m.pct_out_150:9.3f} %",
        f"nadir/zenith {m.nadir:9.1f} / {m.zenith:.1f} mHz",
        f"skewness     {skew:>9}",
        f"time_error   {m.time_error:9.3f} s",
    ]
    for i, r in enumerate(m.recovery_times):
        lines.append(f"recovery[{i}]  {'never' if r is None else f'{r:.2f} s':>9}")
    return "\n".join(lines)


def build_parser():
    ap = argparse.ArgumentParser(prog="gridfreq", description="Aggregate grid frequency-control simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="log clearing and trip events")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run one scenario (preset name or YAML file)")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="seconds")
    p.add_argument("--out", default="out", help="output directory (default: out)")

    p = sub.add_parser("compare", help="run several scenarios and tabulate their statistics")
    p.add_argument("configs", nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--out", help="also write traces and comparison.csv here")

    p = sub.add_parser("reserve-calc", help="aggregate droop response of a fleet")
    p.add_argument("--fleet-mw", type=float, required=True)
    p.add_argument("--droop-pct", type=float, required=True)
    p.add_argument("--delta-f-mhz", type=float, required=True)
    p.add_argument("--deadband-mhz", type=float, required=True)
    p.add_argument("--f0", type=float, default=50.0)

    p = sub.add_parser("analyze", help="metrics of an external t_s,delta_f_mhz CSV")
    p.add_argument("csv")
    p.add_argument("--f0", type=float, default=50.0)
    p.add_argument("--event", type=float, action="append", default=[], help="event time for recovery (s)")
    p.add_argument("--band", type=float, default=150.0)
    p.add_argument("--json", action="store_true")
    return ap


def _dispatch(args):
    if args.cmd == "reserve-calc":
        mw = reserve_calc(args.fleet_mw, args.droop_pct, args.delta_f_mhz, args.deadband_mhz, args.f0)
        print(f"{mw:.1f} MW")
        return
    if args.cmd == "analyze":
        m = compute_metrics(load_frequency_csv(args.csv), args.f0, args.event, args.band)
        if args.json:
            print(json.dumps({k: v for k, v in m.as_dict().items() if k not in ("histogram", "bin_edges")}))
        else:
            print(_summary(m))
        return
    if args.cmd == "run":
        cfg = load_config(args.config).with_(seed=args.seed, duration=args.duration)
        res = run_scenario(cfg, out_dir=args.out)
        print(f"{cfg.name}  seed={cfg.seed}  {cfg.duration:.0f} s simulated in {res.runtime_s:.1f} s")
        print(_summary(res.metrics))
        for kind, path in res.files.items():
            print(f"{kind:10s} {path}")
        return
    cfgs = [load_config(c).with_(seed=args.seed, duration=args.duration) for c in args.configs]
    comp = compare_scenarios(cfgs, out_dir=args.out)
    print(comp.to_text())


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except MarketInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
