"""Command-line front end: batch runs, the acceptance gate, the live bridge.

    dualmode simulate <config>   CSV + metrics JSON (+ figures) for one scenario
    dualmode verify              run every acceptance criterion, table + exit code
    dualmode serve <config>      host the live telemetry/operator session

<config> is a path to a JSON document or the name of a bundled scenario.
Output directory resolution: --output-dir flag, then the DUALMODE_OUTPUT_DIR
environment variable, then the current directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import BUNDLED, ConfigError, ScenarioConfig, bundled_config
from .flc import SingularInteractionMatrix

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SINGULAR = 2


def _load_config(spec: str) -> ScenarioConfig:
    path = Path(spec)
    if path.exists():
        return ScenarioConfig.load(path)
    if spec in BUNDLED:
        return bundled_config(spec)
    raise ConfigError(f"{spec!r} is neither a config file nor a bundled scenario "
                      f"(bundled: {', '.join(BUNDLED)})")


def _out_dir(args) -> Path:
    if args.output_dir:
        out = Path(args.output_dir)
    else:
        out = Path(os.environ.get("DUALMODE_OUTPUT_DIR", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    from .engine import run_scenario
    from .report import metrics_summary, render_figures, write_csv, write_metrics

    try:
        cfg = _load_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args)
    ref = cfg.build_reference()
    try:
        log = run_scenario(cfg.plant, cfg.build_controller(), ref, cfg.build_schedule(),
                           cfg.build_noise(), cfg.build_initial_state(), cfg.dt, cfg.duration)
    except SingularInteractionMatrix as err:
        print(f"singularity abort: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    csv_path = write_csv(log, out / f"{cfg.name}.csv")
    metrics = metrics_summary(log, name=cfg.name)
    metrics_path = write_metrics(metrics, out / f"{cfg.name}_metrics.json")
    written = [csv_path, metrics_path]
    if not args.no_figures:
        written += render_figures(log, out, cfg.name, reference=ref)
    print(f"{cfg.name}: {log.n_steps} steps over {log.t[-1]:.1f} s, "
          f"terminal ||e1|| = {metrics['terminal']['e1_norm']:.3e} m, "
          f"energy = {metrics['total_energy']:.2f}")
    for p in written:
        print(f"  wrote {p}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(dt=args.dt)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        print(f"[{mark}] {r.index}. {r.name:<{width}}  ({r.seconds:6.2f}s)  {r.detail}")
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return EXIT_OK if failed == 0 else 1


def cmd_serve(args) -> int:
    from .bridge import LiveSession, serve_forever
    from .engine import default_gain_set

    try:
        cfg = _load_config(args.config)
        if cfg.controller != "unified":
            raise ConfigError("live sessions host the unified controller only")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    session = LiveSession(
        reference=cfg.build_reference(),
        gains=cfg.build_controller() if cfg.gains else default_gain_set(),
        s0=cfg.build_initial_state(),
        dt=cfg.dt,
        sigma=cfg.build_schedule().value_at(0.0),
        noise=cfg.build_noise(),
    )
    ui_dir = args.ui if args.ui and Path(args.ui).is_dir() else None
    if args.ui and ui_dir is None:
        print(f"warning: UI directory {args.ui!r} not found, serving telemetry only", file=sys.stderr)
    try:
        serve_forever(session, args.port, ui_dir)
    except OSError as err:
        print(f"cannot bind port {args.port}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualmode", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV/metrics/figures")
    sim.add_argument("config", help="config path or bundled scenario name")
    sim.add_argument("--output-dir", default=None, help="where to write outputs")
    sim.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    sim.set_defaults(fn=cmd_simulate)

    ver = sub.add_parser("verify", help="run the acceptance criteria")
    ver.add_argument("--dt", type=float, default=1e-3,
                     help="integration step override (tolerances scale with dt^4 where applicable)")
    ver.set_defaults(fn=cmd_verify)

    srv = sub.add_parser("serve", help="host a live operator session")
    srv.add_argument("config", help="config path or bundled scenario name")
    srv.add_argument("--port", type=int, default=8732)
    srv.add_argument("--ui", default=None, help="directory of built operator-console assets")
    srv.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
