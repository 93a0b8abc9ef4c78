"""Command-line entry points: serve, run (headless), codegen.

Environment overrides: SILOPLANT_PORT for the service port, SILOPLANT_LOG
for the run-log path.  Explicit flags win over the environment, which wins
over the config file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import AppConfig, default_config, load_config
from .errors import SiloPlantError
from .runtime import CycleLogWriter
from .stgen import ModelError, emit_st, parse_model
from .system import build_system, load_scenario, run_headless

log = logging.getLogger(__name__)


def _load_app_config(path: str | None) -> AppConfig:
    if path is None:
        return default_config()
    return load_config(path)


def _resolve_log_path(cli_value: str | None, config: AppConfig) -> str | None:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("SILOPLANT_LOG")
    if env:
        return env
    return config.log.path


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import SimulationService, create_app, default_model_document

    config = _load_app_config(args.config)
    if args.time_scale is not None:
        config = replace(config, cycle=replace(config.cycle, time_scale=args.time_scale))
    elif config.cycle.time_scale <= 0:
        # A service without pacing would spin as fast as the CPU allows.
        config = replace(config, cycle=replace(config.cycle, time_scale=1.0))

    log_path = _resolve_log_path(args.log, config)
    writer = CycleLogWriter(log_path, config.log.rotate_bytes) if log_path else None
    system = build_system(config, log_writer=writer)

    model_document = None
    if args.model:
        model_document = json.loads(Path(args.model).read_text())
    service = SimulationService(system, model_document or default_model_document())
    ui_dir = args.ui
    if ui_dir is None and Path("frontend/index.html").exists():
        ui_dir = "frontend"
    app = create_app(service, ui_dir=ui_dir)
    if ui_dir:
        log.info("operator panel served at /ui/ from %s", ui_dir)

    port = args.port or int(os.environ.get("SILOPLANT_PORT", "8000"))
    service.start()
    try:
        uvicorn.run(app, host=args.host, port=port, log_level="info")
    finally:
        service.stop()
        if writer:
            writer.close()
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_app_config(args.config)
    # Headless runs are unpaced; simulated time still advances one period per cycle.
    config = replace(config, cycle=replace(config.cycle, time_scale=0.0))
    log_path = _resolve_log_path(args.log, config)
    writer = CycleLogWriter(log_path, config.log.rotate_bytes) if log_path else None
    system = build_system(config, log_writer=writer)
    scenario = load_scenario(args.scenario) if args.scenario else []
    cycles = args.cycles or config.cycle.max_cycles
    if not cycles:
        print("run: --cycles is required (or set cycle.max_cycles in the config)", file=sys.stderr)
        return 2
    reports = run_headless(system, cycles, scenario)
    if writer:
        writer.close()
    summary = {
        "cycles": len(reports),
        "processes": {
            pid: machine.snapshot() for pid, machine in system.pc.processes.items()
        },
        "overruns": system.runtime.overrun_count,
        "log": log_path,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_codegen(args: argparse.Namespace) -> int:
    try:
        document = Path(args.model).read_text()
    except OSError as exc:
        print(f"codegen: cannot read {args.model}: {exc}", file=sys.stderr)
        return 2
    try:
        model = parse_model(document)
    except ModelError as exc:
        print(f"codegen: {exc.code}: {exc}", file=sys.stderr)
        return 1
    text = emit_st(model)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siloplant")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the plant with the HTTP/WebSocket service")
    serve.add_argument("--config", help="plant configuration file (JSON)")
    serve.add_argument("--port", type=int, help="HTTP port (default 8000, env SILOPLANT_PORT)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--time-scale", type=float, dest="time_scale",
                       help="wall pacing: 1 = real time, larger = faster")
    serve.add_argument("--log", help="run-log path (env SILOPLANT_LOG)")
    serve.add_argument("--model", help="component model served at /api/model")
    serve.add_argument("--ui", help="directory with the built operator panel (mounted at /ui)")
    serve.set_defaults(func=cmd_serve)

    run = sub.add_parser("run", help="headless scenario run at full speed")
    run.add_argument("--config", help="plant configuration file (JSON)")
    run.add_argument("--scenario", help="scenario file: JSON list of {cycle, kind, payload}")
    run.add_argument("--cycles", type=int, help="number of scan cycles to execute")
    run.add_argument("--log", help="run-log path (env SILOPLANT_LOG)")
    run.set_defaults(func=cmd_run)

    codegen = sub.add_parser("codegen", help="emit IEC 61131-3 declarations from a model file")
    codegen.add_argument("model", help="component model (JSON or structured text)")
    codegen.add_argument("-o", "--output", help="output path (default: stdout)")
    codegen.set_defaults(func=cmd_codegen)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SiloPlantError as exc:
        print(f"{parser.prog}: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
