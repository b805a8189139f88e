"""Thin command-line client for the benchmark service.

Every subcommand talks HTTP to the service; by default the requests run
against an in-process application instance (no server needed), while
--server http://host:port targets a remote lab.

Exit codes: 0 success, 2 config error, 3 numeric divergence, 4 comparison
error.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_COMPARISON = 4

_KIND_TO_EXIT = {
    "config": EXIT_CONFIG,
    "usage": EXIT_CONFIG,
    "domain": EXIT_CONFIG,
    "divergence": EXIT_DIVERGENCE,
    "comparison": EXIT_COMPARISON,
}

PROTOCOLS = {
    "end-to-end": {"epochs": 1000, "repeats": 4},
    "phase-split": {"epochs": 100, "repeats": 4},
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


async def _request(args, method: str, path: str, payload: dict | None = None) -> dict:
    if args.server:
        transport = None
        base_url = args.server
    else:
        from .service import app

        transport = httpx.ASGITransport(app=app)
        base_url = "http://mlpbench.local"
    try:
        async with httpx.AsyncClient(transport=transport, base_url=base_url, timeout=None) as client:
            resp = await client.request(method, path, json=payload)
    except httpx.HTTPError as e:
        raise CliError(f"connection error: cannot reach {base_url}: {e}", EXIT_CONFIG) from e
    if resp.status_code >= 400:
        try:
            error = resp.json()["error"]
            kind, message = error["kind"], error["message"]
        except Exception:
            kind, message = "config", resp.text
        raise CliError(f"{kind} error: {message}", _KIND_TO_EXIT.get(kind, EXIT_CONFIG))
    return resp.json()


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_config_flags(p: argparse.ArgumentParser, with_strategy: bool = True) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config file (flat keys)")
    p.add_argument("--protocol", choices=sorted(PROTOCOLS),
                   help="epoch/repeat preset: end-to-end = 1000x4, phase-split = 100x4 "
                        "(file values and flags still override)")
    p.add_argument("--run-id")
    if with_strategy:
        p.add_argument("--strategy",
                       choices=["sequential_online", "batch_vectorized",
                                "thread_map_reduce", "thread_full_pipeline"])
        p.add_argument("--batch-size", type=int, dest="batch_size")
        p.add_argument("--threads", type=int)
    p.add_argument("--activation", choices=["relu", "sigmoid"])
    p.add_argument("--loss", choices=["mse", "bce"])
    p.add_argument("--layer-widths", type=_int_list, dest="layer_widths", metavar="W1,W2,...")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--data-seed", type=int, dest="data_seed")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--epochs", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--warmup-repeats", type=int, dest="warmup_repeats")


_CONFIG_FLAG_KEYS = (
    "run_id", "strategy", "activation", "loss", "layer_widths", "learning_rate",
    "seed", "data_seed", "n_samples", "epochs", "repeats", "warmup_repeats",
    "batch_size", "threads",
)


def _config_payload(args, exclude: tuple[str, ...] = ()) -> dict:
    """File values merged under explicitly-set flags, on the CLI side, so
    the service receives one flat config object."""
    merged: dict = {}
    if args.protocol:
        merged.update(PROTOCOLS[args.protocol])
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config error: config file not found: {path}", EXIT_CONFIG)
        text = path.read_text(encoding="utf-8").strip()
        if text:
            try:
                file_values = json.loads(text)
            except json.JSONDecodeError as e:
                raise CliError(f"config error: {path}: invalid JSON ({e})", EXIT_CONFIG)
            if not isinstance(file_values, dict):
                raise CliError(f"config error: {path}: expected a JSON object", EXIT_CONFIG)
            merged.update(file_values)
    for key in _CONFIG_FLAG_KEYS:
        if key in exclude:
            continue
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _write(path: str | Path, data: bytes, label: str) -> None:
    Path(path).write_bytes(data)
    print(f"wrote {label}: {path}")


async def _cmd_run(args) -> int:
    payload = {"config": _config_payload(args)}
    result = await _request(args, "POST", "/bench/run", payload)
    run_id = result["artifact"]["config"]["run_id"]
    out_csv = args.out_csv or f"{run_id}.csv"
    out_params = args.out_params or f"{run_id}.params.bin"
    out_artifact = args.out_artifact or f"{run_id}.artifact.json"
    _write(out_csv, result["csv"].encode("utf-8"), "timing csv")
    _write(out_params, base64.b64decode(result["params_b64"]), "trained params")
    _write(out_artifact, json.dumps(result["artifact"], indent=2).encode("utf-8"), "run artifact")
    summary = result["artifact"]["summary"]
    for phase in ("forward", "backward", "update", "total"):
        stats = summary[phase]
        print(f"  {phase:<9} min {stats['min_ns']:>14,} ns   mean {stats['mean_ns']:>16,.0f} ns")
    print(f"  final loss {result['artifact']['final_loss']:.6g} "
          f"(initial {result['artifact']['initial_loss']:.6g}), "
          f"params digest {result['artifact']['params_digest']}")
    return EXIT_OK


async def _cmd_sweep(args, key: str, path: str) -> int:
    payload = {"config": _config_payload(args, exclude=(key,)), key: getattr(args, key)}
    if getattr(args, "mode", None):
        payload["mode"] = args.mode
    result = await _request(args, "POST", path, payload)
    first_id = result["artifacts"][0]["config"]["run_id"]
    base = first_id.rsplit("_", 1)[0] if "_" in first_id else first_id
    out_csv = args.out_csv or f"{base}.csv"
    out_artifacts = args.out_artifacts or f"{base}.artifacts.json"
    _write(out_csv, result["csv"].encode("utf-8"), "timing csv")
    _write(out_artifacts, json.dumps(result["artifacts"], indent=2).encode("utf-8"), "run artifacts")
    for artifact in result["artifacts"]:
        cfg = artifact["config"]
        total_min = artifact["summary"]["total"]["min_ns"]
        print(f"  {cfg['run_id']:<24} total min {total_min:>14,} ns")
    return EXIT_OK


async def _cmd_analyze(args) -> int:
    payload: dict = {"baseline_run_id": args.baseline}
    if args.csv:
        payload["csv"] = Path(args.csv).read_text(encoding="utf-8")
    if args.artifacts:
        docs = []
        for path in args.artifacts:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
            docs.extend(loaded if isinstance(loaded, list) else [loaded])
        payload["artifacts"] = docs
    result = await _request(args, "POST", "/analyze", payload)
    out = args.out or "report.json"
    _write(out, json.dumps(result["report"], indent=2).encode("utf-8"), "comparison report")
    for variant in result["report"]["variants"]:
        line = f"  {variant['run_id']:<24} total speedup {variant['speedup']['total']:.3f}x"
        if variant["amdahl"]:
            line += f"  (amdahl p={variant['amdahl']['p']:.3f} at s={variant['amdahl']['s']:g})"
        elif variant["amdahl_note"]:
            line += f"  (no amdahl fit: {variant['amdahl_note']})"
        print(line)
    knee = result["report"]["knee"]
    if knee:
        if knee["flagged_interval"]:
            lo, hi = knee["flagged_interval"]
            print(f"  knee: sub-linear interval ({lo}, {hi}), boundary estimate {knee['boundary_estimate']:g}")
        else:
            print("  knee: no sub-linear interval flagged")
    if result["activation_table"]:
        print(result["activation_table"])
    return EXIT_OK


async def _cmd_plot_data(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    result = await _request(args, "POST", "/plot-data", {"report": report})
    out = args.out or "plot.json"
    _write(out, json.dumps(result["document"], indent=2).encode("utf-8"), "plot data")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("mlpbench.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlpbench", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--server", metavar="URL",
                        help="benchmark service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one benchmark run")
    _add_config_flags(p_run)
    p_run.add_argument("--out-csv", metavar="PATH")
    p_run.add_argument("--out-params", metavar="PATH")
    p_run.add_argument("--out-artifact", metavar="PATH")

    p_sweep = sub.add_parser("sweep", help="batch-size sweep")
    _add_config_flags(p_sweep, with_strategy=False)
    p_sweep.add_argument("--batch-sizes", type=_int_list, required=True, dest="batch_sizes",
                         metavar="B1,B2,...")
    p_sweep.add_argument("--mode", choices=["vector-length", "fixed-dataset"],
                         help="vector-length (default): dataset = one full batch per size, "
                              "the knee experiment; fixed-dataset: configured dataset plus a "
                              "sequential baseline, the speedup experiment")
    p_sweep.add_argument("--out-csv", metavar="PATH")
    p_sweep.add_argument("--out-artifacts", metavar="PATH")

    p_tsweep = sub.add_parser("threads-sweep", help="thread-count sweep (plus sequential baseline)")
    _add_config_flags(p_tsweep, with_strategy=False)
    p_tsweep.add_argument("--threads", type=_int_list, required=True, metavar="T1,T2,...")
    p_tsweep.add_argument("--strategy", choices=["thread_full_pipeline", "thread_map_reduce"])
    p_tsweep.add_argument("--out-csv", metavar="PATH")
    p_tsweep.add_argument("--out-artifacts", metavar="PATH")

    p_an = sub.add_parser("analyze", help="comparison report from CSV or run artifacts")
    p_an.add_argument("--csv", metavar="PATH")
    p_an.add_argument("--artifacts", nargs="+", metavar="PATH")
    p_an.add_argument("--baseline", metavar="RUN_ID")
    p_an.add_argument("--out", metavar="PATH")

    p_pd = sub.add_parser("plot-data", help="plot-ready JSON series from a comparison report")
    p_pd.add_argument("--report", required=True, metavar="PATH")
    p_pd.add_argument("--out", metavar="PATH")

    p_serve = sub.add_parser("serve", help="start the benchmark service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return asyncio.run(_cmd_run(args))
        if args.command == "sweep":
            return asyncio.run(_cmd_sweep(args, "batch_sizes", "/bench/sweep"))
        if args.command == "threads-sweep":
            return asyncio.run(_cmd_sweep(args, "threads", "/bench/threads-sweep"))
        if args.command == "analyze":
            return asyncio.run(_cmd_analyze(args))
        if args.command == "plot-data":
            return asyncio.run(_cmd_plot_data(args))
        if args.command == "serve":
            return _cmd_serve(args)
    except CliError as e:
        print(str(e), file=sys.stderr)
        return e.exit_code
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
