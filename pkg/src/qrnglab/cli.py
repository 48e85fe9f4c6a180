"""Command-line front end: generate, score, analyze, serve.

Exit codes: 0 success, 1 partial failure (some specs failed or outputs
disagree with their manifest), 2 invalid configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bits import read_ascii, read_packed
from .ent90b import assess
from .families import CircuitSpec
from .harness import ConfigError, ExperimentConfig, ManifestMismatch, evaluate, run_experiment
from .harness.textio import (
    render_battery,
    render_entropy,
    render_frequency_summary,
    render_heatmap,
    render_table,
)
from .qcore import default_calibration, load_calibration
from .simnoise import NoiseProfile
from .sts22 import run_battery

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrnglab",
        description="Quantum random number generation testbed on a "
                    "simulated five-qubit star device.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="run circuit specs and write bit files")
    gen.add_argument("--config", help="YAML experiment file; its values win over flags")
    gen.add_argument("--grid", help="'paper-grid' for the full 105-spec sweep")
    gen.add_argument("--family", help="single spec: C1..C5")
    gen.add_argument("--gate", help="single spec: H, Rx or Ry")
    gen.add_argument("--qubits", help="single spec: comma-separated, e.g. 0,2,4")
    gen.add_argument("--reps", type=int, help="C5 only: measurement repetitions")
    gen.add_argument("--shots", type=int, help="shots per spec (overrides --bits)")
    gen.add_argument("--bits", type=int, help="target stream bits per spec")
    gen.add_argument("--seed", type=int, help="run seed (default 1)")
    gen.add_argument("--calib", help="calibration YAML, or 'ideal'")
    gen.add_argument("--backend", choices=["local", "remote"])
    gen.add_argument("--endpoint", help="remote backend base URL")
    gen.add_argument("--out", help="output directory (default runs)")
    gen.add_argument("--workers", type=int, help="concurrent specs (default 4)")
    gen.set_defaults(func=_cmd_gen)

    for name, help_text in (
        ("test22", "statistical test battery on one bit file"),
        ("test90b", "min-entropy estimation on one bit file"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("bits_file", help="packed bit file (or ASCII with --ascii)")
        cmd.add_argument("--bits", type=int, help="stream length; default whole file")
        cmd.add_argument("--ascii", action="store_true", help="parse '0'/'1' text")
        cmd.add_argument("--out", help="also write the JSON report here")
        cmd.set_defaults(func=_cmd_test22 if name == "test22" else _cmd_test90b)

    analyze = sub.add_parser("analyze", help="score every stream of a run")
    analyze.add_argument("manifest", help="manifest.json of a gen run")
    analyze.add_argument("--which", required=True,
                         choices=["sts22", "ent90b", "biasfit"])
    analyze.add_argument("--out", help="also write the JSON document here")
    analyze.set_defaults(func=_cmd_analyze)

    report = sub.add_parser("report", help="all three analyses of a run")
    report.add_argument("manifest", help="manifest.json of a gen run")
    report.add_argument("--out", help="directory for the JSON documents")
    report.set_defaults(func=_cmd_report)

    serve = sub.add_parser("serve", help="host the execution service over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--seed", type=int, help="base seed (default: fresh entropy)")
    serve.add_argument("--calib", help="calibration YAML, or 'ideal'")
    serve.set_defaults(func=_cmd_serve)

    return parser


def _cmd_gen(args) -> int:
    flags = {
        "grid": args.grid,
        "family": args.family,
        "gate": args.gate,
        "qubits": args.qubits,
        "repetitions": args.reps,
        "shots": args.shots,
        "bits": args.bits,
        "seed": args.seed,
        "calib": args.calib,
        "backend": args.backend,
        "endpoint": args.endpoint,
        "out": args.out,
        "workers": args.workers,
    }
    config = ExperimentConfig.resolve(flags, args.config)
    manifest = run_experiment(config)
    print(f"{len(manifest.entries)} of {len(config.grid)} specs written to "
          f"{config.out_dir}")
    if manifest.errors:
        for err in manifest.errors:
            label = CircuitSpec.from_dict(err["spec"]).label()
            print(f"failed {label}: {err['error']}", file=sys.stderr)
        return 1
    return 0


def _read_stream(path: str, bits: int | None, ascii_mode: bool):
    if ascii_mode:
        stream = read_ascii(path)
        if bits is not None:
            if bits > len(stream):
                raise ValueError(f"file holds {len(stream)} bits, asked for {bits}")
            from .bits import BitStream
            stream = BitStream(stream.bits[:bits])
        return stream
    if bits is None:
        bits = Path(path).stat().st_size * 8
    return read_packed(path, bits)


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _cmd_test22(args) -> int:
    stream = _read_stream(args.bits_file, args.bits, args.ascii)
    doc = run_battery(stream.bits).to_document()
    print(render_battery(doc))
    if args.out:
        _write_json(args.out, doc)
    return 0


def _cmd_test90b(args) -> int:
    stream = _read_stream(args.bits_file, args.bits, args.ascii)
    doc = assess(stream.bits).to_document()
    print(render_entropy(doc))
    if args.out:
        _write_json(args.out, doc)
    return 0


def _fits_table(fits: list[dict]) -> str:
    headers = ["stream", "ones", "expected", "chi2", "dof", "p"]
    rows = []
    for row in fits:
        fit = row["fit"] or {}
        rows.append([
            row["label"],
            f"{row['ones_fraction']:.4f}",
            f"{row['expected_fraction']:.4f}",
            "-" if "chi2" not in fit else f"{fit['chi2']:.2f}",
            "-" if "dof" not in fit else str(fit["dof"]),
            "-" if "p" not in fit else f"{fit['p']:.3g}",
        ])
    return render_table(headers, rows)


def _print_analysis(doc: dict) -> None:
    if doc["which"] == "biasfit":
        print(render_frequency_summary(doc["summary"]))
        print()
        print("Readout-model goodness of fit")
        print(_fits_table(doc["fits"]))
    else:
        print(render_heatmap(doc["heatmap"]))


def _cmd_analyze(args) -> int:
    doc = evaluate(args.manifest, args.which)
    _print_analysis(doc)
    if args.out:
        _write_json(args.out, doc)
    return 0


def _cmd_report(args) -> int:
    failures = 0
    for which in ("sts22", "ent90b", "biasfit"):
        try:
            doc = evaluate(args.manifest, which)
        except ManifestMismatch:
            raise
        except Exception as exc:
            print(f"{which} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(f"== {which} ==")
        _print_analysis(doc)
        print()
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_json(out_dir / f"{which}.json", doc)
    return 1 if failures else 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    if args.calib == "ideal":
        noise = NoiseProfile.ideal()
    elif args.calib is None:
        noise = NoiseProfile.from_calibration(default_calibration())
    else:
        noise = NoiseProfile.from_calibration(load_calibration(args.calib))
    app = create_app(noise=noise, base_seed=args.seed)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ManifestMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
