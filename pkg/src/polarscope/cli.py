"""Command-line entry point: ``polarscope <command> [options]``.

Exit codes: 0 success, 1 validation failure (bad config, bad inputs, bad
spec), 2 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .graphs import UnsupportedInputError
from .groups import InferenceError, read_partition, write_partition
from .ingest import ConfigError, write_events
from .pipeline import (ValidationFailure, cmd_align, cmd_infer_groups, cmd_newsflow, cmd_trends, cmd_validate,
                       load_config)
from .rng import RNG_VERSION
from .synth import NewsStreamSpec, PlantedStreamSpec, SpecError, gen_news_sharing_events, gen_planted_retweet_stream

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _common(p: argparse.ArgumentParser, top: bool) -> None:
    d = None if top else argparse.SUPPRESS
    p.add_argument("--config", default=d, help="run config (YAML)")
    p.add_argument("--output", default=d, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, default=d)
    p.add_argument("--jobs", type=int, default=d, help="worker processes for model selection")
    p.add_argument("--windows", default=d, help="weekly, bimonthly or days:N")
    p.add_argument("--subset", choices=["all", "candidates-only", "exclude-candidates"], default=d)
    p.add_argument("--retweets-with-news", action="store_true", default=d)
    p.add_argument("--restarts", type=int, default=d)
    p.add_argument("--min-overlap", type=int, default=d)
    p.add_argument("--error-json", action="store_true", default=d, help="print errors as JSON on stderr")
    p.add_argument("-v", "--verbose", action="store_true", default=d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polarscope {__version__}")
    _common(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("validate", "check config and inputs"),
                        ("infer-groups", "fit reference partitions on the parties topic"),
                        ("trends", "weekly AEI and partisan-sorting series per topic"),
                        ("align", "cross-topic RMI alignment matrices"),
                        ("newsflow", "outlet tables, viral news and sentiment breakdowns")]:
        _common(sub.add_parser(name, help=help_), top=False)
    sp = sub.add_parser("synth", help="generate synthetic data from a spec file")
    sp.add_argument("spec", help="YAML spec with kind: planted | news | corpus")
    _common(sp, top=False)
    return parser


def _overrides(args) -> dict:
    keys = {"output": "output_dir", "seed": "seed", "jobs": "jobs", "windows": "windows", "subset": "subset",
            "retweets_with_news": "retweets_with_news", "restarts": "restarts", "min_overlap": "min_overlap"}
    out = {}
    for attr, key in keys.items():
        v = getattr(args, attr, None)
        if v is not None and v is not False:
            out[key] = v
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_synth(spec_path: str | Path, output: str | Path | None, seed: int | None = None) -> dict:
    spec_path = Path(spec_path)
    try:
        raw = yaml.safe_load(spec_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {spec_path}") from None
    if not isinstance(raw, dict) or "kind" not in raw:
        raise SpecError("spec must be a mapping with a 'kind' key (planted, news or corpus)")
    raw = dict(raw)
    kind = raw.pop("kind")
    if seed is not None:
        raw["seed"] = seed
    out = Path(output) if output else spec_path.parent / "synth"
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}
    if kind == "planted":
        spec = PlantedStreamSpec.from_dict(raw)
        events, truth = gen_planted_retweet_stream(spec)
        files = {"events": out / "events.jsonl", "truth": out / "truth.csv"}
        write_events(events, files["events"])
        write_partition(truth, files["truth"], seed=spec.seed)
    elif kind == "news":
        part_path = raw.pop("partition", None)
        if part_path is None:
            raise SpecError("news spec needs 'partition': a partition CSV giving each user's bloc")
        part_path = Path(part_path)
        partition = read_partition(part_path if part_path.is_absolute() else spec_path.parent / part_path)
        spec = NewsStreamSpec.from_dict(raw)
        files = {"events": out / "events.jsonl"}
        write_events(gen_news_sharing_events(spec, partition), files["events"])
    elif kind == "corpus":
        from .corpus import CorpusSpec, write_corpus
        files = write_corpus(CorpusSpec.from_dict(raw), out)
    else:
        raise SpecError(f"unknown spec kind {kind!r}")
    meta = {"kind": kind, "spec_sha256": _sha256(spec_path), "rng": RNG_VERSION, "version": __version__,
            "seed": raw.get("seed", 0), "files": {k: {"name": p.name, "sha256": _sha256(p)} for k, p in files.items()}}
    with open(out / "synth_meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return meta


def _report(exc: BaseException, code: int, as_json: bool) -> int:
    kind = type(exc).__name__
    if as_json:
        doc = {"error": kind, "message": str(exc), "exit_code": code}
        if isinstance(exc, ValidationFailure):
            doc["findings"] = exc.findings
        print(json.dumps(doc, ensure_ascii=False), file=sys.stderr)
    else:
        print(f"polarscope: {kind}: {exc}", file=sys.stderr)
        for f in getattr(exc, "findings", [])[:50]:
            print(f"  {f['where']}: {f['message']}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            meta = run_synth(args.spec, args.output, args.seed)
            print(f"wrote {', '.join(f['name'] for f in meta['files'].values())}")
            return EXIT_OK
        if not args.config:
            raise ValidationFailure([{"where": "--config", "message": "a run config is required"}])
        config = load_config(args.config, _overrides(args))
        if args.command == "validate":
            report = cmd_validate(config)
            if not report["clean"]:
                raise ValidationFailure(report["findings"])
            s = report["summary"]
            print(f"ok: {s.get('events', 0)} events, {s.get('users', 0)} users")
            return EXIT_OK
        command = {"infer-groups": cmd_infer_groups, "trends": cmd_trends, "align": cmd_align,
                   "newsflow": cmd_newsflow}[args.command]
        result = command(config)
        if isinstance(result, list):
            print(f"wrote {len(result)} files under {config.out}")
        return EXIT_OK
    except (ValidationFailure, ConfigError, SpecError) as exc:
        return _report(exc, EXIT_INVALID, args.error_json)
    except (UnsupportedInputError, InferenceError, FileNotFoundError, OSError, ValueError, KeyError) as exc:
        return _report(exc, EXIT_RUNTIME, args.error_json)


if __name__ == "__main__":
    sys.exit(main())
