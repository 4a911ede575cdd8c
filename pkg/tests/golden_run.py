"""Golden end-to-end run shared by the acceptance and golden tests.

The corpus itself (about 1M events, ~280 MB) is regenerated from
``golden/corpus_spec.yaml`` and checked against ``golden/corpus.sha256``
instead of being committed; the generator is deterministic, so the hash pins
the exact bytes.
"""
from __future__ import annotations

import hashlib
import time
from pathlib import Path

from polarscope import pipeline
from polarscope.cli import main

GOLDEN = Path(__file__).parent / "golden"
SPEC = GOLDEN / "corpus_spec.yaml"
EXPECTED = GOLDEN / "expected"
COMMANDS = ("validate", "infer-groups", "trends", "align", "newsflow")


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 22), b""):
            h.update(chunk)
    return h.hexdigest()


def output_files(root: Path) -> dict[str, Path]:
    """Every output file below ``root`` except the cache, keyed by relative path."""
    return {p.relative_to(root).as_posix(): p for p in sorted(root.rglob("*"))
            if p.is_file() and "cache" not in p.relative_to(root).parts}


def run_golden(workdir: Path) -> dict:
    pipeline.clear_memo()
    t0 = time.perf_counter()
    codes = {"synth": main(["synth", str(SPEC), "--output", str(workdir)])}
    timings = {"synth": time.perf_counter() - t0}
    config = workdir / "config.yaml"
    for cmd in COMMANDS:
        t = time.perf_counter()
        codes[cmd] = main([cmd, "--config", str(config)])
        timings[cmd] = time.perf_counter() - t
    return {"dir": workdir, "out": workdir / "out", "codes": codes, "timings": timings,
            "corpus_sha256": sha256(workdir / "events.jsonl")}


if __name__ == "__main__":
    # regenerate the committed expectations: python tests/golden_run.py
    import shutil
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        res = run_golden(Path(tmp))
        assert all(c == 0 for c in res["codes"].values()), res["codes"]
        (GOLDEN / "corpus.sha256").write_text(res["corpus_sha256"] + "\n")
        shutil.rmtree(EXPECTED, ignore_errors=True)
        for rel, src in output_files(res["out"]).items():
            dst = EXPECTED / rel
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, dst)
        print({k: round(v, 1) for k, v in res["timings"].items()})
