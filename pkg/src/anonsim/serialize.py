"""Stable on-disk formats for run records and reports.

All writers are atomic (temp file then rename) and deterministic: the
same record object always serializes to the same bytes, so identical
configuration and seed reproduce identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from importlib import resources

from .protocols import RandomnessLedger, Transcript

RUN_RECORD_SCHEMA = "run_record.schema.json"
VERDICT_REPORT_SCHEMA = "verdict_report.schema.json"


def run_record(
    protocol: str,
    n: int,
    seed: int,
    stream_id: int,
    transcript: Transcript,
    ledger: RandomnessLedger,
    verdicts: dict,
    config: dict | None = None,
) -> dict:
    """Assemble the canonical JSON structure for one protocol run."""
    record = {
        "protocol": protocol,
        "n": n,
        "seed": seed,
        "stream_id": stream_id,
        "rounds": transcript.to_json()["rounds"],
        "aborted": transcript.aborted,
        "ledger": ledger.to_json(),
        "verdicts": verdicts,
    }
    if config is not None:
        record["config"] = config
    return record


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_text(path: str, text: str) -> None:
    """Atomic text write: never leaves a partial file behind."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj: dict) -> None:
    write_text(path, dumps(obj))


def schema_text(name: str) -> str:
    """Contents of a shipped schema file (see schemas/)."""
    return (
        resources.files("anonsim").joinpath("schemas").joinpath(name).read_text()
    )
