"""Run configuration: flag/file merging, seed derivation, deterministic
parallel mapping, and reproducible artifact serialization.

Config files are plain text `key = value` lines with `#` comments. Flags
override file values; unknown keys are errors. Every artifact embeds (or
carries as a sidecar) the fully resolved configuration, and re-running
from that echo reproduces the artifact byte for byte.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import UsageError

THREADS_ENV = "COCYCLE_LAB_THREADS"
SCHEMA = "cocycle-lab/report-v1"


def parse_config_file(path) -> dict:
    """Read `key = value` lines; values stay strings for typed merging."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{lineno}: expected `key = value`")
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        if key in out:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def resolve_config(flag_values: dict, file_values: dict, defaults: dict,
                   parsers: dict) -> dict:
    """Merge precedence: flags > config file > defaults. File keys must be
    known; file values parse with the same converter as the flag."""
    for key in file_values:
        if key not in defaults:
            raise UsageError(f"unknown config key {key!r}")
    resolved = {}
    for key, default in defaults.items():
        if flag_values.get(key) is not None:
            resolved[key] = flag_values[key]
        elif key in file_values:
            parse = parsers.get(key, str)
            try:
                resolved[key] = parse(file_values[key])
            except (ValueError, TypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        else:
            resolved[key] = default
    return resolved


def resolve_threads(value) -> int:
    if value is not None:
        n = int(value)
    else:
        env = os.environ.get(THREADS_ENV)
        n = int(env) if env else 1
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def derive_seed(master: int, index: int) -> int:
    """Deterministic per-task seed: the first word of the PCG64 seed
    sequence keyed by (master, index)."""
    return int(np.random.SeedSequence((int(master), int(index))).generate_state(1)[0])


def parallel_map(fn, tasks, threads: int) -> list:
    """Order-preserving map over independent tasks; results are placed by
    task index, so output is identical for any thread count."""
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def report_text(kind: str, payload: dict, config: dict) -> str:
    """Canonical JSON report text: sorted keys, two-space indent, one
    trailing newline; identical input gives identical bytes."""
    doc = {"schema": SCHEMA, "kind": kind, "config": config}
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, kind: str, payload: dict, config: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(report_text(kind, payload, config))


def config_file_text(config: dict) -> str:
    """Render a resolved config as a reusable `key = value` file."""
    lines = []
    for key in sorted(config):
        if key == "command":
            continue
        value = config[key]
        if value is None:
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
