"""Run directories, manifests and report aggregation."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError

MANIFEST = "manifest.json"


def _plain(v):
    """numpy scalars/arrays to built-in types for JSON."""
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


@dataclass
class Criterion:
    name: str
    passed: bool
    hard: bool
    value: object = None
    threshold: object = None
    label: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = _plain(self.value)

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "fail" if self.hard else "soft-fail"


@dataclass
class RunManifest:
    kind: str
    d: int
    config_hash: str
    seed: int
    version: str
    started: str
    duration_s: float
    criteria: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def hard_failures(self) -> list:
        return [c for c in self.criteria if c["status"] == "fail"]

    @property
    def soft_failures(self) -> list:
        return [c for c in self.criteria if c["status"] == "soft-fail"]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunManifest":
        return cls(**obj)

    def write(self, run_dir) -> Path:
        """Atomic write: temp file in the same directory, then rename."""
        run_dir = Path(run_dir)
        fd, tmp = tempfile.mkstemp(prefix=".manifest-", dir=run_dir)
        with os.fdopen(fd, "w") as fh:
            json.dump(_plain(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, run_dir / MANIFEST)
        return run_dir / MANIFEST


def new_run_dir(out, kind: str, config_hash: str, now: datetime | None = None) -> Path:
    """``<out>/<kind>-<hash12>-<UTC timestamp>``; never reuses a directory."""
    now = now or datetime.now(timezone.utc)
    base = Path(out) / f"{kind}-{config_hash[:12]}-{now.strftime('%Y%m%dT%H%M%S%fZ')}"
    path, k = base, 1
    while True:
        try:
            path.mkdir(parents=True, exist_ok=False)
            return path
        except FileExistsError:
            path = base.with_name(f"{base.name}-{k}")
            k += 1


def load_manifest(path) -> tuple[RunManifest | None, Path, str | None]:
    """Load ``path`` (a manifest file or run directory). Returns (manifest, dir, problem)."""
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST
    if not p.exists():
        return None, p.parent, "manifest missing"
    try:
        m = RunManifest.from_dict(json.loads(p.read_text()))
    except (json.JSONDecodeError, TypeError) as exc:
        return None, p.parent, f"manifest unreadable ({exc.__class__.__name__})"
    missing = [o for o in m.outputs if not (p.parent / o).exists()]
    if missing:
        return m, p.parent, "missing outputs: " + ", ".join(missing)
    return m, p.parent, None


def report(paths) -> tuple[str, int]:
    """Plain-text aggregate of several runs, grouped by dimension.

    Returns the text and the number of hard failures plus corrupt runs.
    """
    paths = list(paths)
    if not paths:
        raise InvalidInputError("report needs at least one manifest")
    by_d: dict = {}
    corrupt = []
    n_hard = n_soft = n_pass = 0
    for path in paths:
        m, run_dir, problem = load_manifest(path)
        if problem:
            corrupt.append((str(run_dir), problem))
        if m is None:
            continue
        by_d.setdefault(m.d, []).append((m, run_dir, problem))
    lines = ["radonshell verification report", ""]
    for d in sorted(by_d):
        lines.append(f"== d = {d} ==")
        for m, run_dir, problem in by_d[d]:
            tag = " [CORRUPT]" if problem else ""
            lines.append(f"{m.kind} ({run_dir.name}, seed {m.seed}, {m.duration_s:.1f} s){tag}")
            for c in m.criteria:
                st = c["status"]
                n_pass += st == "pass"
                n_hard += st == "fail"
                n_soft += st == "soft-fail"
                kind = "hard" if c["hard"] else "soft"
                lines.append(f"  {st.upper():9s} {c['name']} [{kind}] {c.get('label', '')}: "
                             f"value={c.get('value')} threshold={c.get('threshold')}")
        lines.append("")
    if corrupt:
        lines.append("== corrupt runs ==")
        lines += [f"  {r}: {why}" for r, why in corrupt]
        lines.append("")
    lines.append(f"passed: {n_pass}  hard failures: {n_hard}  soft failures: {n_soft}  "
                 f"corrupt runs: {len(corrupt)}")
    return "\n".join(lines) + "\n", n_hard + len(corrupt)
