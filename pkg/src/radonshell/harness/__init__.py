"""Batch experiment driver: configs in, CSV/SVG data and a manifest out."""
from __future__ import annotations

import time
from datetime import datetime, timezone

from .. import __version__
from .config import (KINDS, SOFT_CRITERIA, ConfigError, ExperimentConfig, env_overrides,
                     resolve)
from .manifest import Criterion, RunManifest, load_manifest, new_run_dir, report
from .runners import RUNNERS, build_profile


def run(cfg: ExperimentConfig) -> tuple[RunManifest, "object"]:
    """Execute ``cfg`` in a fresh run directory and write its manifest.

    Criteria listed in ``cfg.soft`` are non-gating unless ``cfg.gate_soft``.
    Returns the manifest and the run directory.
    """
    cfg.validate()
    h = cfg.config_hash()
    now = datetime.now(timezone.utc)
    run_dir = new_run_dir(cfg.out, cfg.kind, h, now)
    (run_dir / "config.json").write_text(cfg.to_json() + "\n")
    t0 = time.perf_counter()
    crit, outputs, summary = RUNNERS[cfg.kind](cfg, run_dir)
    for c in crit:
        c.hard = not (c.name in cfg.soft and not cfg.gate_soft)
    m = RunManifest(kind=cfg.kind, d=cfg.d, config_hash=h, seed=cfg.seed, version=__version__,
                    started=now.isoformat(), duration_s=time.perf_counter() - t0,
                    criteria=[dict(c.__dict__, status=c.status) for c in crit],
                    outputs=["config.json"] + list(outputs), summary=summary,
                    config=cfg.to_dict())
    m.write(run_dir)
    return m, run_dir


__all__ = ["ExperimentConfig", "RunManifest", "Criterion", "ConfigError", "KINDS",
           "SOFT_CRITERIA", "run", "report", "resolve", "env_overrides", "load_manifest",
           "build_profile"]
