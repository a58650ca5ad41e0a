"""Bounds shared by every verification job."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace

LABELLED_ONLY = "labelled-only"
SILENT_GRANULAR = "silent-granular"


@dataclass(frozen=True)
class JobConfig:
    max_trace_len: int = 4
    repl_bound: int = 2
    recipe_depth: int = 1
    fresh_pool_size: int = 2
    comparison_mode: str = LABELLED_ONLY
    seed: int = 0
    attacker_names: tuple[str, ...] = field(default=())
    input_pool: tuple = field(default=())

    def __post_init__(self):
        if self.max_trace_len < 0:
            raise ValueError("max_trace_len must be non-negative")
        if self.repl_bound < 1:
            raise ValueError("repl_bound must be positive")
        if self.recipe_depth < 0:
            raise ValueError("recipe_depth must be non-negative")
        if self.fresh_pool_size < 0:
            raise ValueError("fresh_pool_size must be non-negative")
        if self.comparison_mode not in (LABELLED_ONLY, SILENT_GRANULAR):
            raise ValueError(f"unknown comparison mode {self.comparison_mode!r}")
        object.__setattr__(self, "attacker_names", tuple(self.attacker_names))
        object.__setattr__(self, "input_pool", tuple(self.input_pool))

    def with_(self, **changes) -> "JobConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attacker_names"] = list(self.attacker_names)
        d["input_pool"] = [str(t) for t in self.input_pool]
        return d


def worker_count() -> int:
    """Worker processes for suites that fan out (TRACEPI_JOBS, default 1)."""
    try:
        return max(1, int(os.environ.get("TRACEPI_JOBS", "1")))
    except ValueError:
        return 1
