"""TSST protocol phases and the STAI timestamp that follows each of them."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownPhase

PHASES = ("pre_stress", "anticipatory_stress", "speech", "math", "recovery")
STRESS_PHASES = ("anticipatory_stress", "speech", "math")
TIMESTAMPS = ("T1", "T2", "T3")

_PHASE_TIMESTAMP = {
    "pre_stress": "T1",
    "anticipatory_stress": "T2",
    "speech": "T2",
    "math": "T2",
    "recovery": "T3",
}


@dataclass(frozen=True)
class PhaseMark:
    """A protocol phase occupying samples ``[start, end)`` of a stream."""

    phase: str
    start: int
    end: int

    def __post_init__(self):
        check_phase(self.phase)
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad phase bounds {self.start}..{self.end}")

    def __len__(self):
        return self.end - self.start


def check_phase(phase: str) -> str:
    if phase not in _PHASE_TIMESTAMP:
        raise UnknownPhase(f"unknown protocol phase {phase!r}")
    return phase


def timestamp_for_phase(phase: str) -> str:
    """STAI timestamp whose questionnaire labels windows of ``phase``."""
    return _PHASE_TIMESTAMP[check_phase(phase)]


def validate_marks(marks, n_samples: int) -> None:
    """Marks must be ordered, non-overlapping and inside ``[0, n_samples]``."""
    prev_end = 0
    for m in marks:
        if m.start < prev_end:
            raise ValueError(f"phase {m.phase} overlaps or is out of order")
        if m.end > n_samples:
            raise ValueError(f"phase {m.phase} ends past the signal ({m.end} > {n_samples})")
        prev_end = m.end
