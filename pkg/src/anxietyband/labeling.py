"""STAI state-anxiety scoring and binary anxious / not-anxious ground truth."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import DegenerateCohort, DegenerateGroup, InvalidItem, MissingLabel
from .protocol import TIMESTAMPS, timestamp_for_phase

N_ITEMS = 20

# Form Y-1 positively phrased items (1-based): calm, secure, at ease, satisfied,
# comfortable, self-confident, relaxed, content, steady, pleasant
DEFAULT_POSITIVE_ITEMS = (1, 2, 5, 8, 10, 11, 15, 16, 19, 20)


class AnxietyLabel(str, enum.Enum):
    A = "A"
    NA = "NA"

    def as_int(self) -> int:
        return 1 if self is AnxietyLabel.A else 0


def default_positive_mask() -> tuple[bool, ...]:
    return tuple(i + 1 in DEFAULT_POSITIVE_ITEMS for i in range(N_ITEMS))


@dataclass(frozen=True)
class StaiResponse:
    subject_id: str
    timestamp: str
    items: tuple[int, ...]
    positive_item_mask: tuple[bool, ...] = default_positive_mask()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(v) for v in self.items))
        object.__setattr__(self, "positive_item_mask", tuple(bool(v) for v in self.positive_item_mask))
        if len(self.items) != N_ITEMS or len(self.positive_item_mask) != N_ITEMS:
            raise InvalidItem(f"STAI needs exactly {N_ITEMS} items")
        if self.timestamp not in TIMESTAMPS:
            raise InvalidItem(f"unknown STAI timestamp {self.timestamp!r}")


@dataclass(frozen=True)
class StaiScore:
    subject_id: str
    timestamp: str
    raw: int
    z: float
    label: AnxietyLabel


def reverse_item(weight: int) -> int:
    return 5 - weight


def score_stai(response: StaiResponse) -> int:
    """Sum of the 20 weights after reversing positively phrased items."""
    total = 0
    for w, positive in zip(response.items, response.positive_item_mask):
        if not 1 <= w <= 4:
            raise InvalidItem(f"item weight {w} outside 1..4 ({response.subject_id}, {response.timestamp})")
        total += reverse_item(w) if positive else w
    return total


def standardize_scores(scores) -> np.ndarray:
    """z-scores against the pooled population mean and (population) std."""
    x = np.asarray(scores, dtype=float)
    if x.size < 2:
        raise DegenerateCohort("need at least two scores to standardize")
    sd = x.std()
    if sd == 0:
        raise DegenerateCohort("all scores are identical")
    return (x - x.mean()) / sd


def label_from_z(z: float) -> AnxietyLabel:
    """Anxious only when strictly above the population mean; ties are NA."""
    if not math.isfinite(z):
        raise ValueError("z-score must be finite")
    return AnxietyLabel.A if z > 0 else AnxietyLabel.NA


def score_cohort(responses) -> list[StaiScore]:
    """Score, pool-standardize across every subject and timestamp, and label."""
    responses = list(responses)
    raw = [score_stai(r) for r in responses]
    z = standardize_scores(raw)
    return [
        StaiScore(r.subject_id, r.timestamp, s, float(zi), label_from_z(float(zi)))
        for r, s, zi in zip(responses, raw, z)
    ]


def labels_by_subject(scores) -> dict[str, dict[str, AnxietyLabel]]:
    out: dict[str, dict[str, AnxietyLabel]] = {}
    for s in scores:
        out.setdefault(s.subject_id, {})[s.timestamp] = s.label
    return out


def attach_labels(windows, stai_by_timestamp: dict[str, AnxietyLabel]) -> list[AnxietyLabel]:
    """Label each window from the questionnaire that closes its phase."""
    out = []
    for w in windows:
        ts = timestamp_for_phase(w.phase)
        if ts not in stai_by_timestamp:
            raise MissingLabel(f"no {ts} STAI label for {w.phase} window at {w.start_s:g} s")
        out.append(AnxietyLabel(stai_by_timestamp[ts]))
    return out


def group_separation(z_a, z_na) -> float:
    """Two-sided Welch t-test p-value between anxious and not-anxious z-scores."""
    a = np.asarray(z_a, dtype=float)
    b = np.asarray(z_na, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DegenerateGroup("both groups must be non-empty")
    va = a.var(ddof=1) / a.size if a.size > 1 else 0.0
    vb = b.var(ddof=1) / b.size if b.size > 1 else 0.0
    se2 = va + vb
    if se2 == 0:
        raise DegenerateGroup("zero combined variance")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    # Welch-Satterthwaite degrees of freedom
    denom = (va**2 / (a.size - 1) if a.size > 1 else 0.0) + (vb**2 / (b.size - 1) if b.size > 1 else 0.0)
    df = se2**2 / denom
    return float(min(1.0, 2.0 * sps.t.sf(abs(t), df)))


# -- file formats ----------------------------------------------------------

STAI_HEADER = ["subject_id", "timestamp"] + [f"item_{i}" for i in range(1, N_ITEMS + 1)]


def write_stai_csv(responses, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STAI_HEADER)
        for r in responses:
            w.writerow([r.subject_id, r.timestamp, *r.items])


def read_stai_csv(path, positive_items=DEFAULT_POSITIVE_ITEMS) -> list[StaiResponse]:
    mask = tuple(i + 1 in set(positive_items) for i in range(N_ITEMS))
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            items = tuple(int(row[f"item_{i}"]) for i in range(1, N_ITEMS + 1))
            out.append(StaiResponse(row["subject_id"], row["timestamp"], items, mask))
    return out


def write_mask_json(path, positive_items=DEFAULT_POSITIVE_ITEMS) -> None:
    with open(path, "w") as fh:
        json.dump({"positive_items": sorted(positive_items)}, fh, indent=2)
        fh.write("\n")


def read_mask_json(path) -> tuple[int, ...]:
    with open(path) as fh:
        items = tuple(int(i) for i in json.load(fh)["positive_items"])
    if any(not 1 <= i <= N_ITEMS for i in items):
        raise InvalidItem("positive item indices must be in 1..20")
    return items
