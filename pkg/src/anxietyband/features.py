"""Windowing, peak-statistic feature vectors and the protocol context code."""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ManifestMismatch, ShortSegmentWarning
from .labeling import AnxietyLabel, attach_labels
from .peaks import MIN_PROMINENCE, detect_peaks
from .protocol import STRESS_PHASES, PhaseMark, check_phase
from .signalproc import BVP, EDA

WINDOW_S = 30.0
HOP_S = 15.0

_STATS = ("mean", "median", "std", "rms", "max", "min")
EDA_FEATURES = tuple(f"P_{fam}_{st}" for fam in ("amp", "width", "prom") for st in _STATS)
BVP_FEATURES = (
    ("S#_min",)
    + tuple(f"S_{fam}_{st}" for fam in ("width", "prom") for st in _STATS)
    + ("S_amp_mean", "S_amp_std", "S_amp_rms", "S_amp_range")
)
FEATURE_NAMES = {EDA: EDA_FEATURES, BVP: BVP_FEATURES}
CONTEXT_COLUMN = "context"

CONTEXT_CODES = {
    "pre_stress": -1,
    "anticipatory_stress": 0,
    "speech": 0,
    "math": 0,
    "recovery": 1,
}


@dataclass(frozen=True)
class Window:
    start_s: float
    phase: str
    signal_kind: str
    start: int
    stop: int
    duration_s: float = WINDOW_S
    hop_s: float = HOP_S


@dataclass(frozen=True)
class AnalysisCrop:
    """How much of each protocol block enters the analysis.

    ``None`` keeps a block whole.  Pre-stress keeps its final seconds, the
    stress block (anticipation, speech, math) keeps its final seconds and
    recovery keeps its first seconds.
    """

    pre_stress_s: float | None = 180.0
    stress_s: float | None = 900.0
    recovery_s: float | None = 750.0


NO_CROP = AnalysisCrop(None, None, None)


def encode_context(phase: str) -> int:
    return CONTEXT_CODES[check_phase(phase)]


def crop_phase_marks(marks, fs: float, crop: AnalysisCrop = AnalysisCrop()) -> tuple[PhaseMark, ...]:
    marks = list(marks)
    out = []
    stress = [m for m in marks if m.phase in STRESS_PHASES]
    stress_keep = None if crop.stress_s is None else int(round(crop.stress_s * fs))
    if stress_keep is not None and stress:
        cut = max(stress[0].start, stress[-1].end - stress_keep)
    for m in marks:
        start, end = m.start, m.end
        if m.phase == "pre_stress" and crop.pre_stress_s is not None:
            start = max(start, end - int(round(crop.pre_stress_s * fs)))
        elif m.phase in STRESS_PHASES and stress_keep is not None:
            start = min(max(start, cut), end)
        elif m.phase == "recovery" and crop.recovery_s is not None:
            end = min(end, start + int(round(crop.recovery_s * fs)))
        if end > start:
            out.append(PhaseMark(m.phase, start, end))
    return tuple(out)


def segment_windows(signal, phase_marks=None, window_s: float = WINDOW_S,
                    hop_s: float = HOP_S) -> list[Window]:
    """Fully contained windows, restarting the hop grid at every phase start."""
    fs = signal.fs
    marks = signal.phase_marks if phase_marks is None else phase_marks
    win = int(round(window_s * fs))
    hop = int(round(hop_s * fs))
    out = []
    for m in marks:
        n = m.end - m.start
        if n < win:
            warnings.warn(
                f"{m.phase} segment of {n / fs:g} s is shorter than one {window_s:g} s window",
                ShortSegmentWarning,
            )
            continue
        for k in range((n - win) // hop + 1):
            s = m.start + k * hop
            out.append(Window(s / fs, m.phase, signal.kind, s, s + win, window_s, hop_s))
    return out


def family_stats(values) -> tuple[float, ...]:
    """mean, median, population std, RMS, max, min."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return (0.0,) * 6
    return (
        float(v.mean()),
        float(np.median(v)),
        float(v.std()),
        float(np.sqrt(np.mean(v * v))),
        float(v.max()),
        float(v.min()),
    )


def eda_features(x, fs: float, min_prominence: float = MIN_PROMINENCE[EDA]) -> tuple[dict, bool]:
    """18 EDA features; the bool is True when the window had no peaks."""
    ps = detect_peaks(x, fs, min_prominence)
    vals = family_stats(ps.amplitudes) + family_stats(ps.widths_s) + family_stats(ps.prominences)
    return dict(zip(EDA_FEATURES, vals)), len(ps) == 0


def bvp_features(x, fs: float, min_prominence: float = MIN_PROMINENCE[BVP]) -> tuple[dict, bool]:
    """17 BVP features; the bool is True when the window had no peaks."""
    ps = detect_peaks(x, fs, min_prominence)
    if len(ps) == 0:
        return dict.fromkeys(BVP_FEATURES, 0.0), True
    per_min = len(ps) * 60.0 / (len(x) / fs)
    amp = family_stats(ps.amplitudes)
    amps = ps.amplitudes
    vals = (
        (per_min,)
        + family_stats(ps.widths_s)
        + family_stats(ps.prominences)
        + (amp[0], amp[2], amp[3], float(amps.max() - amps.min()))
    )
    return dict(zip(BVP_FEATURES, vals)), False


_EXTRACTORS = {EDA: eda_features, BVP: bvp_features}


def window_features(x, kind: str, fs: float) -> tuple[dict, bool]:
    return _EXTRACTORS[kind](x, fs)


@dataclass
class FeatureMatrix:
    X: np.ndarray
    column_names: tuple[str, ...]
    subject_id: np.ndarray
    phase: np.ndarray
    window_start_s: np.ndarray
    signal_kind: np.ndarray
    label: np.ndarray  # "A", "NA" or "" when unlabeled
    peakless: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.subject_id), len(self.column_names))
        self.column_names = tuple(self.column_names)

    def __len__(self):
        return self.X.shape[0]

    @property
    def y(self) -> np.ndarray:
        """Labels as 1 (anxious) / 0 (not anxious)."""
        return (self.label == AnxietyLabel.A.value).astype(int)

    @property
    def has_context(self) -> bool:
        return CONTEXT_COLUMN in self.column_names

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=int)
        return FeatureMatrix(
            self.X[rows], self.column_names, self.subject_id[rows], self.phase[rows],
            self.window_start_s[rows], self.signal_kind[rows], self.label[rows],
            self.peakless[rows], dict(self.provenance),
        )

    def select(self, columns) -> "FeatureMatrix":
        columns = tuple(columns)
        missing = [c for c in columns if c not in self.column_names]
        if missing:
            raise ManifestMismatch(f"columns not in matrix: {missing}")
        idx = [self.column_names.index(c) for c in columns]
        out = self.take(np.arange(len(self)))
        out.X = self.X[:, idx]
        out.column_names = columns
        return out

    def to_csv(self, path) -> None:
        head = ["subject_id", "phase", "window_start_s", "signal_kind", "label"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head + list(self.column_names))
            for i in range(len(self)):
                w.writerow(
                    [self.subject_id[i], self.phase[i], f"{self.window_start_s[i]:g}",
                     self.signal_kind[i], self.label[i]]
                    + [repr(float(v)) for v in self.X[i]]
                )
        with open(_sidecar(path), "w") as fh:
            json.dump(
                {"columns": list(self.column_names), "peakless": self.peakless.astype(int).tolist(),
                 **self.provenance},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        cols = tuple(head[5:])
        with open(_sidecar(path)) as fh:
            side = json.load(fh)
        if tuple(side["columns"]) != cols:
            raise ManifestMismatch("CSV header disagrees with its sidecar manifest")
        peakless = np.array(side.pop("peakless"), dtype=bool)
        side.pop("columns")
        col = lambda k: np.array([r[k] for r in body], dtype=object)  # noqa: E731
        return cls(
            np.array([[float(v) for v in r[5:]] for r in body]).reshape(len(body), len(cols)),
            cols, col(0), col(1), np.array([float(r[2]) for r in body]), col(3), col(4),
            peakless, side,
        )


def _sidecar(path) -> str:
    return str(path) + ".json"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_feature_matrix(signals, labels=None, with_context: bool = False,
                         crop: AnalysisCrop = AnalysisCrop()) -> FeatureMatrix:
    """Stack per-window features from preprocessed signals into one matrix.

    ``signals`` must all be of one kind; ``labels`` maps session id to
    ``{timestamp: AnxietyLabel}``.  Pass ``labels=None`` for an unlabeled matrix.
    """
    signals = list(signals)
    kinds = {s.kind for s in signals}
    if len(kinds) != 1:
        raise ConfigError(f"expected signals of a single kind, got {sorted(kinds)}")
    kind = kinds.pop()
    names = FEATURE_NAMES[kind] + ((CONTEXT_COLUMN,) if with_context else ())

    rows, subj, phase, start, lab, peakless = [], [], [], [], [], []
    for sig in signals:
        wins = segment_windows(sig, crop_phase_marks(sig.phase_marks, sig.fs, crop))
        if labels is not None:
            win_labels = [lbl.value for lbl in attach_labels(wins, labels.get(sig.session_id, {}))]
        else:
            win_labels = [""] * len(wins)
        for w, lbl in zip(wins, win_labels):
            feats, empty = window_features(sig.samples[w.start:w.stop], kind, sig.fs)
            row = [feats[n] for n in FEATURE_NAMES[kind]]
            if with_context:
                row.append(float(encode_context(w.phase)))
            rows.append(row)
            subj.append(sig.session_id)
            phase.append(w.phase)
            start.append(w.start_s)
            lab.append(lbl)
            peakless.append(empty)

    provenance = {
        "sessions": [s.session_id for s in signals],
        "signal_kind": kind,
        "config_hash": config_hash(
            {"kind": kind, "with_context": with_context, "crop": asdict(crop),
             "window_s": WINDOW_S, "hop_s": HOP_S, "min_prominence": MIN_PROMINENCE[kind]}
        ),
    }
    n = len(rows)
    return FeatureMatrix(
        np.array(rows, dtype=float).reshape(n, len(names)), names,
        np.array(subj, dtype=object), np.array(phase, dtype=object),
        np.array(start, dtype=float), np.array([kind] * n, dtype=object),
        np.array(lab, dtype=object), np.array(peakless, dtype=bool), provenance,
    )

