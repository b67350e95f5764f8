"""Session files: one CSV per signal (``t_seconds,value``) plus ``manifest.json``.

A cohort directory holds one sub-directory per session, ``stai.csv`` and
``stai_mask.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .labeling import DEFAULT_POSITIVE_ITEMS, read_mask_json, read_stai_csv
from .protocol import PhaseMark, check_phase
from .signalproc import BVP, EDA, RawSignal

SIGNAL_FILES = {EDA: "eda.csv", BVP: "bvp.csv"}
MANIFEST = "manifest.json"
STAI_FILE = "stai.csv"
MASK_FILE = "stai_mask.json"


@dataclass(frozen=True)
class PhaseSpan:
    phase: str
    start_s: float
    end_s: float


@dataclass
class Session:
    session_id: str
    signals: dict  # kind -> RawSignal
    phases: tuple[PhaseSpan, ...]

    def signal(self, kind: str) -> RawSignal:
        try:
            return self.signals[kind]
        except KeyError:
            raise DataError(f"session {self.session_id} has no {kind} stream") from None


def marks_for(phases, fs: float, n_samples: int) -> tuple[PhaseMark, ...]:
    return tuple(
        PhaseMark(p.phase, min(int(round(p.start_s * fs)), n_samples), min(int(round(p.end_s * fs)), n_samples))
        for p in phases
    )


def make_session(session_id: str, streams: dict, phases) -> Session:
    """Build a session from ``{kind: (samples, fs)}`` and phase spans in seconds."""
    phases = tuple(phases)
    for p in phases:
        check_phase(p.phase)
    signals = {
        kind: RawSignal(np.asarray(x, dtype=float), fs, kind, session_id, marks_for(phases, fs, len(x)))
        for kind, (x, fs) in streams.items()
    }
    return Session(session_id, signals, phases)


def write_session(session: Session, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "session_id": session.session_id,
        "signals": {},
        "phase_marks": [{"phase": p.phase, "start_s": p.start_s, "end_s": p.end_s} for p in session.phases],
    }
    for kind, sig in sorted(session.signals.items()):
        name = SIGNAL_FILES[kind]
        t = np.arange(len(sig)) / sig.fs
        np.savetxt(d / name, np.column_stack((t, sig.samples)), fmt="%.6f", delimiter=",",
                   header="t_seconds,value", comments="")
        manifest["signals"][kind] = {"file": name, "fs": sig.fs, "kind": kind}
    with open(d / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return d


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise DataError(f"no {MANIFEST} in {directory}")
    with open(path) as fh:
        manifest = json.load(fh)
    for m in manifest.get("phase_marks", []):
        check_phase(m["phase"])
    return manifest


def read_signal_rows(path, start: int = 0, count: int | None = None) -> np.ndarray:
    """Values column of a signal CSV, optionally only rows ``start..start+count``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1 + start, max_rows=count, ndmin=2)
    if data.shape[1] != 2:
        raise DataError(f"{path}: expected columns t_seconds,value")
    return data[:, 1]


def read_session(directory, kinds=(EDA, BVP)) -> Session:
    d = Path(directory)
    manifest = read_manifest(d)
    phases = tuple(PhaseSpan(m["phase"], float(m["start_s"]), float(m["end_s"]))
                   for m in manifest["phase_marks"])
    streams = {}
    for kind in kinds:
        info = manifest["signals"].get(kind)
        if info is None:
            continue
        streams[kind] = (read_signal_rows(d / info["file"]), float(info["fs"]))
    return make_session(manifest["session_id"], streams, phases)


def session_dirs(cohort_dir) -> list[Path]:
    root = Path(cohort_dir)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    return sorted(p for p in root.iterdir() if (p / MANIFEST).exists())


def read_cohort(cohort_dir, kinds=(EDA, BVP)):
    """All sessions plus STAI responses of a cohort directory."""
    root = Path(cohort_dir)
    dirs = session_dirs(root)
    if not dirs:
        raise DataError(f"no sessions under {root}")
    sessions = [read_session(d, kinds) for d in dirs]
    mask = read_mask_json(root / MASK_FILE) if (root / MASK_FILE).exists() else DEFAULT_POSITIVE_ITEMS
    if not (root / STAI_FILE).exists():
        raise DataError(f"no {STAI_FILE} in {root}")
    return sessions, read_stai_csv(root / STAI_FILE, mask)

