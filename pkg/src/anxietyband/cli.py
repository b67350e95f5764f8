"""Command-line front end: simulate, train, evaluate, stream, report.

Examples
  anxietyband --out cohort simulate --subjects 41
  anxietyband --out runs train --data cohort --signal eda --context
  anxietyband --out runs stream --model runs/eda_c/model.anxb --session cohort/S01
  anxietyband report runs
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import AnxietyBandError, ConfigError, DataError, ManifestMismatch, MissingArtifacts
from .features import CONTEXT_COLUMN, AnalysisCrop, encode_context, window_features
from .features import HOP_S, WINDOW_S
from .models import MODEL_KINDS, RANDOM_FOREST, evaluate, load_model, save_model, write_grid_report
from .models.trained import predict_proba
from .pipeline import TrainConfig, feature_matrix, label_cohort, stai_summary, train_on_matrix
from .protocol import PHASES
from .sessions import read_cohort, read_manifest, read_signal_rows
from .signalproc import BVP, EDA, preprocess_window
from .stats import write_selection_report
from .synth import generate_cohort, spec_from_dict, write_cohort

log = logging.getLogger("anxietyband")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_RUNTIME = 5
EXIT_IO = 6

MODEL_FILE = "model.anxb"
METRICS_FILE = "metrics.json"
SELECTION_FILE = "selection_report.csv"
GRID_FILE = "grid_report.csv"
TRACE_FILE = "probability_trace.csv"
LATENCY_FILE = "latency.json"
STAGES = ("data_loading", "signal_processing", "feature_extraction", "prediction")


class StageError(Exception):
    """Wraps a pipeline error with the stage it came from."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")
        self.stage, self.error = stage, error


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (AnxietyBandError, OSError, ValueError, KeyError) as e:
        raise StageError(name, e) from e


@dataclass
class PipelineConfig:
    data: str | None = None
    out: str = "out"
    model_path: str | None = None
    signal: str = EDA
    with_context: bool = False
    seed: int = 0
    proportions: tuple = (0.5, 0.1, 0.4)
    model: str = RANDOM_FOREST
    grid: list | None = None
    folds: int = 5
    threshold: float = 0.5
    alpha: float = 0.05
    by_subject: bool = False
    crop: dict = field(default_factory=lambda: asdict(AnalysisCrop()))
    cohort: dict = field(default_factory=dict)

    def __post_init__(self):
        self.signal = str(self.signal).upper()
        if self.signal not in (EDA, BVP):
            raise ConfigError(f"signal must be EDA or BVP, got {self.signal!r}")
        self.proportions = tuple(float(p) for p in self.proportions)
        if len(self.proportions) != 3 or any(p < 0 for p in self.proportions) \
                or not math.isclose(sum(self.proportions), 1.0, abs_tol=1e-9):
            raise ConfigError(f"split proportions must be three non-negative values summing to 1, "
                              f"got {self.proportions}")
        if self.model not in MODEL_KINDS + ("auto",):
            raise ConfigError(f"unknown model {self.model!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")

    @property
    def tag(self) -> str:
        return self.signal.lower() + ("_c" if self.with_context else "")

    def train_config(self) -> TrainConfig:
        try:
            crop = AnalysisCrop(**self.crop)
        except TypeError as e:
            raise ConfigError(f"bad crop settings: {e}") from None
        return TrainConfig(self.signal, self.with_context, self.seed, self.proportions, self.model,
                           self.grid, self.folds, self.threshold, self.alpha, self.by_subject,
                           False, crop)


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    return cfg


def make_config(args, **overrides) -> PipelineConfig:
    cfg = load_config(args.config)
    for key in ("seed", "out"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig(**cfg)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_dir(path, what: str) -> Path:
    if path is None:
        raise ConfigError(f"{what} directory not given")
    p = Path(path)
    if not p.is_dir():
        raise DataError(f"{what} directory {p} does not exist")
    return p


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = make_config(args)
    cohort_cfg = dict(cfg.cohort)
    cohort_cfg["seed"] = cfg.seed
    if args.subjects is not None:
        cohort_cfg["n_subjects"] = args.subjects
    try:
        spec = spec_from_dict(cohort_cfg)
    except TypeError as e:
        raise ConfigError(f"bad cohort settings: {e}") from None
    cohort = generate_cohort(spec)
    root = write_cohort(cohort, spec, cfg.out)
    _, labels = label_cohort([r for s in cohort for r in s.stai])
    n_a = sum(v.value == "A" for d in labels.values() for v in d.values())
    print(f"wrote {len(cohort)} sessions to {root}")
    print(f"STAI labels: {n_a} anxious / {sum(len(d) for d in labels.values()) - n_a} not anxious")
    return EXIT_OK


# -- train / evaluate --------------------------------------------------------

def _load_cohort(cfg):
    root = _require_dir(cfg.data, "data")
    with stage("ingest"):
        sessions, stai = read_cohort(root, kinds=(cfg.signal,))
    with stage("labeling"):
        scores, labels = label_cohort(stai)
    return sessions, scores, labels


def cmd_train(args) -> int:
    cfg = make_config(args, data=args.data, signal=args.signal, with_context=args.context or None,
                      model=args.model, threshold=args.threshold, alpha=args.alpha)
    sessions, scores, labels = _load_cohort(cfg)
    tcfg = cfg.train_config()
    with stage("features"):
        matrix = feature_matrix(sessions, labels, cfg.signal, cfg.with_context, tcfg.crop)
    with stage("training"):
        result = train_on_matrix(matrix, tcfg)

    out = Path(cfg.out) / cfg.tag
    out.mkdir(parents=True, exist_ok=True)
    model_path = Path(cfg.model_path) if cfg.model_path else out / MODEL_FILE
    size = save_model(result.model, model_path)
    write_selection_report(result.selection, out / SELECTION_FILE)
    write_grid_report(result.grid_table, out / GRID_FILE)
    test_rows = result.split.test
    with open(out / TRACE_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "true_label", "p_anxious"])
        for r, p in zip(test_rows, result.test_proba):
            w.writerow([int(r), matrix.label[r], repr(float(p))])
    _write_json({
        "config": {"signal": cfg.signal, "with_context": cfg.with_context, "seed": cfg.seed,
                   "proportions": list(cfg.proportions), "model": cfg.model,
                   "threshold": cfg.threshold, "alpha": cfg.alpha, "by_subject": cfg.by_subject},
        "model_kind": result.model.kind,
        "hyperparams": result.model.hyperparams,
        "features": list(result.model.feature_names),
        "n_windows": len(matrix),
        "split_sizes": [len(result.split.train), len(result.split.validation), len(test_rows)],
        "validation_accuracy": result.validation_scores,
        "test": result.metrics.to_dict(),
        "stai": stai_summary(scores),
        "model_size_bytes": size,
    }, out / METRICS_FILE)
    m = result.metrics
    print(f"{cfg.tag}: {result.model.kind} {result.model.hyperparams}")
    print(f"  accuracy {m.accuracy:.4f}  F1(A) {m.f1_anxious:.4f}  F1(NA) {m.f1_not_anxious:.4f}  "
          f"macro F1 {m.macro_f1:.4f}")
    print(f"  model {model_path} ({size} bytes), reports in {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    meta = model.metadata
    cfg = make_config(args, data=args.data, signal=meta.get("signal"),
                      with_context=bool(meta.get("with_context", model.uses_context)),
                      threshold=args.threshold)
    sessions, _, labels = _load_cohort(cfg)
    with stage("features"):
        matrix = feature_matrix(sessions, labels, cfg.signal, model.uses_context,
                                cfg.train_config().crop)
    with stage("evaluation"):
        metrics = evaluate(model, matrix, cfg.threshold)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json({"model": str(args.model), "n_windows": len(matrix), "metrics": metrics.to_dict()},
                out / "evaluation.json")
    print(f"{len(matrix)} windows: accuracy {metrics.accuracy:.4f}, macro F1 {metrics.macro_f1:.4f}")
    return EXIT_OK


# -- stream ------------------------------------------------------------------

def _phase_at(marks, t: float) -> str | None:
    for m in marks:
        if m["start_s"] <= t < m["end_s"]:
            return m["phase"]
    return None


def stream_session(model_path, session_dir, minutes: float = 1.0, start_s: float = 0.0,
                   threshold: float = 0.5, clock=time.perf_counter) -> dict:
    """Replay a recorded session window by window and time each stage.

    Calibration bounds for scaling come from the pre-stress block (whole
    recording when no marks exist) and are read before the clock starts.
    """
    model = load_model(model_path)
    size = Path(model_path).stat().st_size
    kind = model.metadata.get("signal", EDA)
    session_dir = Path(session_dir)
    manifest = read_manifest(session_dir)
    marks = manifest.get("phase_marks", [])
    if model.uses_context and not marks:
        raise ManifestMismatch("model expects a context feature but the session has no phase marks")
    info = manifest["signals"].get(kind)
    if info is None:
        raise DataError(f"session {session_dir} has no {kind} stream")
    fs = float(info["fs"])
    path = session_dir / info["file"]

    full = read_signal_rows(path)
    pre = [m for m in marks if m["phase"] == PHASES[0]]
    calib = full[int(pre[0]["start_s"] * fs):int(pre[0]["end_s"] * fs)] if pre else full
    lo, hi = float(np.min(calib)), float(np.max(calib))
    n_win = int(math.floor((minutes * 60.0 - WINDOW_S) / HOP_S)) + 1
    win_n, hop_n, first = int(round(WINDOW_S * fs)), int(round(HOP_S * fs)), int(round(start_s * fs))
    if n_win < 1 or first + (n_win - 1) * hop_n + win_n > len(full):
        raise DataError(f"session shorter than the requested {minutes} min from {start_s} s")

    windows = []
    for k in range(n_win):
        t_win = start_s + k * HOP_S
        laps = [clock()]
        x = read_signal_rows(path, first + k * hop_n, win_n)
        laps.append(clock())
        y = preprocess_window(x, kind, fs, lo, hi)
        laps.append(clock())
        feats, peakless = window_features(y, kind, fs)
        if model.uses_context:
            phase = _phase_at(marks, t_win)
            if phase is None:
                raise ManifestMismatch(f"no phase mark covers t={t_win} s")
            feats[CONTEXT_COLUMN] = float(encode_context(phase))
        laps.append(clock())
        pred = predict_proba(model, feats, threshold)
        laps.append(clock())
        st = {name: laps[i + 1] - laps[i] for i, name in enumerate(STAGES)}
        st["total"] = laps[-1] - laps[0]
        windows.append({"window": k, "start_s": t_win, "p_anxious": pred.p_anxious,
                        "label": pred.label.value, "peakless": peakless, "seconds": st})

    totals = np.array([w["seconds"]["total"] for w in windows])
    agg = {}
    for name in STAGES + ("total",):
        v = np.array([w["seconds"][name] for w in windows])
        agg[name] = {"median": float(np.median(v)), "p95": float(np.percentile(v, 95)),
                     "max": float(v.max())}
    return {"model": str(model_path), "session": manifest.get("session_id", session_dir.name),
            "signal": kind, "n_windows": len(windows), "windows": windows, "aggregate": agg,
            "max_total_s": float(totals.max()), "model_size_bytes": size}


def cmd_stream(args) -> int:
    cfg = make_config(args, threshold=args.threshold)
    with stage("stream"):
        report = stream_session(args.model, args.session, args.minutes, args.start_s, cfg.threshold)
    for w in report["windows"]:
        s = w["seconds"]
        print(f"window {w['window']} t={w['start_s']:g}s p_anxious={w['p_anxious']:.3f} {w['label']:>2}  "
              + "  ".join(f"{k}={s[k] * 1e3:.2f}ms" for k in STAGES + ("total",)))
    a = report["aggregate"]["total"]
    print(f"total per window: median {a['median'] * 1e3:.2f} ms, p95 {a['p95'] * 1e3:.2f} ms; "
          f"model size {report['model_size_bytes']} bytes")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(report, out / LATENCY_FILE)
    return EXIT_OK


# -- report ------------------------------------------------------------------

def _run_dirs(root: Path) -> list[Path]:
    if (root / METRICS_FILE).exists():
        return [root]
    return sorted(p for p in root.iterdir() if (p / METRICS_FILE).exists()) if root.is_dir() else []


def _read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _feature_family(name: str) -> str:
    if name == CONTEXT_COLUMN:
        return "context"
    if name.startswith("S#"):
        return "peak rate"
    return name.split("_")[1]


def build_report(root) -> tuple[str, dict]:
    """Text summary plus plot-ready tables for every run under ``root``."""
    root = Path(root)
    runs = _run_dirs(root)
    if not runs:
        raise MissingArtifacts(f"no {METRICS_FILE} under {root}")
    lines = ["run      model          accuracy  F1(A)   F1(NA)  macro F1",
             "-------  -------------  --------  ------  ------  --------"]
    tables = {"summary": [], "selection": [], "grid": [], "threshold": []}
    for run in runs:
        with open(run / METRICS_FILE) as fh:
            met = json.load(fh)
        t = met["test"]
        lines.append(f"{run.name:<7}  {met['model_kind']:<13}  {t['accuracy']:8.4f}  "
                     f"{t['f1_anxious']:6.4f}  {t['f1_not_anxious']:6.4f}  {t['macro_f1']:8.4f}")
        tables["summary"].append({"run": run.name, "model_kind": met["model_kind"],
                                  **{k: t[k] for k in ("accuracy", "f1_anxious", "f1_not_anxious",
                                                       "macro_f1")}})
        if (run / SELECTION_FILE).exists():
            for r in _read_csv(run / SELECTION_FILE):
                tables["selection"].append({"run": run.name, "family": _feature_family(r["feature"]),
                                            **r})
        if (run / GRID_FILE).exists():
            for r in _read_csv(run / GRID_FILE):
                keep = {k: v for k, v in r.items() if not k.startswith("fold_")}
                tables["grid"].append({"run": run.name, **keep})
        if (run / TRACE_FILE).exists():
            trace = _read_csv(run / TRACE_FILE)
            p = np.array([float(r["p_anxious"]) for r in trace])
            for thr in np.round(np.arange(0.0, 1.0001, 0.05), 2):
                tables["threshold"].append({"run": run.name, "threshold": float(thr),
                                            "predicted_A": int(np.sum(p > thr)), "n": len(p)})

    lines += ["", "selected features by family (selected/total)"]
    for run in runs:
        fam = {}
        for r in tables["selection"]:
            if r["run"] == run.name:
                s, n = fam.get(r["family"], (0, 0))
                fam[r["family"]] = (s + (r["selected"] in ("1", "True", "true")), n + 1)
        if fam:
            lines.append(f"  {run.name:<7} " + "  ".join(f"{k} {s}/{n}" for k, (s, n) in sorted(fam.items())))
    lines += ["", "best cross-validation score per run"]
    for run in runs:
        rows = [r for r in tables["grid"] if r["run"] == run.name]
        if rows:
            best = max(rows, key=lambda r: float(r["mean_score"]))
            params = {k: v for k, v in best.items() if k not in ("run", "mean_score")}
            lines.append(f"  {run.name:<7} {float(best['mean_score']):.4f} {params}")
    return "\n".join(lines) + "\n", tables


def cmd_report(args) -> int:
    text, tables = build_report(args.dir)
    print(text, end="")
    out = Path(args.out) if args.out else Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(text)
    for name, rows in tables.items():
        if not rows:
            continue
        cols = list(dict.fromkeys(k for r in rows for k in r))
        with open(out / f"report_{name}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anxietyband", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    ap.add_argument("--config", type=Path, default=None, help="JSON file mirroring the pipeline config")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    # the same flags after the verb; SUPPRESS keeps them from clobbering the global ones
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="verb", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("simulate", help="write a synthetic cohort")
    p.add_argument("--subjects", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train and evaluate one configuration")
    p.add_argument("--data", default=None, help="cohort directory")
    p.add_argument("--signal", type=str.upper, choices=(EDA, BVP), default=None)
    p.add_argument("--context", action="store_true", help="add the protocol-context feature")
    p.add_argument("--model", choices=MODEL_KINDS + ("auto",), default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a cohort")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stream", help="replay a session and time each stage")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--session", required=True, type=Path)
    p.add_argument("--minutes", type=float, default=1.0)
    p.add_argument("--start-s", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("report", help="summarize training outputs")
    p.add_argument("dir", type=Path)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return _exit_code(e.error)
    except (AnxietyBandError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return _exit_code(e)
    except Exception as e:  # anything unforeseen is a runtime failure, not a crash
        log.debug("unexpected failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def _exit_code(e: Exception) -> int:
    if isinstance(e, ConfigError):
        return EXIT_CONFIG
    if isinstance(e, DataError):
        return EXIT_DATA
    if isinstance(e, OSError):
        return EXIT_IO
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
