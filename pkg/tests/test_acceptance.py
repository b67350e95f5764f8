"""Acceptance criteria, one check per criterion.

Every check prints a single ``PASS``/``FAIL`` line with its runtime and
budget.  Run through pytest, or directly with ``python3 tests/test_acceptance.py``
for just the ten lines.
"""

from __future__ import annotations

import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (  # noqa: E402
    brute_kendall,
    brute_local_maxima,
    brute_prominence,
    brute_width,
    magnitude_response,
    random_signal,
    window_count,
)

from anxietyband.cli import STAGES, stream_session  # noqa: E402
from anxietyband.features import (  # noqa: E402
    CONTEXT_COLUMN,
    AnalysisCrop,
    crop_phase_marks,
    segment_windows,
    window_features,
)
from anxietyband.labeling import (  # noqa: E402
    AnxietyLabel,
    StaiResponse,
    label_from_z,
    reverse_item,
    score_cohort,
    score_stai,
)
from anxietyband.models import (  # noqa: E402
    LINEAR_SVM,
    LOGISTIC,
    RANDOM_FOREST,
    evaluate_predictions,
    fit_model,
    load_model,
    save_model,
    split_dataset,
)
from anxietyband.models.trained import to_bytes  # noqa: E402
from anxietyband.peaks import find_local_maxima, peak_prominence, peak_width  # noqa: E402
from anxietyband.pipeline import TrainConfig, feature_matrix, label_cohort, train_on_matrix  # noqa: E402
from anxietyband.protocol import PhaseMark  # noqa: E402
from anxietyband.signalproc import (  # noqa: E402
    BVP,
    EDA,
    FilterSpec,
    RawSignal,
    design_butterworth_lowpass,
    preprocess_window,
)
from anxietyband.stats import kendall_tau_b  # noqa: E402
from anxietyband.synth import CohortSpec, cohort_stai, generate_cohort, write_cohort  # noqa: E402

STATS = ("mean", "median", "std", "rms", "max", "min")
EXPECTED_EDA = [f"P_{f}_{s}" for f in ("amp", "width", "prom") for s in STATS]
EXPECTED_BVP = (["S#_min"] + [f"S_{f}_{s}" for f in ("width", "prom") for s in STATS]
                + ["S_amp_mean", "S_amp_std", "S_amp_rms", "S_amp_range"])
STAI_TARGETS = {"T1": 26.92, "T2": 31.54, "T3": 25.40}
REFERENCE_WINDOWS = 4853


# -- checks ----------------------------------------------------------------------
# each returns (ok, detail) and never raises on a plain mismatch

def check_filter():
    worst_cut, monotone, oracle_gap = 0.0, True, 0.0
    for fc, fs in ((1.0, 4.0), (10.0, 64.0)):
        c = design_butterworth_lowpass(FilterSpec(5, fc, fs))
        worst_cut = max(worst_cut, abs(abs(c.frequency_response([fc], fs)[0]) - 1 / np.sqrt(2)))
        f = np.linspace(0.0, fs / 2, 1000)
        h = np.abs(c.frequency_response(f, fs))
        # flat to double precision near DC, so monotone means non-increasing up to rounding
        monotone &= bool(np.all(np.diff(h) <= 1e-12))
        oracle_gap = max(oracle_gap, float(np.max(np.abs(h - magnitude_response(c.b, c.a, f, fs)))))
    ok = worst_cut < 1e-6 and monotone and oracle_gap < 1e-9
    return ok, f"max ||H(fc)|-1/sqrt2| {worst_cut:.1e}, monotone {monotone}, oracle gap {oracle_gap:.1e}"


def check_peaks():
    rng = np.random.default_rng(2024)
    bad, n_peaks = 0, 0
    for _ in range(1000):
        x = random_signal(rng, 200)
        idx = find_local_maxima(x).tolist()
        if idx != brute_local_maxima(x):
            bad += 1
            continue
        for i in idx:
            n_peaks += 1
            prom = peak_prominence(x, i)
            if abs(prom[0] - brute_prominence(x, i)[0]) > 1e-9 \
                    or abs(peak_width(x, i, 0.5, prom)[0] - brute_width(x, i)) > 1e-6:
                bad += 1
                break
    return bad == 0, f"{bad} mismatching signals, {n_peaks} peaks compared"


def _random_window(rng, n):
    mode = rng.integers(5)
    t = np.arange(n)
    if mode == 0:
        return rng.normal(size=n).cumsum()
    if mode == 1:
        return rng.normal(size=n)
    if mode == 2:
        return np.sin(2 * np.pi * t / rng.uniform(4, 80)) + rng.normal(0, 0.1, n)
    if mode == 3:
        return np.full(n, rng.normal())
    x = np.zeros(n)
    x[rng.integers(0, n, rng.integers(1, 40))] = rng.uniform(0.1, 1.0)
    return np.convolve(x, np.exp(-np.arange(20) / 5.0))[:n]


def check_features():
    rng = np.random.default_rng(7)
    bad = []
    for k in range(10_000):
        kind, fs = (EDA, 4.0) if k % 2 else (BVP, 64.0)
        x = _random_window(rng, int(30 * fs))
        y = preprocess_window(x, kind, fs, x.min(), x.max()) if rng.random() < 0.9 else x
        feats, _ = window_features(y, kind, fs)
        names = list(feats)
        if names != (EXPECTED_EDA if kind == EDA else EXPECTED_BVP):
            bad.append(f"{kind} names")
            continue
        fams = ("P_amp", "P_width", "P_prom") if kind == EDA else ("S_width", "S_prom")
        for fam in fams:
            mn, md, mx = feats[fam + "_min"], feats[fam + "_median"], feats[fam + "_max"]
            rms, mean = feats[fam + "_rms"], feats[fam + "_mean"]
            tol = 1e-12 * max(1.0, abs(mean))
            if not (mn <= md <= mx and rms >= abs(mean) - tol):
                bad.append(fam)
        if kind == BVP and not (feats["S_amp_rms"] >= abs(feats["S_amp_mean"]) - 1e-12
                                and feats["S_amp_range"] >= 0 and feats["S#_min"] >= 0):
            bad.append("S_amp")
        if not all(np.isfinite(v) for v in feats.values()):
            bad.append("non-finite")
    return not bad, f"{len(EXPECTED_EDA)} EDA / {len(EXPECTED_BVP)} BVP names, {len(bad)} violations"


def check_stai():
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(10_000):
        items = tuple(int(v) for v in rng.integers(1, 5, 20))
        mask = tuple(bool(m) for m in rng.random(20) < 0.5)
        s = score_stai(StaiResponse("s", "T1", items, mask))
        ok &= 20 <= s <= 80 and s == sum((5 - v) if m else v for v, m in zip(items, mask))
    ok &= all(reverse_item(reverse_item(w)) == w for w in (1, 2, 3, 4))
    ok &= label_from_z(0.0) is AnxietyLabel.NA and label_from_z(np.nextafter(0.0, 1.0)) is AnxietyLabel.A
    # a score exactly at the cohort mean is not anxious
    tie = score_cohort([StaiResponse(f"s{i}", "T1", (v,) * 20, (False,) * 20) for i, v in enumerate((1, 2, 3))])
    ok &= tie[1].label is AnxietyLabel.NA
    means = {ts: [] for ts in STAI_TARGETS}
    for seed in range(10):
        rs = cohort_stai(CohortSpec(seed=seed))
        for ts in STAI_TARGETS:
            means[ts].append(np.mean([score_stai(r) for r in rs if r.timestamp == ts]))
    med = {ts: float(np.median(v)) for ts, v in means.items()}
    close = all(abs(med[ts] - STAI_TARGETS[ts]) <= 2.0 for ts in STAI_TARGETS)
    return bool(ok and close), "10-seed medians " + ", ".join(f"{ts} {m:.2f}" for ts, m in med.items())


def check_kendall():
    rng = np.random.default_rng(5)
    done, worst, exact = 0, 0.0, True
    while done < 500:
        n = int(rng.integers(3, 201))
        x = rng.integers(0, 12, n).astype(float) if done % 2 else np.round(rng.normal(size=n), 1)
        y = rng.integers(0, 2, n).astype(float)
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        done += 1
        r = kendall_tau_b(x, y)
        worst = max(worst, abs(r.tau_b - brute_kendall(x.tolist(), y.tolist())[0]))
        flip, mono = kendall_tau_b(x, 1 - y), kendall_tau_b(np.exp(x / 3) * 7 + 2, y)
        exact &= flip.tau_b == -r.tau_b and flip.p_value == r.p_value
        exact &= mono.tau_b == r.tau_b and mono.p_value == r.p_value
    return worst < 1e-12 and exact, f"max |tau - oracle| {worst:.1e}, exact symmetries {exact}"


def check_windows():
    counts = []
    for length in (180, 900):
        n = int(length * 4)
        sig = RawSignal(np.zeros(n), 4.0, EDA, "s", (PhaseMark("pre_stress", 0, n),))
        counts.append(len(segment_windows(sig)))
    formula = [int((L - 30) // 15) + 1 for L in (180, 900)]
    ok = counts == [11, 59] == formula == [window_count(L) for L in (180, 900)]
    total = 0
    for s in generate_cohort(CohortSpec()):
        sig = s.session.signal(EDA)
        total += len(segment_windows(sig, crop_phase_marks(sig.phase_marks, sig.fs, AnalysisCrop())))
    rel = abs(total - REFERENCE_WINDOWS) / REFERENCE_WINDOWS
    return ok and rel <= 0.05, f"{counts[0]}/{counts[1]} windows, cohort total {total} ({rel:.1%} from {REFERENCE_WINDOWS})"


def check_determinism():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(600, 6))
    y = ((X[:, 0] - X[:, 3] + rng.normal(0, 0.8, 600)) > 0).astype(int)
    names = [f"f{i}" for i in range(6)]
    s1, s2 = split_dataset(y, 4), split_dataset(y, 4)
    ok = all(np.array_equal(getattr(s1, f), getattr(s2, f)) for f in ("train", "validation", "test"))
    hp = {"criterion": "gini", "max_depth": 7, "n_estimators": 13}
    f1, f2 = (fit_model(RANDOM_FOREST, X[s1.train], y[s1.train], names, hp, seed=4) for _ in range(2))
    ok &= to_bytes(f1) == to_bytes(f2)
    ok &= evaluate_predictions(y[s1.test], f1.proba(X[s1.test])) == \
        evaluate_predictions(y[s1.test], f2.proba(X[s1.test]))
    rows = rng.normal(size=(1000, 6))
    with tempfile.TemporaryDirectory() as tmp:
        for kind, h in ((RANDOM_FOREST, hp), (LOGISTIC, {"l2_strength": 0.01}), (LINEAR_SVM, {"c": 1.0})):
            m = fit_model(kind, X, y, names, h, seed=4)
            save_model(m, Path(tmp) / "m.anxb")
            ok &= bool(np.array_equal(load_model(Path(tmp) / "m.anxb").proba(rows), m.proba(rows)))
    return bool(ok), "split, forest bytes, metrics and 3 model round trips on 1000 rows"


def check_direction(seeds=range(5)):
    acc = {(k, c): [] for k in (EDA, BVP) for c in (False, True)}
    for seed in seeds:
        cohort = generate_cohort(CohortSpec(seed=seed))
        sessions = [s.session for s in cohort]
        _, labels = label_cohort([r for s in cohort for r in s.stai])
        for kind in (EDA, BVP):
            full = feature_matrix(sessions, labels, kind, True)
            for ctx in (False, True):
                m = full if ctx else full.select(full.column_names[:-1])
                r = train_on_matrix(m, TrainConfig(signal=kind, with_context=ctx, seed=seed))
                acc[(kind, ctx)].append(r.metrics.accuracy)
    ok, parts = True, []
    for kind in (EDA, BVP):
        base, ctx = np.array(acc[(kind, False)]), np.array(acc[(kind, True)])
        gain = float(np.median(ctx) - np.median(base))
        paired = float(np.median(ctx - base))
        ok &= gain > 0
        parts.append(f"{kind} {np.median(base):.4f} -> {kind}+C {np.median(ctx):.4f} "
                     f"(median gain {gain:+.4f}, median paired gain {paired:+.4f})")
    return bool(ok), "; ".join(parts)


def _small_models():
    cohort = generate_cohort(CohortSpec(n_subjects=12, seed=0))
    _, labels = label_cohort([r for s in cohort for r in s.stai])
    full = feature_matrix([s.session for s in cohort], labels, EDA, True)
    plain = full.select(full.column_names[:-1])
    cfg = dict(signal=EDA, seed=0)
    return cohort, full, train_on_matrix(full, TrainConfig(with_context=True, **cfg)), \
        train_on_matrix(plain, TrainConfig(**cfg))


def check_threshold():
    _, full, ctx, plain = _small_models()
    p = ctx.test_proba
    counts = [int(np.sum(p > t)) for t in np.linspace(0.5, 1.0, 51)]
    monotone = all(a >= b for a, b in zip(counts, counts[1:]))
    test = full.take(ctx.split.test)
    flipped = full.take(ctx.split.test)
    col = flipped.column_names.index(CONTEXT_COLUMN)
    stress = flipped.X[:, col] == 0
    flipped.X[stress, col] = 1.0
    changed = float(np.mean(ctx.model.proba(flipped) != ctx.model.proba(test)))
    same = bool(np.array_equal(plain.model.proba(flipped), plain.model.proba(test)))
    ok = monotone and changed > 0 and same and CONTEXT_COLUMN in ctx.model.feature_names
    return ok, (f"predicted-A counts {counts[0]} -> {counts[-1]} monotone {monotone}; "
                f"{changed:.1%} of context-model rows changed; context-free outputs identical {same}")


def check_streaming():
    cohort = generate_cohort(CohortSpec(n_subjects=4, seed=1))
    _, labels = label_cohort([r for s in cohort for r in s.stai])
    worst, gap, sizes = 0.0, 0.0, []
    with tempfile.TemporaryDirectory() as tmp:
        root = write_cohort(cohort, CohortSpec(n_subjects=4, seed=1), Path(tmp) / "data")
        for kind in (EDA, BVP):
            m = feature_matrix([s.session for s in cohort], labels, kind, True)
            grid = [{"criterion": "gini", "max_depth": 7, "n_estimators": 20}]
            r = train_on_matrix(m, TrainConfig(signal=kind, with_context=True, grid=grid))
            path = Path(tmp) / f"{kind}.anxb"
            save_model(r.model, path)
            rep = stream_session(path, root / "S01", minutes=1)
            for w in rep["windows"]:
                s = w["seconds"]
                worst = max(worst, s["total"])
                gap = max(gap, abs(sum(s[k] for k in STAGES) - s["total"]))
        # the largest grid point bracketing the tuned forests, on full-cohort-sized training data
        rng = np.random.default_rng(0)
        X = rng.normal(size=(2426, 19))
        y = (X[:, 0] + rng.normal(0, 1, 2426) > 0).astype(int)
        for crit in ("gini", "entropy"):
            big = fit_model(RANDOM_FOREST, X, y, [f"c{i}" for i in range(19)],
                            {"criterion": crit, "max_depth": 9, "n_estimators": 25})
            sizes.append(save_model(big, Path(tmp) / "big.anxb"))
    ok = worst < 0.5 and gap < 1e-3 and max(sizes) <= 500 * 1024
    return ok, f"worst window {worst * 1e3:.1f} ms, stage-sum gap {gap:.1e} s, largest model {max(sizes)} bytes"


CRITERIA = [
    (1, "filter correctness", check_filter, 1.0),
    (2, "peak oracle equivalence", check_peaks, 30.0),
    (3, "feature contract", check_features, 60.0),
    (4, "STAI scoring", check_stai, 10.0),
    (5, "Kendall tau-b", check_kendall, 30.0),
    (6, "window arithmetic", check_windows, 60.0),
    (7, "determinism and round trip", check_determinism, 60.0),
    (8, "direction of effect", check_direction, 600.0),
    (9, "threshold behaviour", check_threshold, 60.0),
    (10, "streaming latency", check_streaming, 30.0),
]


def run(number: int, title: str, fn, budget: float) -> bool:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    passed = bool(ok) and dt < budget
    print(f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {detail} "
          f"[{dt:.2f} s, budget {budget:g} s]", flush=True)
    return passed


@pytest.mark.parametrize("number,title,fn,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, budget, capsys):
    with capsys.disabled():
        print()
        passed = run(number, title, fn, budget)
    assert passed


if __name__ == "__main__":
    results = [run(*c) for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
