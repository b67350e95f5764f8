"""Synthetic TSST cohorts: EDA, BVP and STAI with known ground truth.

Each subject carries two latent scalars.  ``trait`` raises baseline arousal
and every STAI score; ``reactivity`` scales the stress-phase physiological
response and the post-stress (T2) score.  Because stress raises physiology
for everybody while only reactive subjects report anxiety, the protocol
phase carries information the signals alone do not.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erfc
from scipy.stats import gamma, norm

from .errors import ConfigError
from .labeling import (
    DEFAULT_POSITIVE_ITEMS,
    N_ITEMS,
    StaiResponse,
    write_mask_json,
    write_stai_csv,
)
from .protocol import PHASES, STRESS_PHASES, TIMESTAMPS
from .sessions import MASK_FILE, STAI_FILE, PhaseSpan, Session, make_session, write_session
from .signalproc import BVP, DEFAULT_FS, EDA

# SCR shape: instant rise smoothed by a Gaussian, exponential decay
SCR_TAU_S = 4.0
SCR_ONSET_SIGMA_S = 0.5
SCR_REFRACTORY_S = 4.0
# systolic pulse: same family, much faster
PULSE_TAU_S = 0.25
PULSE_SIGMA_S = 0.05


@dataclass(frozen=True)
class CohortSpec:
    n_subjects: int = 41
    seed: int = 0
    durations_s: dict = field(default_factory=lambda: {
        "pre_stress": 180.0, "anticipatory_stress": 600.0, "speech": 300.0,
        "math": 300.0, "recovery": 900.0,
    })
    jitter: float = 0.05
    # EDA
    scr_rate_per_min: float = 2.0
    stress_scr_multiplier: float = 3.0
    scr_amplitude_us: float = 0.25
    tonic_level_us: float = 4.0
    tonic_stress_rise_us: float = 0.4
    eda_noise_us: float = 0.0005
    # BVP
    hr_baseline_bpm: float = 70.0
    hr_elevation_bpm: float = 12.0
    hr_variability_bpm: float = 1.5
    bvp_noise: float = 0.002
    # STAI
    stai_means: tuple = (26.92, 31.54, 25.40)
    stai_sds: tuple = (8.52, 9.44, 8.52)
    trait_weight: float = 0.6
    reactivity_weight: float = 0.6

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ConfigError("a cohort needs at least two subjects")
        missing = set(PHASES) - set(self.durations_s)
        if missing:
            raise ConfigError(f"missing durations for {sorted(missing)}")
        for phase, d in self.durations_s.items():
            if not d > 30:
                raise ConfigError(f"{phase} duration must exceed 30 s, got {d}")
        knobs = (self.stress_scr_multiplier, self.scr_rate_per_min, self.scr_amplitude_us,
                 self.hr_elevation_bpm, self.eda_noise_us, self.bvp_noise, self.hr_variability_bpm,
                 self.tonic_stress_rise_us, self.jitter)
        if min(knobs) < 0:
            raise ConfigError("effect sizes and noise levels must be non-negative")
        if self.trait_weight**2 + self.reactivity_weight**2 > 1:
            raise ConfigError("trait and reactivity weights must satisfy w_t^2 + w_r^2 <= 1")


@dataclass(frozen=True)
class SubjectParams:
    subject_id: str
    trait: float
    reactivity: float
    schedule: tuple[PhaseSpan, ...]
    seed: int


@dataclass
class SyntheticSession:
    session: Session
    stai: tuple[StaiResponse, ...]
    scr_times_s: np.ndarray
    beat_times_s: np.ndarray
    hr_trace_bpm: np.ndarray  # one value per second
    params: SubjectParams

    def truth(self) -> dict:
        return {
            "session_id": self.session.session_id,
            "trait": self.params.trait,
            "reactivity": self.params.reactivity,
            "scr_times_s": [round(float(t), 6) for t in self.scr_times_s],
            "hr_trace_bpm": [round(float(v), 6) for v in self.hr_trace_bpm],
        }


def build_schedule(durations_s: dict, jitter: float = 0.0, rng=None) -> tuple[PhaseSpan, ...]:
    spans, t = [], 0.0
    for phase in PHASES:
        d = float(durations_s[phase])
        if jitter and rng is not None:
            d = round(d * rng.uniform(1 - jitter, 1 + jitter))
        spans.append(PhaseSpan(phase, t, t + d))
        t += d
    return tuple(spans)


def _phase_at(schedule, t: np.ndarray) -> np.ndarray:
    """Index into PHASES of the phase covering each time point."""
    out = np.full(len(t), len(PHASES) - 1)
    for i, span in reversed(list(enumerate(schedule))):
        out[t < span.end_s] = i
    return out


def _exgauss(dt, tau, sigma):
    """Exponential decay with a Gaussian-smoothed onset at dt = 0."""
    arg = np.clip(sigma**2 / (2 * tau**2) - dt / tau, None, 700.0)
    return 0.5 * np.exp(arg) * erfc((sigma / tau - dt / sigma) / np.sqrt(2))


def _shape_apex(tau, sigma):
    grid = np.linspace(0, 5 * sigma + tau, 20001)
    v = _exgauss(grid, tau, sigma)
    k = int(np.argmax(v))
    return float(grid[k]), float(v[k])


def _smooth_step(t, t0, width=20.0):
    return 1.0 / (1.0 + np.exp(-(t - t0) / (width / 8.0)))


def stress_envelope(schedule, t) -> np.ndarray:
    """0 outside stress, 1 inside, with smooth transitions."""
    stress = [s for s in schedule if s.phase in STRESS_PHASES]
    return _smooth_step(t, stress[0].start_s) - _smooth_step(t, stress[-1].end_s)


def scr_rates(spec: CohortSpec, p: SubjectParams) -> np.ndarray:
    """SCRs per minute for each protocol phase."""
    base = spec.scr_rate_per_min * np.exp(0.3 * p.trait)
    boost = 1.0 + (spec.stress_scr_multiplier - 1.0) * np.exp(0.4 * p.reactivity)
    return np.array([base * boost if ph in STRESS_PHASES else base for ph in PHASES])


def generate_eda(spec: CohortSpec, p: SubjectParams, rng, fs: float = DEFAULT_FS[EDA]):
    """Tonic PCHIP random walk + smoothed-onset SCRs + white noise; returns (x, scr_apex_times)."""
    total = p.schedule[-1].end_s
    t = np.arange(int(round(total * fs))) / fs

    knots_t = np.arange(0.0, total + 20.0, 20.0)
    walk = np.cumsum(rng.normal(0.0, 0.03, len(knots_t)))
    level = spec.tonic_level_us * np.exp(0.2 * p.trait)
    tonic = level + PchipInterpolator(knots_t, walk)(t)
    rise = spec.tonic_stress_rise_us * (spec.stress_scr_multiplier - 1.0) / 2.0 * np.exp(0.3 * p.reactivity)
    tonic = tonic + rise * stress_envelope(p.schedule, t)

    rates = scr_rates(spec, p)
    onsets = []
    clock = rng.uniform(0.0, SCR_REFRACTORY_S)
    while clock < total - SCR_TAU_S:
        phase = _phase_at(p.schedule, np.array([clock]))[0]
        mean_gap = max(60.0 / rates[phase] - SCR_REFRACTORY_S, 0.5) if rates[phase] > 0 else np.inf
        if np.isinf(mean_gap):
            clock = p.schedule[phase].end_s + SCR_REFRACTORY_S
            continue
        onsets.append(clock)
        clock += SCR_REFRACTORY_S + rng.exponential(mean_gap)
    onsets = np.array(onsets)
    amps = spec.scr_amplitude_us * np.clip(rng.lognormal(0.0, 0.4, len(onsets)), 0.5, 2.0)

    apex_dt, apex_v = _shape_apex(SCR_TAU_S, SCR_ONSET_SIGMA_S)
    phasic = np.zeros_like(t)
    for t0, a in zip(onsets, amps):
        lo = max(0, int((t0 - 4 * SCR_ONSET_SIGMA_S) * fs))
        hi = min(len(t), int((t0 + 10 * SCR_TAU_S) * fs))
        phasic[lo:hi] += a / apex_v * _exgauss(t[lo:hi] - t0, SCR_TAU_S, SCR_ONSET_SIGMA_S)

    x = tonic + phasic
    if spec.eda_noise_us:
        x = x + rng.normal(0.0, spec.eda_noise_us, len(t))
    return x, onsets + apex_dt


def hr_trace(spec: CohortSpec, p: SubjectParams, rng) -> np.ndarray:
    """Heart rate (bpm) sampled once per second."""
    total = p.schedule[-1].end_s
    t = np.arange(int(np.ceil(total)) + 1, dtype=float)
    base = spec.hr_baseline_bpm + 3.0 * p.trait
    elev = spec.hr_elevation_bpm * max(0.0, 1.0 + 0.5 * p.reactivity)
    target = base + elev * stress_envelope(p.schedule, t)
    # first-order lag toward the target, then slow AR(1) variability
    hr = np.empty_like(target)
    hr[0] = target[0]
    k = 1.0 / 30.0
    for i in range(1, len(t)):
        hr[i] = hr[i - 1] + k * (target[i] - hr[i - 1])
    if spec.hr_variability_bpm:
        e = rng.normal(0.0, spec.hr_variability_bpm * np.sqrt(1 - 0.95**2), len(t))
        ar = np.empty_like(e)
        ar[0] = rng.normal(0.0, spec.hr_variability_bpm)
        for i in range(1, len(t)):
            ar[i] = 0.95 * ar[i - 1] + e[i]
        hr = hr + ar
    return np.clip(hr, 35.0, 200.0)


def generate_bvp(spec: CohortSpec, p: SubjectParams, rng, fs: float = DEFAULT_FS[BVP], hr=None):
    """Pulse train following the heart-rate trace; returns (x, beat_apex_times, hr)."""
    total = p.schedule[-1].end_s
    n = int(round(total * fs))
    t = np.arange(n) / fs
    if hr is None:
        hr = hr_trace(spec, p, rng)
    inst = np.interp(t, np.arange(len(hr), dtype=float), hr)
    cycles = rng.uniform(0.0, 1.0) + np.cumsum(inst / 60.0) / fs
    k = np.arange(np.ceil(cycles[0]), np.floor(cycles[-1]) + 1)
    onsets = np.interp(k, cycles, t)

    apex_dt, apex_v = _shape_apex(PULSE_TAU_S, PULSE_SIGMA_S)
    inst_at = np.interp(onsets, t, inst)
    base = spec.hr_baseline_bpm + 3.0 * p.trait
    amps = (1.0 - 0.01 * (inst_at - base)) * (1.0 + 0.15 * np.sin(2 * np.pi * 0.25 * onsets))
    amps = amps * (1.0 + rng.normal(0.0, 0.03, len(onsets)))

    span = int(np.ceil((8 * PULSE_TAU_S + 4 * PULSE_SIGMA_S) * fs))
    first = np.floor((onsets - 4 * PULSE_SIGMA_S) * fs).astype(int)
    idx = first[:, None] + np.arange(span)[None, :]
    ok = (idx >= 0) & (idx < n)
    dt = np.clip(idx, 0, n - 1) / fs - onsets[:, None]
    contrib = amps[:, None] / apex_v * _exgauss(dt, PULSE_TAU_S, PULSE_SIGMA_S)
    x = np.zeros(n)
    np.add.at(x, idx[ok], contrib[ok])

    x = x + 0.1 * np.sin(2 * np.pi * 0.05 * t + rng.uniform(0, 2 * np.pi))
    if spec.bvp_noise:
        x = x + rng.normal(0.0, spec.bvp_noise, n)
    return x, onsets + apex_dt, hr


def stai_latents(spec: CohortSpec, p: SubjectParams, rng) -> dict[str, float]:
    """Standard-normal score drivers for T1, T2, T3."""
    wt, wr = spec.trait_weight, spec.reactivity_weight
    out = {}
    for ts in TIMESTAMPS:
        if ts == "T2":
            out[ts] = wt * p.trait + wr * p.reactivity + np.sqrt(1 - wt**2 - wr**2) * rng.normal()
        else:
            out[ts] = wt * p.trait + np.sqrt(1 - wt**2) * rng.normal()
    return out


def target_score(latent: float, mean: float, sd: float) -> int:
    """Map a standard-normal driver onto a right-skewed 20..80 score distribution."""
    excess = max(mean - 20.0, 1e-6)
    shape = (excess / sd) ** 2
    scale = sd**2 / excess
    u = float(np.clip(norm.cdf(latent), 1e-12, 1 - 1e-12))
    return int(np.clip(np.rint(20.0 + gamma.ppf(u, shape, scale=scale)), 20, 80))


def generate_stai(subject_id: str, timestamp: str, score: int, rng,
                  positive_items=DEFAULT_POSITIVE_ITEMS) -> StaiResponse:
    """Item responses whose scored total equals ``score``."""
    if not 20 <= score <= 80:
        raise ConfigError("STAI scores live in 20..80")
    extra = np.zeros(N_ITEMS, dtype=int)
    for _ in range(score - 20):
        open_items = np.flatnonzero(extra < 3)
        extra[rng.choice(open_items)] += 1
    scored = 1 + extra
    mask = tuple(i + 1 in set(positive_items) for i in range(N_ITEMS))
    items = tuple(int(5 - v) if pos else int(v) for v, pos in zip(scored, mask))
    return StaiResponse(subject_id, timestamp, items, mask)


def subject_params(spec: CohortSpec) -> list[SubjectParams]:
    seqs = np.random.SeedSequence(spec.seed).spawn(spec.n_subjects)
    out = []
    width = max(2, len(str(spec.n_subjects)))
    for i, ss in enumerate(seqs):
        rng = np.random.default_rng(ss)
        trait, react = rng.normal(size=2)
        schedule = build_schedule(spec.durations_s, spec.jitter, rng)
        out.append(SubjectParams(f"S{i + 1:0{width}d}", float(trait), float(react), schedule,
                                 int(ss.generate_state(1)[0])))
    return out


def subject_stai(spec: CohortSpec, p: SubjectParams) -> tuple[StaiResponse, ...]:
    """T1..T3 questionnaires; drawn from their own stream, independent of the signals."""
    rng = np.random.default_rng([p.seed, 2])
    latents = stai_latents(spec, p, rng)
    return tuple(
        generate_stai(p.subject_id, ts, target_score(latents[ts], m, s), rng)
        for ts, m, s in zip(TIMESTAMPS, spec.stai_means, spec.stai_sds)
    )


def cohort_stai(spec: CohortSpec = CohortSpec()) -> list[StaiResponse]:
    """The questionnaires ``generate_cohort`` would produce, without synthesizing signals."""
    return [r for p in subject_params(spec) for r in subject_stai(spec, p)]


def generate_subject(spec: CohortSpec, p: SubjectParams) -> SyntheticSession:
    eda_rng, bvp_rng = (np.random.default_rng([p.seed, k]) for k in range(2))
    eda, scr_times = generate_eda(spec, p, eda_rng)
    bvp, beats, hr = generate_bvp(spec, p, bvp_rng)
    stai = subject_stai(spec, p)
    session = make_session(p.subject_id, {EDA: (eda, DEFAULT_FS[EDA]), BVP: (bvp, DEFAULT_FS[BVP])},
                           p.schedule)
    return SyntheticSession(session, stai, scr_times, beats, hr, p)


def generate_cohort(spec: CohortSpec = CohortSpec()) -> list[SyntheticSession]:
    return [generate_subject(spec, p) for p in subject_params(spec)]


def spec_to_dict(spec: CohortSpec) -> dict:
    d = asdict(spec)
    d["stai_means"], d["stai_sds"] = list(spec.stai_means), list(spec.stai_sds)
    return d


def spec_from_dict(d: dict) -> CohortSpec:
    d = dict(d)
    if "durations_s" in d:  # partial overrides keep the other phases at their defaults
        d["durations_s"] = {**CohortSpec().durations_s, **d["durations_s"]}
    for k in ("stai_means", "stai_sds"):
        if k in d:
            d[k] = tuple(d[k])
    return replace(CohortSpec(), **d)


def write_cohort(cohort, spec: CohortSpec, out_dir) -> Path:
    """Session directories, STAI CSV, item mask and per-session ``truth.json``."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for s in cohort:
        d = write_session(s.session, root / s.session.session_id)
        with open(d / "truth.json", "w") as fh:
            json.dump(s.truth(), fh, sort_keys=True)
            fh.write("\n")
    write_stai_csv([r for s in cohort for r in s.stai], root / STAI_FILE)
    write_mask_json(root / MASK_FILE)
    with open(root / "cohort.json", "w") as fh:
        json.dump({"spec": spec_to_dict(spec), "sessions": [s.session.session_id for s in cohort]},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return root

