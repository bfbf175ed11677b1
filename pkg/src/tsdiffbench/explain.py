"""Non-neural baseline explainers.

Three ways to produce an explanation for a (reference, target) pair:

* explain_lsq       -- segmentation of the delta plus per-side least-squares
                       template fits over the function catalog.
* explain_retrieval -- nearest neighbor in a pool of embedded generated
                       pairs, by cosine similarity of feature-vector deltas.
* explain_oracle    -- echoes the ground truth (evaluator calibration).

The least-squares path is deliberately solver-free: every template is linear
in amplitude given its shape parameters, and the two periodic shape
parameters (frequency, phase) are found by grid search refined with
golden-section line searches.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import funclib, schema
from .config import GenConfig
from .funclib import (AMPLITUDE, EVENT, FLUCTUATION, FREQUENCY, PERIODIC,
                      PHASE, TREND, FunctionSpec, Interval)

# ---------------------------------------------------------------------------
# delta + segmentation

SEGMENT_WINDOW = 5        # sliding RMS window (samples)
SEGMENT_TOL = 0.05        # RMS activity threshold (amplitude units)
GAP_MERGE = 10            # runs closer than this many samples are merged
SPIKE_FACTOR = 6.0        # lone samples above SPIKE_FACTOR*tol survive alone
EDGE_FLOOR_FRACTION = 0.002  # edge threshold floor as a fraction of tol


def compute_delta(ref: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    ref = np.asarray(ref, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    if ref.shape != tgt.shape:
        raise ValueError(f"series lengths differ: {ref.shape} vs {tgt.shape}")
    return tgt - ref


def _sliding_rms(x: np.ndarray, window: int) -> np.ndarray:
    """Centered RMS with truncated edge windows."""
    sq = np.concatenate(([0.0], np.cumsum(x * x)))
    n = x.size
    half = window // 2
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return np.sqrt((sq[hi] - sq[lo]) / (hi - lo))


def segment_delta(delta: np.ndarray, tol: float = SEGMENT_TOL,
                  window: int = SEGMENT_WINDOW,
                  gap_merge: int = GAP_MERGE) -> list[Interval]:
    """Contiguous intervals where the delta is active.

    Activity = sliding-window RMS above tol; nearby runs are merged.  Run
    boundaries are then walked outward/inward to the outermost samples above
    an edge threshold adapted to the quiet-region noise floor, so shallow
    shape tails keep their full support while sharp shapes stay tight.
    Lone excursions above SPIKE_FACTOR*tol survive as single-sample
    intervals.
    """
    delta = np.asarray(delta, dtype=float)
    n = delta.size
    if n == 0:
        return []
    abs_d = np.abs(delta)
    mask = _sliding_rms(delta, window) > tol
    mask |= abs_d > SPIKE_FACTOR * tol

    runs: list[list[int]] = []
    start = None
    for i in range(n):
        if mask[i] and start is None:
            start = i
        elif not mask[i] and start is not None:
            runs.append([start, i - 1])
            start = None
    if start is not None:
        runs.append([start, n - 1])
    if not runs:
        return []

    merged = [runs[0]]
    for a, b in runs[1:]:
        if a - merged[-1][1] - 1 < gap_merge:
            merged[-1][1] = b
        else:
            merged.append([a, b])

    # Edge threshold: the quiet-region noise floor (robust MAD scale), with
    # a small absolute floor for the exactly-cancelling clean case.
    quiet = np.ones(n, dtype=bool)
    for a, b in merged:
        quiet[max(0, a - window):min(n, b + window + 1)] = False
    if quiet.any():
        q = delta[quiet]
        sigma = 1.4826 * float(np.median(np.abs(q - np.median(q))))
    else:
        sigma = 0.0
    edge = max(EDGE_FLOOR_FRACTION * tol, 3.0 * sigma)

    step = max(gap_merge, window)
    refined: list[Interval] = []
    for a, b in merged:
        above = np.nonzero(abs_d[a:b + 1] > edge)[0]
        if above.size == 0:
            peak = a + int(np.argmax(abs_d[a:b + 1]))
            if abs_d[peak] > SPIKE_FACTOR * tol:
                refined.append(Interval(peak, peak))
            continue
        s0, e0 = a + int(above[0]), a + int(above[-1])
        while s0 > 0:  # follow a decaying tail leftward chunk by chunk
            lo = max(0, s0 - step)
            hits = np.nonzero(abs_d[lo:s0] > edge)[0]
            if hits.size == 0:
                break
            s0 = lo + int(hits[0])
        while e0 < n - 1:  # and rightward
            hi = min(n - 1, e0 + step)
            hits = np.nonzero(abs_d[e0 + 1:hi + 1] > edge)[0]
            if hits.size == 0:
                break
            e0 = e0 + 1 + int(hits[-1])
        refined.append(Interval(s0, e0))

    # Refinement may have re-opened small overlaps between neighbours.
    out: list[Interval] = []
    for iv in refined:
        if out and iv.start <= out[-1].end:
            out[-1] = Interval(out[-1].start, max(out[-1].end, iv.end))
        else:
            out.append(iv)
    return out


# ---------------------------------------------------------------------------
# least-squares template fitting

PRESENCE_THRESHOLD = 0.15   # fitted amplitude below this means "not there"
NOISE_RESID_FRACTION = 0.6  # structure must beat this fraction of segment RMS
KURT_SPLIT = 1.5            # excess kurtosis boundary: gaussian vs laplace
MAX_FREQUENCY = 33.0        # fit search ceiling (covers ratio-modified bases)
DURATION_SLACK = (0.7, 1.5)  # candidate admitted if within slack of its bounds
CONTEXT_WIDTH = 10          # flank window for the local baseline trend

_EVENT_NEGATIONS = {
    "DROP": "SPIKE",
    "NEGATIVE_STEP": "POSITIVE_STEP",
    "NEGATIVE_PULSE": "POSITIVE_PULSE",
}
NEGATION_OF = {**funclib._TREND_NEGATIONS, **_EVENT_NEGATIONS}
_POSITIVE_PARTNER = {v: k for k, v in NEGATION_OF.items()}


@dataclass
class FitResult:
    func: str
    theta: dict[str, float]
    interval: Interval
    residual: float


@dataclass
class SideEvidence:
    best: FitResult | None
    amplitude: float               # best fit's amplitude (0 when nothing fits)
    absent_rms: float              # RMS of the detrended segment as-is
    noise_std: float
    noise_kurtosis: float
    noise_like: bool
    per_func: dict[str, tuple[float, float]]  # func -> (amplitude, residual)
    shape_params: dict[str, dict[str, float]] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)


@dataclass
class FitEvidence:
    ref: SideEvidence
    tgt: SideEvidence


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def _excess_kurtosis(x: np.ndarray) -> float:
    if x.size < 4:
        return 0.0
    m = x.mean()
    d = x - m
    var = float(np.mean(d * d))
    if var < 1e-24:
        return 0.0
    return float(np.mean(d ** 4) / var ** 2 - 3.0)


def local_trend(series: np.ndarray, interval: Interval,
                context: int = CONTEXT_WIDTH) -> np.ndarray:
    """Baseline estimate across an interval: a line between the medians of
    the flanking context windows (constant if only one flank exists)."""
    s, e = interval.start, interval.end
    left = series[max(0, s - context):s]
    right = series[e + 1:e + 1 + context]
    if left.size and right.size:
        lv, rv = float(np.median(left)), float(np.median(right))
    elif left.size:
        lv = rv = float(np.median(left))
    elif right.size:
        lv = rv = float(np.median(right))
    else:
        lv = rv = 0.0
    return np.linspace(lv, rv, interval.length)


def _golden(fn, lo: float, hi: float, iters: int = 36) -> float:
    """Golden-section minimizer of a 1-D function on [lo, hi]."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def _fit_amplitude(y: np.ndarray, shape: np.ndarray) -> tuple[float, float]:
    """Signed least-squares amplitude and residual RMS for y ~ a*shape."""
    denom = float(shape @ shape)
    if denom < 1e-24:
        return 0.0, _rms(y)
    a = float(y @ shape) / denom
    return a, _rms(y - a * shape)


def _fit_sinusoid(y: np.ndarray, max_f: float) -> tuple[float, dict[str, float], float]:
    """Closed-form amplitude/phase per frequency, grid + golden over frequency."""
    n = y.size
    u = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    two_pi = 2.0 * math.pi

    def resid_at(freq: float, want_params: bool = False):
        s = np.sin(two_pi * freq * u)
        c = np.cos(two_pi * freq * u)
        g = np.array([[s @ s, s @ c], [s @ c, c @ c]])
        rhs = np.array([y @ s, y @ c])
        try:
            ab = np.linalg.solve(g, rhs)
        except np.linalg.LinAlgError:
            ab = np.zeros(2)
        fitted = ab[0] * s + ab[1] * c
        r = _rms(y - fitted)
        if not want_params:
            return r
        amp = float(math.hypot(ab[0], ab[1]))
        phase = float(math.atan2(ab[1], ab[0])) % two_pi
        return r, amp, phase

    grid = np.arange(0.5, max_f + 0.25, 0.25)
    resids = [resid_at(f) for f in grid]
    best_i = int(np.argmin(resids))
    f_lo = grid[max(0, best_i - 1)]
    f_hi = grid[min(len(grid) - 1, best_i + 1)]
    f_best = _golden(resid_at, f_lo, f_hi)
    r, amp, phase = resid_at(f_best, want_params=True)
    return amp, {FREQUENCY: float(f_best), PHASE: phase}, r


def _fit_wave(y: np.ndarray, fid: str, max_f: float) -> tuple[float, dict[str, float], float]:
    """Grid + golden fit for sawtooth/square/triangle waveforms."""
    n = y.size
    u = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    two_pi = 2.0 * math.pi
    foldable = fid != "SAWTOOTH"  # -wave == wave shifted half a cycle

    def eval_at(freq: float, cyc_phase: float) -> tuple[float, float]:
        shape = funclib._periodic_wave(fid, freq * u + cyc_phase)
        a, r = _fit_amplitude(y, shape)
        if a < 0 and not foldable:
            return 0.0, _rms(y)
        return a, r

    best = (math.inf, 1.0, 0.0)  # residual, freq, cyc_phase
    phases = np.arange(0.0, 1.0, 1.0 / 16.0)
    for freq in np.arange(0.5, max_f + 0.5, 0.5):
        for ph in phases:
            a, r = eval_at(freq, ph)
            if r < best[0]:
                best = (r, freq, ph)
    _, f0, p0 = best
    f1 = _golden(lambda f: eval_at(f, p0)[1], max(0.25, f0 - 0.5), f0 + 0.5)
    p1 = _golden(lambda p: eval_at(f1, p)[1], p0 - 1.0 / 16.0, p0 + 1.0 / 16.0)
    f1 = _golden(lambda f: eval_at(f, p1)[1], max(0.25, f1 - 0.25), f1 + 0.25)
    a, r = eval_at(f1, p1)
    if a < 0:  # fold the sign into a half-cycle phase shift
        a, p1 = -a, p1 + 0.5
    phase = (p1 % 1.0) * two_pi
    return a, {FREQUENCY: float(f1), PHASE: float(phase)}, r


def _admit(spec: FunctionSpec, n: int) -> bool:
    lo, hi = spec.duration_bounds
    return DURATION_SLACK[0] * lo <= n <= DURATION_SLACK[1] * hi


def _fit_side(y: np.ndarray, interval: Interval,
              candidates: list[FunctionSpec], max_f: float) -> SideEvidence:
    n = y.size
    absent = _rms(y)
    noise_std = float(y.std())
    kurt = _excess_kurtosis(y)
    per_func: dict[str, tuple[float, float]] = {}
    skipped: list[str] = []

    admitted = [s for s in candidates if _admit(s, n)]
    if not admitted:
        admitted = list(candidates)

    structured = [s for s in admitted if s.category != FLUCTUATION]
    fluct = [s for s in admitted if s.category == FLUCTUATION]

    shape_thetas: dict[str, dict[str, float]] = {}
    done: set[str] = set()
    for spec in structured:
        if spec.id in done:
            continue
        min_params = 4 if spec.category == PERIODIC else 1
        if n < min_params:
            skipped.append(spec.id)
            done.add(spec.id)
            continue
        if spec.category == PERIODIC:
            if spec.id == "SINUSOIDAL":
                amp, sp, r = _fit_sinusoid(y, max_f)
            else:
                amp, sp, r = _fit_wave(y, spec.id, max_f)
            per_func[spec.id] = (amp, r)
            shape_thetas[spec.id] = sp
            done.add(spec.id)
            continue
        pos_id = NEGATION_OF.get(spec.id, spec.id)
        shape = funclib.unit_shape(pos_id, n)
        a, r = _fit_amplitude(y, shape)
        neg_id = _POSITIVE_PARTNER.get(pos_id)
        if a >= 0:
            per_func[pos_id] = (a, r)
            if neg_id is not None:
                per_func[neg_id] = (0.0, absent)
        else:
            if neg_id is not None:
                per_func[neg_id] = (-a, r)
            per_func[pos_id] = (0.0, absent)
        done.add(pos_id)
        if neg_id is not None:
            done.add(neg_id)

    best_fid = None
    best_amp = 0.0
    best_r = math.inf
    for fid, (a, r) in per_func.items():
        if a > 0 and (r < best_r or (r == best_r and a > best_amp)):
            best_fid, best_amp, best_r = fid, a, r

    noise_like = (bool(fluct) and n >= 8 and absent > 1e-12
                  and (best_fid is None or best_r > NOISE_RESID_FRACTION * absent))
    if noise_like and noise_std >= PRESENCE_THRESHOLD:
        fid = "LAPLACE_NOISE" if kurt > KURT_SPLIT else "GAUSSIAN_NOISE"
        if any(s.id == fid for s in fluct):
            per_func[fid] = (noise_std, absent)
            best_fid, best_amp, best_r = fid, noise_std, absent

    best = None
    if best_fid is not None and best_amp > 0:
        theta = {AMPLITUDE: best_amp}
        theta.update(shape_thetas.get(best_fid, {}))
        best = FitResult(func=best_fid, theta=theta, interval=interval,
                         residual=best_r)
    return SideEvidence(best=best, amplitude=best_amp if best else 0.0,
                        absent_rms=absent, noise_std=noise_std,
                        noise_kurtosis=kurt, noise_like=noise_like,
                        per_func=per_func, shape_params=shape_thetas,
                        skipped=skipped)


def fit_component(ref: np.ndarray, tgt: np.ndarray, interval: Interval,
                  candidates: list[FunctionSpec],
                  max_f: float = MAX_FREQUENCY) -> FitEvidence:
    """Per-side least-squares fits over an interval of the full series.

    Each side is reduced to segment-minus-local-baseline-trend before
    fitting.  FLUCTUATION candidates are scored by distributional statistics
    (variance, excess kurtosis) rather than pointwise residual.
    """
    ref = np.asarray(ref, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    s, e = interval.start, interval.end
    if e >= ref.size or ref.shape != tgt.shape:
        raise ValueError("interval does not fit the series")
    sides = {}
    for name, series in (("ref", ref), ("tgt", tgt)):
        seg = series[s:e + 1] - local_trend(series, interval)
        sides[name] = _fit_side(seg, interval, candidates, max_f)
    return FitEvidence(ref=sides["ref"], tgt=sides["tgt"])


# ---------------------------------------------------------------------------
# the full least-squares explainer

@dataclass(frozen=True)
class LsqOptions:
    presence_threshold: float = PRESENCE_THRESHOLD
    segment_tol: float = SEGMENT_TOL
    segment_window: int = SEGMENT_WINDOW
    gap_merge: int = GAP_MERGE
    noise_resid_fraction: float = NOISE_RESID_FRACTION
    max_frequency: float = MAX_FREQUENCY


def _joint_structured(ev: FitEvidence) -> tuple[str, float] | None:
    """Candidate func minimizing the summed per-side residual, structured only."""
    best = None
    for fid, (a_r, r_r) in ev.ref.per_func.items():
        if funclib.CATEGORY_OF[fid] == FLUCTUATION:
            continue
        other = ev.tgt.per_func.get(fid)
        if other is None or a_r <= 0 or other[0] <= 0:
            continue
        total = r_r + other[1]
        if best is None or total < best[1]:
            best = (fid, total)
    return best


def _theta_for(ev_side: SideEvidence, fid: str, y: np.ndarray) -> dict[str, float]:
    if funclib.CATEGORY_OF[fid] == FLUCTUATION:
        return {AMPLITUDE: float(y.std())}
    amp = abs(ev_side.per_func.get(fid, (0.0, 0.0))[0])
    return {AMPLITUDE: amp, **ev_side.shape_params.get(fid, {})}


def explain_lsq(ref: np.ndarray, tgt: np.ndarray,
                options: LsqOptions | None = None) -> list[schema.DifferenceRecord]:
    """Explain a pair via segmentation + per-side template fits.

    Intervals are processed by descending delta energy; after a component is
    identified, its fitted rendering is subtracted from the working copies so
    overlapping intervals are fit against the remainder (matching pursuit).
    Returns a list valid under the record schema (possibly empty).
    """
    opt = options or LsqOptions()
    ref = np.asarray(ref, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    delta = compute_delta(ref, tgt)
    intervals = segment_delta(delta, tol=opt.segment_tol,
                              window=opt.segment_window, gap_merge=opt.gap_merge)
    if not intervals:
        return []
    candidates = funclib.catalog(max(ref.size, 8))
    energies = [float(np.sum(delta[iv.start:iv.end + 1] ** 2)) for iv in intervals]
    order = sorted(range(len(intervals)), key=lambda i: -energies[i])

    work_ref = ref.copy()
    work_tgt = tgt.copy()
    records: list[schema.DifferenceRecord] = []
    for idx in order:
        iv = intervals[idx]
        ev = fit_component(work_ref, work_tgt, iv, candidates, opt.max_frequency)
        record, fitted = _decide(ev, iv, work_ref, work_tgt, opt)
        if record is None:
            continue
        records.append(record)
        for side, series in (("ref", work_ref), ("tgt", work_tgt)):
            comp = fitted.get(side)
            if comp is not None:
                series[iv.start:iv.end + 1] -= comp
    return schema.sort_records(records)


def _render_fit(fid: str, theta: dict[str, float], n: int) -> np.ndarray | None:
    if funclib.CATEGORY_OF[fid] == FLUCTUATION:
        return None  # realization unknown; nothing safe to subtract
    sp = {k: v for k, v in theta.items() if k in (FREQUENCY, PHASE)}
    return theta[AMPLITUDE] * funclib.unit_shape(fid, n, sp)


def _decide(ev: FitEvidence, iv: Interval, work_ref: np.ndarray,
            work_tgt: np.ndarray, opt: LsqOptions):
    """Turn fit evidence for one interval into (record, per-side renderings)."""
    thr = opt.presence_threshold
    seg_ref = work_ref[iv.start:iv.end + 1] - local_trend(work_ref, iv)
    seg_tgt = work_tgt[iv.start:iv.end + 1] - local_trend(work_tgt, iv)
    active_ref = ev.ref.best is not None and ev.ref.amplitude >= thr
    active_tgt = ev.tgt.best is not None and ev.tgt.amplitude >= thr
    if not active_ref and not active_tgt:
        return None, {}

    if active_ref and active_tgt:
        both_noise = (ev.ref.best.func in funclib._FLUCTUATION_IDS
                      and ev.tgt.best.func in funclib._FLUCTUATION_IDS)
        joint = None if both_noise else _joint_structured(ev)
        if joint is not None:
            fid = joint[0]
            ok_ref = ev.ref.per_func[fid][1] <= opt.noise_resid_fraction * max(ev.ref.absent_rms, 1e-12)
            ok_tgt = ev.tgt.per_func[fid][1] <= opt.noise_resid_fraction * max(ev.tgt.absent_rms, 1e-12)
            if ok_ref and ok_tgt:
                theta_ref = _theta_for(ev.ref, fid, seg_ref)
                theta_tgt = _theta_for(ev.tgt, fid, seg_tgt)
                return _type2_record(fid, theta_ref, theta_tgt, iv), {
                    "ref": _render_fit(fid, theta_ref, iv.length),
                    "tgt": _render_fit(fid, theta_tgt, iv.length)}
        if both_noise:
            # normalize per side before pooling: mixing two scales of one
            # shape would otherwise inflate the kurtosis estimate
            pooled = np.concatenate([
                seg_ref / max(float(seg_ref.std()), 1e-12),
                seg_tgt / max(float(seg_tgt.std()), 1e-12)])
            fid = ("LAPLACE_NOISE" if _excess_kurtosis(pooled) > KURT_SPLIT
                   else "GAUSSIAN_NOISE")
            theta_ref = {AMPLITUDE: float(seg_ref.std())}
            theta_tgt = {AMPLITUDE: float(seg_tgt.std())}
            return _type2_record(fid, theta_ref, theta_tgt, iv), {}
        # fall back to TYPE1 on the stronger side
        active_ref = ev.ref.amplitude >= ev.tgt.amplitude
        active_tgt = not active_ref

    side = ev.tgt if active_tgt else ev.ref
    seg = seg_tgt if active_tgt else seg_ref
    fid = side.best.func
    theta = _theta_for(side, fid, seg)
    record = schema.DifferenceRecord(
        type=schema.TYPE1, func=fid, start=iv.start, end=iv.end,
        presence=schema.PRESENT if active_tgt else schema.ABSENT,
        param=None, magnitude=None)
    rendering = _render_fit(fid, theta, iv.length)
    return record, {("tgt" if active_tgt else "ref"): rendering}


def _type2_record(fid: str, theta_ref: dict[str, float],
                  theta_tgt: dict[str, float], iv: Interval) -> schema.DifferenceRecord:
    spec = funclib.catalog_index()[fid]
    best_param = None
    best_disc = -1.0
    for p in spec.modifiable:
        a, b = abs(theta_ref.get(p, 0.0)), abs(theta_tgt.get(p, 0.0))
        disc = abs(a - b) / max(a, b, 1e-12)
        if disc > best_disc:
            best_param, best_disc = p, disc
    larger = abs(theta_tgt.get(best_param, 0.0)) > abs(theta_ref.get(best_param, 0.0))
    return schema.DifferenceRecord(
        type=schema.TYPE2, func=fid, start=iv.start, end=iv.end,
        presence=None, param=best_param,
        magnitude=schema.LARGER if larger else schema.SMALLER)


# ---------------------------------------------------------------------------
# feature embedding + retrieval

FEATURE_VERSION = "fe-2026-1"
_N_WINDOWS = 8
_N_FREQ_BINS = 8
FEATURE_DIM = 3 * _N_WINDOWS + _N_FREQ_BINS + 9


def feature_version_hash() -> str:
    return hashlib.sha256(f"{FEATURE_VERSION}:{FEATURE_DIM}".encode()).hexdigest()[:12]


def feature_embed(series: np.ndarray) -> np.ndarray:
    """Fixed-length descriptor: windowed means/stds/slopes, log-pooled
    frequency magnitudes, and global moments/extrema positions."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("cannot embed an empty series")
    feats: list[float] = []
    for chunk in np.array_split(x, _N_WINDOWS):
        feats.append(float(chunk.mean()))
        feats.append(float(chunk.std()))
        if chunk.size > 1:
            t = np.arange(chunk.size) - (chunk.size - 1) / 2.0
            feats.append(float((chunk @ t) / (t @ t)))
        else:
            feats.append(0.0)
    mags = np.abs(np.fft.rfft(x))[1:]
    if mags.size == 0:
        feats.extend([0.0] * _N_FREQ_BINS)
    else:
        edges = np.unique(np.round(np.geomspace(1, mags.size, _N_FREQ_BINS + 1)).astype(int))
        bins = np.zeros(_N_FREQ_BINS)
        for b in range(min(_N_FREQ_BINS, edges.size - 1)):
            lo, hi = edges[b] - 1, edges[b + 1]
            bins[b] = mags[lo:hi].mean() if hi > lo else 0.0
        feats.extend(float(v) / n for v in bins)
    std = float(x.std())
    feats.extend([
        float(x.mean()), std, float(x.min()), float(x.max()),
        float(np.argmin(x)) / max(n - 1, 1), float(np.argmax(x)) / max(n - 1, 1),
        float(np.abs(np.diff(x)).mean()) if n > 1 else 0.0,
        _excess_kurtosis(x),
        float(((x - x.mean()) ** 3).mean() / std ** 3) if std > 1e-12 else 0.0,
    ])
    out = np.asarray(feats)
    assert out.size == FEATURE_DIM
    return out


class PoolError(ValueError):
    """Raised for malformed or incompatible retrieval pools."""


@dataclass
class RetrievalPool:
    vectors: np.ndarray                         # (N, FEATURE_DIM)
    explanations: list[list[schema.DifferenceRecord]]
    meta: dict

    def __len__(self) -> int:
        return self.vectors.shape[0]


def build_pool(cfg: GenConfig, seed: int, count: int,
               workers: int = 1) -> RetrievalPool:
    """Embed `count` generated pairs; each entry keeps its ground truth."""
    from . import pairgen
    vectors = np.empty((count, FEATURE_DIM))
    explanations: list[list[schema.DifferenceRecord]] = []
    for i, sample in enumerate(pairgen.generate_dataset(cfg, seed, count,
                                                        workers=workers)):
        vectors[i] = feature_embed(sample.tgt) - feature_embed(sample.ref)
        explanations.append(list(sample.ground_truth))
    return RetrievalPool(vectors=vectors, explanations=explanations,
                         meta={"feature_hash": feature_version_hash(),
                               "seed": seed, "count": count})


def save_pool(pool: RetrievalPool, path: str) -> None:
    serialized = np.asarray([schema.serialize(e) for e in pool.explanations])
    np.savez_compressed(path, vectors=pool.vectors, explanations=serialized,
                        meta=json.dumps(pool.meta))


def load_pool(path: str) -> RetrievalPool:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise PoolError(f"cannot read pool {path!r}: {e}")
    try:
        vectors = data["vectors"]
        serialized = data["explanations"]
        meta = json.loads(str(data["meta"]))
    except KeyError as e:
        raise PoolError(f"pool {path!r} is missing entry {e}")
    if meta.get("feature_hash") != feature_version_hash():
        raise PoolError(
            f"pool {path!r} was built with feature version "
            f"{meta.get('feature_hash')!r}; current is {feature_version_hash()!r}")
    if vectors.ndim != 2 or vectors.shape[1] != FEATURE_DIM:
        raise PoolError(f"pool {path!r} has vectors of width "
                        f"{vectors.shape}; expected (*, {FEATURE_DIM})")
    explanations = [schema.parse(s) for s in serialized.tolist()]
    if len(explanations) != vectors.shape[0]:
        raise PoolError(f"pool {path!r}: vector/explanation count mismatch")
    return RetrievalPool(vectors=np.asarray(vectors, dtype=float),
                         explanations=explanations, meta=meta)


def explain_retrieval(ref: np.ndarray, tgt: np.ndarray,
                      pool: RetrievalPool) -> list[schema.DifferenceRecord]:
    """Copy of the explanation of the pool entry nearest in cosine similarity
    to the query feature delta.  Ties resolve to the lowest entry index;
    zero-norm vectors have similarity 0 everywhere."""
    if len(pool) == 0:
        raise PoolError("retrieval pool is empty")
    q = feature_embed(tgt) - feature_embed(ref)
    qn = float(np.linalg.norm(q))
    norms = np.linalg.norm(pool.vectors, axis=1)
    if qn == 0.0:
        sims = np.zeros(len(pool))
    else:
        safe = np.where(norms == 0.0, 1.0, norms)
        sims = (pool.vectors @ q) / (safe * qn)
        sims[norms == 0.0] = 0.0
    return copy.deepcopy(pool.explanations[int(np.argmax(sims))])


def explain_oracle(sample) -> list[schema.DifferenceRecord]:
    """The ground truth itself (upper-bound calibration for the evaluator)."""
    return copy.deepcopy(sample.ground_truth)


# ---------------------------------------------------------------------------
# tracked clean-pair benchmark

def benchmark_func_accuracy(n_trials: int, seed: int,
                            categories: tuple[str, ...] = (TREND, PERIODIC, EVENT),
                            length: int = 300) -> float:
    """Fraction of clean single-difference pairs whose function explain_lsq
    names correctly.  Pairs use a zero baseline, amplitude at the base-range
    midpoint, and uniform category/function draws."""
    rng = np.random.default_rng(seed)
    specs = funclib.catalog(length)
    by_cat: dict[str, list[FunctionSpec]] = {}
    for s in specs:
        by_cat.setdefault(s.category, []).append(s)
    hits = 0
    for _ in range(n_trials):
        cat = categories[int(rng.integers(0, len(categories)))]
        spec = by_cat[cat][int(rng.integers(0, len(by_cat[cat])))]
        theta = funclib.sample_base_params(spec, rng)
        lo, hi = spec.base_ranges[AMPLITUDE]
        theta[AMPLITUDE] = (lo + hi) / 2.0
        interval = funclib.sample_interval(spec, length, rng)
        noise_seed = int(rng.integers(0, 2 ** 31 - 1))
        component = funclib.evaluate(spec, theta, interval, length,
                                     noise_seed=noise_seed)
        ref = np.zeros(length)
        tgt = component
        pred = explain_lsq(ref, tgt)
        if pred and pred[0].func == spec.id:
            hits += 1
    return hits / n_trials
