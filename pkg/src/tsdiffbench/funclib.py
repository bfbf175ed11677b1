"""Component-function library.

Every synthetic difference between two series is built from the functions
defined here.  Functions come in four categories:

* TREND        -- slow monotone or bump-shaped drifts (16 functions)
* PERIODIC     -- repeating waveforms (4 functions)
* FLUCTUATION  -- i.i.d. zero-mean noise (2 functions)
* EVENT        -- short, abrupt phenomena (6 functions)

All deterministic functions are defined in closed form on the normalized
local time u = (t - start) / (end - start), with u = 0 for single-sample
intervals.  "_DECREASE" / "INVERTED_" variants are the exact negation of
their base form.  Outside its interval a function contributes nothing.

Each function exposes an AMPLITUDE parameter; PERIODIC functions add
FREQUENCY (cycles per interval) and PHASE (radians).  The modifiable set
(what a single-parameter modification may touch) is {AMPLITUDE} for all
functions plus {FREQUENCY} for PERIODIC ones.  AMPLITUDE is modified by an
additive offset, FREQUENCY by a multiplicative ratio; both strictly
increase the magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TREND = "TREND"
PERIODIC = "PERIODIC"
FLUCTUATION = "FLUCTUATION"
EVENT = "EVENT"
CATEGORIES = (TREND, PERIODIC, FLUCTUATION, EVENT)

AMPLITUDE = "AMPLITUDE"
FREQUENCY = "FREQUENCY"
PHASE = "PHASE"

OFFSET = "OFFSET"
RATIO = "RATIO"

DEFAULT_LENGTH = 300

# Fixed shape constants (not sampled, not modifiable).
EXP_RATE = 4.0          # exponential growth/decay rate over the unit interval
SIGMOID_SLOPE = 12.0    # logistic steepness over the unit interval
GAUSSIAN_WIDTH = 0.15   # std of the gaussian bump in u units


class ConfigError(ValueError):
    """Raised for invalid ranges, bounds, or generation settings."""


@dataclass(frozen=True)
class Interval:
    """Inclusive sample-index interval [start, end]."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ConfigError(f"invalid interval [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class RangeConfig:
    """Numeric ranges shared by the whole catalog.  All overridable."""

    amplitude: tuple[float, float] = (0.5, 3.0)          # base AMPLITUDE, uniform
    frequency: tuple[int, int] = (2, 10)                 # base FREQUENCY, uniform integer
    phase: tuple[float, float] = (0.0, 2.0 * math.pi)    # base PHASE, uniform, end-exclusive
    amplitude_offset: tuple[float, float] = (0.5, 1.5)   # OFFSET eta applied to |AMPLITUDE|
    frequency_ratio: tuple[float, float] = (1.5, 3.0)    # RATIO rho applied to |FREQUENCY|
    trend_length_frac: tuple[float, float] = (0.15, 0.9)  # non-EVENT duration as fraction of T
    event_max_length_frac: float = 0.05                   # EVENT max duration as fraction of T

    def validate(self) -> None:
        for name in ("amplitude", "frequency", "phase", "amplitude_offset",
                     "frequency_ratio", "trend_length_frac"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"range {name} has lo > hi: ({lo}, {hi})")
        if self.amplitude[0] <= 0:
            raise ConfigError("amplitude range must be positive")
        if self.frequency[0] < 1:
            raise ConfigError("frequency range must start at >= 1")
        if self.amplitude_offset[0] <= 0 or self.frequency_ratio[0] <= 1.0:
            raise ConfigError("modifications must strictly increase magnitude")
        if not 0 < self.event_max_length_frac < self.trend_length_frac[0]:
            raise ConfigError("EVENT durations must stay below non-EVENT durations")


@dataclass(frozen=True)
class FunctionSpec:
    """One catalog entry: identity, parameter vocabulary, and sampling bounds."""

    id: str
    category: str
    params: tuple[str, ...]
    base_ranges: dict[str, tuple[float, float]]
    duration_bounds: tuple[int, int]      # (L_min, L_max) in samples, inclusive
    modifiable: tuple[str, ...]
    mod_rule: dict[str, tuple[str, tuple[float, float]]] = field(repr=False)


_TREND_IDS = (
    "LINEAR_INCREASE", "LINEAR_DECREASE",
    "QUADRATIC_INCREASE", "QUADRATIC_DECREASE",
    "CUBIC_INCREASE", "CUBIC_DECREASE",
    "EXPONENTIAL_GROWTH", "INVERTED_EXPONENTIAL_GROWTH",
    "EXPONENTIAL_DECAY", "INVERTED_EXPONENTIAL_DECAY",
    "LOG_INCREASE", "LOG_DECREASE",
    "SIGMOID", "INVERTED_SIGMOID",
    "GAUSSIAN", "INVERTED_GAUSSIAN",
)
_PERIODIC_IDS = ("SINUSOIDAL", "SAWTOOTH", "SQUARE_WAVE", "TRIANGLE_WAVE")
_FLUCTUATION_IDS = ("GAUSSIAN_NOISE", "LAPLACE_NOISE")
_EVENT_IDS = (
    "SPIKE", "DROP",
    "POSITIVE_STEP", "NEGATIVE_STEP",
    "POSITIVE_PULSE", "NEGATIVE_PULSE",
)

CATEGORY_OF = {fid: TREND for fid in _TREND_IDS}
CATEGORY_OF.update({fid: PERIODIC for fid in _PERIODIC_IDS})
CATEGORY_OF.update({fid: FLUCTUATION for fid in _FLUCTUATION_IDS})
CATEGORY_OF.update({fid: EVENT for fid in _EVENT_IDS})

ALL_IDS = _TREND_IDS + _PERIODIC_IDS + _FLUCTUATION_IDS + _EVENT_IDS


def _u_grid(length: int) -> np.ndarray:
    """Normalized local time over an interval of `length` samples."""
    if length == 1:
        return np.zeros(1)
    return np.linspace(0.0, 1.0, length)


def _frac(x: np.ndarray) -> np.ndarray:
    return x - np.floor(x)


# Unit shapes (amplitude 1).  Trend/event shapes take u (and length for the
# bin-centered pulse); periodic shapes take the cycle position c = F*u + phi/2pi.

def _base_trend(fid: str, u: np.ndarray) -> np.ndarray:
    if fid == "LINEAR_INCREASE":
        return u
    if fid == "QUADRATIC_INCREASE":
        return u ** 2
    if fid == "CUBIC_INCREASE":
        return u ** 3
    if fid == "EXPONENTIAL_GROWTH":
        return np.expm1(EXP_RATE * u) / math.expm1(EXP_RATE)
    if fid == "EXPONENTIAL_DECAY":
        return np.exp(-EXP_RATE * u)
    if fid == "LOG_INCREASE":
        return np.log1p(9.0 * u) / math.log(10.0)
    if fid == "SIGMOID":
        return 1.0 / (1.0 + np.exp(-SIGMOID_SLOPE * (u - 0.5)))
    if fid == "GAUSSIAN":
        return np.exp(-((u - 0.5) ** 2) / (2.0 * GAUSSIAN_WIDTH ** 2))
    raise KeyError(fid)


_TREND_NEGATIONS = {
    "LINEAR_DECREASE": "LINEAR_INCREASE",
    "QUADRATIC_DECREASE": "QUADRATIC_INCREASE",
    "CUBIC_DECREASE": "CUBIC_INCREASE",
    "INVERTED_EXPONENTIAL_GROWTH": "EXPONENTIAL_GROWTH",
    "INVERTED_EXPONENTIAL_DECAY": "EXPONENTIAL_DECAY",
    "LOG_DECREASE": "LOG_INCREASE",
    "INVERTED_SIGMOID": "SIGMOID",
    "INVERTED_GAUSSIAN": "GAUSSIAN",
}


def _periodic_wave(fid: str, c: np.ndarray) -> np.ndarray:
    if fid == "SINUSOIDAL":
        return np.sin(2.0 * math.pi * c)
    if fid == "SAWTOOTH":
        return 2.0 * _frac(c + 0.5) - 1.0
    if fid == "SQUARE_WAVE":
        return np.where(_frac(c) < 0.5, 1.0, -1.0)
    if fid == "TRIANGLE_WAVE":
        return (2.0 / math.pi) * np.arcsin(np.sin(2.0 * math.pi * c))
    raise KeyError(fid)


def _event_shape(fid: str, length: int) -> np.ndarray:
    if fid in ("SPIKE", "DROP"):
        if length != 1:
            raise ConfigError(f"{fid} requires a single-sample interval, got length {length}")
        base = np.ones(1)
    elif fid in ("POSITIVE_STEP", "NEGATIVE_STEP"):
        base = np.ones(length)
    elif fid in ("POSITIVE_PULSE", "NEGATIVE_PULSE"):
        # Raised-cosine bump sampled at bin centers so short pulses stay nonzero.
        centers = (np.arange(length) + 0.5) / length
        base = np.sin(math.pi * centers) ** 2
    else:
        raise KeyError(fid)
    if fid in ("DROP", "NEGATIVE_STEP", "NEGATIVE_PULSE"):
        return -base
    return base


def unit_shape(func_id: str, length: int,
               shape_params: dict[str, float] | None = None) -> np.ndarray:
    """Deterministic shape at amplitude 1 over `length` samples.

    PERIODIC shapes read FREQUENCY/PHASE from shape_params; FLUCTUATION has
    no deterministic shape and raises.
    """
    cat = CATEGORY_OF[func_id]
    if cat == FLUCTUATION:
        raise ConfigError(f"{func_id} has no deterministic unit shape")
    u = _u_grid(length)
    if cat == TREND:
        base = _TREND_NEGATIONS.get(func_id)
        if base is not None:
            return -_base_trend(base, u)
        return _base_trend(func_id, u)
    if cat == PERIODIC:
        p = shape_params or {}
        c = p.get(FREQUENCY, 1.0) * u + p.get(PHASE, 0.0) / (2.0 * math.pi)
        return _periodic_wave(func_id, c)
    return _event_shape(func_id, length)


def catalog(length: int = DEFAULT_LENGTH,
            ranges: RangeConfig | None = None) -> list[FunctionSpec]:
    """The full function catalog for a series of `length` samples."""
    if length < 8:
        raise ConfigError(f"series length {length} too short for the catalog")
    r = ranges or RangeConfig()
    r.validate()

    lo_frac, hi_frac = r.trend_length_frac
    long_bounds = (max(2, round(lo_frac * length)), max(2, round(hi_frac * length)))
    event_max = max(1, math.floor(r.event_max_length_frac * length))
    if not event_max < long_bounds[0]:
        raise ConfigError("EVENT durations must stay below non-EVENT durations")

    amp = {AMPLITUDE: tuple(map(float, r.amplitude))}
    amp_rule = {AMPLITUDE: (OFFSET, tuple(map(float, r.amplitude_offset)))}
    periodic_ranges = dict(amp)
    periodic_ranges[FREQUENCY] = tuple(map(float, r.frequency))
    periodic_ranges[PHASE] = tuple(map(float, r.phase))
    periodic_rule = dict(amp_rule)
    periodic_rule[FREQUENCY] = (RATIO, tuple(map(float, r.frequency_ratio)))

    specs: list[FunctionSpec] = []
    for fid in _TREND_IDS:
        specs.append(FunctionSpec(fid, TREND, (AMPLITUDE,), dict(amp),
                                  long_bounds, (AMPLITUDE,), dict(amp_rule)))
    for fid in _PERIODIC_IDS:
        specs.append(FunctionSpec(fid, PERIODIC, (AMPLITUDE, FREQUENCY, PHASE),
                                  dict(periodic_ranges), long_bounds,
                                  (AMPLITUDE, FREQUENCY), dict(periodic_rule)))
    for fid in _FLUCTUATION_IDS:
        specs.append(FunctionSpec(fid, FLUCTUATION, (AMPLITUDE,), dict(amp),
                                  long_bounds, (AMPLITUDE,), dict(amp_rule)))
    for fid in _EVENT_IDS:
        bounds = (1, 1) if fid in ("SPIKE", "DROP") else (1, event_max)
        specs.append(FunctionSpec(fid, EVENT, (AMPLITUDE,), dict(amp),
                                  bounds, (AMPLITUDE,), dict(amp_rule)))
    return specs


def catalog_index(length: int = DEFAULT_LENGTH,
                  ranges: RangeConfig | None = None) -> dict[str, FunctionSpec]:
    return {s.id: s for s in catalog(length, ranges)}


def evaluate(spec: FunctionSpec, theta: dict[str, float], interval: Interval,
             length: int, noise_seed: int = 0) -> np.ndarray:
    """Render one component over the full window: zero outside its interval.

    FLUCTUATION realizations depend only on (noise_seed, interval length),
    so two calls with different AMPLITUDE but the same seed scale one shared
    draw -- a Type-2 noise difference is a pure rescaling.
    """
    if interval.end >= length:
        raise ConfigError(f"interval [{interval.start}, {interval.end}] "
                          f"exceeds window of {length} samples")
    for p in spec.params:
        if p not in theta:
            raise ConfigError(f"{spec.id}: missing parameter {p}")
    n = interval.length
    if spec.category == FLUCTUATION:
        rng = np.random.default_rng(noise_seed)
        if spec.id == "GAUSSIAN_NOISE":
            z = rng.standard_normal(n)
        else:
            z = rng.laplace(0.0, 1.0 / math.sqrt(2.0), n)
        seg = theta[AMPLITUDE] * z
    else:
        shape_params = {k: theta[k] for k in (FREQUENCY, PHASE) if k in theta}
        seg = theta[AMPLITUDE] * unit_shape(spec.id, n, shape_params)
    out = np.zeros(length)
    out[interval.start:interval.end + 1] = seg
    return out


def sample_base_params(spec: FunctionSpec,
                       rng: np.random.Generator) -> dict[str, float]:
    """Draw every parameter uniformly from its base range (FREQUENCY integer)."""
    theta: dict[str, float] = {}
    for p in spec.params:
        lo, hi = spec.base_ranges[p]
        if p == FREQUENCY:
            theta[p] = float(rng.integers(int(lo), int(hi) + 1))
        else:
            theta[p] = float(rng.uniform(lo, hi))
    return theta


def sample_interval(spec: FunctionSpec, length: int,
                    rng: np.random.Generator) -> Interval:
    """Uniform integer duration within bounds, uniform placement in-window."""
    lo, hi = spec.duration_bounds
    hi = min(hi, length)
    if lo > hi:
        raise ConfigError(f"{spec.id}: duration bounds ({lo}, {hi}) infeasible "
                          f"for window of {length} samples")
    n = int(rng.integers(lo, hi + 1))
    start = int(rng.integers(0, length - n + 1))
    return Interval(start, start + n - 1)


def modify_param(spec: FunctionSpec, theta: dict[str, float], param: str,
                 rng: np.random.Generator) -> dict[str, float]:
    """Return a copy of theta with one parameter's magnitude strictly increased.

    OFFSET adds a draw from the offset range to |theta[param]|; RATIO
    multiplies |theta[param]| by a draw from the ratio range.  Sign is kept.
    """
    if param not in spec.modifiable:
        raise ConfigError(f"{spec.id}: parameter {param} is not modifiable")
    rule, (lo, hi) = spec.mod_rule[param]
    old = theta[param]
    sign = -1.0 if old < 0 else 1.0
    if rule == OFFSET:
        new_abs = abs(old) + rng.uniform(lo, hi)
    else:
        new_abs = abs(old) * rng.uniform(lo, hi)
    out = dict(theta)
    out[param] = sign * new_abs
    return out
