"""
core/comparison.py - The one-dimensional comparison system.

A route leaving a ball around the origin can only speed up by meeting
faster lines closer in. Rewriting distance as P = r^(d−1) ("generalised
distance") and speed as S = v^−(γ−1) ("meta-slowness") turns the lines met
along the way into a homogeneous Poisson process, and the pair evolves as

    P_n = P_{n−1} + T_n / S_{n−1}        T_n ~ Exponential(ω/2)
    S_n = U_n · S_{n−1}                  U_n ~ Uniform(0, 1]

so X_n = S_n·P_n satisfies the perpetuity X_n = U_n (T_n + X_{n−1}), with
stationary mean 2/ω. Here ω = d·κ_d is the surface area of the unit sphere.

The escape-time series sums S_{k−1}^(1/(γ−1)) (P_k^(1/(d−1)) − P_{k−1}^(1/(d−1)))
and diverges when γ ≥ d; it is evaluated in logs.

``envelope`` is the deterministic counterpart on a realised sample: the
fastest radial growth any route started near the origin can achieve.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from core.errors import UsageError
from core.line_process import LineSample

logger = logging.getLogger(__name__)

BURN_IN = 1_000
# Renormalise mantissas once S drops below this.
RENORM_BELOW = 2.0 ** -64
RENORM_BITS = 64
CONSISTENCY_TOL = 1e-12


def unit_ball_volume(s: float) -> float:
    """κ_s = π^(s/2) / Γ(1 + s/2)."""
    return math.pi ** (s / 2.0) / float(gamma_fn(1.0 + s / 2.0))


@dataclass(frozen=True)
class ComparisonParams:
    gamma: float
    d: int = 2
    r0: float = 1.0

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise UsageError(f"dimension must be an integer ≥ 2, got {self.d}")
        if not self.gamma > 1:
            raise UsageError(f"gamma must exceed 1, got {self.gamma}")
        if not self.r0 > 0:
            raise UsageError(f"r0 must be positive, got {self.r0}")

    @property
    def omega(self) -> float:
        """Surface area of the unit sphere in dimension d (d=2: 2π)."""
        return self.d * unit_ball_volume(self.d)

    @property
    def rate(self) -> float:
        return self.omega / 2.0

    @property
    def stationary_mean(self) -> float:
        return 2.0 / self.omega


# ---------------------------------------------------------------------------
# Perpetuity chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerpetuityState:
    """
    Chain state with S = s_mant·2^−exp and P = p_mant·2^exp.

    The shared exponent keeps both mantissas representable on long chains;
    X = S·P = s_mant·p_mant needs no exponent at all.
    """

    n: int
    s_mant: float
    p_mant: float
    exp: int = 0

    @property
    def S(self) -> float:
        return math.ldexp(self.s_mant, -self.exp)

    @property
    def P(self) -> float:
        return math.ldexp(self.p_mant, self.exp)

    @property
    def X(self) -> float:
        return self.s_mant * self.p_mant

    @property
    def log_S(self) -> float:
        return math.log(self.s_mant) - self.exp * math.log(2.0)

    @property
    def log_P(self) -> float:
        return math.log(self.p_mant) + self.exp * math.log(2.0)


def _draw_steps(rng: np.random.Generator, n: int, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """T_1..T_n ~ Exponential(rate) and U_1..U_n ~ Uniform(0, 1]."""
    t = rng.exponential(1.0 / rate, size=n)
    u = 1.0 - rng.random(n)
    return t, u


def init(params: ComparisonParams, rng: np.random.Generator) -> PerpetuityState:
    """P₀ = r0^(d−1) and S₀ ~ Exponential(ω/2 · P₀)."""
    p0 = params.r0 ** (params.d - 1)
    s0 = float(rng.exponential(1.0 / (params.rate * p0)))
    return PerpetuityState(0, s0, p0, 0)


def step(
    state: PerpetuityState,
    params: ComparisonParams,
    rng: np.random.Generator | None = None,
    T: float | None = None,
    U: float | None = None,
) -> PerpetuityState:
    """
    Advance the chain by one line encounter.

    ``T`` and ``U`` may be given explicitly; otherwise they are drawn from
    ``rng``. Raises RuntimeError if X′ drifts from U(T + X) by more than
    1e-12 relative.
    """
    if T is None or U is None:
        if rng is None:
            raise UsageError("step needs either rng or explicit T and U")
        t_draw, u_draw = _draw_steps(rng, 1, params.rate)
        T = float(t_draw[0]) if T is None else T
        U = float(u_draw[0]) if U is None else U
    s_mant = U * state.s_mant
    p_mant = state.p_mant + T / state.s_mant
    exp = state.exp
    if s_mant < RENORM_BELOW:
        s_mant = math.ldexp(s_mant, RENORM_BITS)
        p_mant = math.ldexp(p_mant, -RENORM_BITS)
        exp += RENORM_BITS
    new = PerpetuityState(state.n + 1, s_mant, p_mant, exp)
    expected = U * (T + state.X)
    if not math.isclose(new.X, expected, rel_tol=CONSISTENCY_TOL, abs_tol=0.0):
        raise RuntimeError(f"perpetuity drifted at step {new.n}: X={new.X!r}, U(T+X)={expected!r}")
    return new


@dataclass(frozen=True)
class Trace:
    """One trajectory: n = 0..N with P and S in logs and the escape partial sums."""

    n: np.ndarray
    log_P: np.ndarray
    log_S: np.ndarray
    X: np.ndarray
    partial_sum: np.ndarray

    @property
    def P(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_P)

    @property
    def S(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_S)


def _log_chain(params: ComparisonParams, n_steps: int, rng: np.random.Generator):
    state = init(params, rng)
    t, u = _draw_steps(rng, n_steps, params.rate)
    log_s = np.concatenate([[state.log_S], state.log_S + np.cumsum(np.log(u))])
    log_p = np.logaddexp.accumulate(np.concatenate([[state.log_P], np.log(t) - log_s[:-1]]))
    return state, t, u, log_s, log_p


def _partial_sums(params: ComparisonParams, log_s: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    a = 1.0 / (params.d - 1)
    with np.errstate(divide="ignore", over="ignore"):
        log_terms = (
            log_s[:-1] / (params.gamma - 1.0)
            + a * log_p[1:]
            + np.log(-np.expm1(a * (log_p[:-1] - log_p[1:])))
        )
        return np.cumsum(np.exp(log_terms))


def escape_time_partial_sum(params: ComparisonParams, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """
    Running sums of the escape-time series along one trajectory.

    Element k−1 is the sum of the first k terms. Computed entirely from
    log P and log S, so neither can overflow.
    """
    if n_steps < 1:
        raise UsageError(f"n_steps must be at least 1, got {n_steps}")
    _, _, _, log_s, log_p = _log_chain(params, n_steps, rng)
    return _partial_sums(params, log_s, log_p)


def trajectory(params: ComparisonParams, n_steps: int, rng: np.random.Generator) -> Trace:
    """Full trace for CSV output; consumes the same draws as escape_time_partial_sum."""
    if n_steps < 1:
        raise UsageError(f"n_steps must be at least 1, got {n_steps}")
    state, t, u, log_s, log_p = _log_chain(params, n_steps, rng)
    x = np.empty(n_steps + 1)
    x[0] = state.X
    for k in range(n_steps):
        x[k + 1] = u[k] * (t[k] + x[k])
    partial = np.concatenate([[0.0], _partial_sums(params, log_s, log_p)])
    return Trace(np.arange(n_steps + 1), log_p, log_s, x, partial)


def stationary_mean(
    params: ComparisonParams,
    n_steps: int,
    rng: np.random.Generator,
    burn_in: int = BURN_IN,
) -> float:
    """Average of X over n_steps after discarding burn_in steps."""
    state = init(params, rng)
    t, u = _draw_steps(rng, burn_in + n_steps, params.rate)
    x = state.X
    total = 0.0
    for k in range(burn_in + n_steps):
        x = u[k] * (t[k] + x)
        if k >= burn_in:
            total += x
    return total / n_steps


# ---------------------------------------------------------------------------
# Envelope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    """
    Piecewise-linear bound y(t) on the distance from the origin.

    Between knots the slope is the fastest speed of any line within the
    current radius (or the off-network speed ε, whichever is larger). A zero
    slope means y stays put forever (``stuck``).
    """

    knots_t: np.ndarray
    knots_y: np.ndarray
    slopes: np.ndarray

    @property
    def r0(self) -> float:
        return float(self.knots_y[0])

    @property
    def stuck(self) -> bool:
        return bool(self.slopes[-1] == 0.0)

    def at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.knots_t, t, side="right") - 1, 0, len(self.knots_t) - 1)
        return self.knots_y[idx] + self.slopes[idx] * (t - self.knots_t[idx])

    def dominates(self, route, n_grid: int = 1000, rel_tol: float = 1e-9) -> bool:
        """True if the route's distance from the origin stays below y on a time grid."""
        if not route.segments:
            return math.hypot(*route.start) <= self.r0 * (1.0 + rel_tol)
        grid = np.linspace(0.0, route.total_time, n_grid)
        pts = np.array([route.position_at(float(t)) for t in grid])
        dist = np.hypot(pts[:, 0], pts[:, 1])
        return bool(np.all(dist <= self.at(grid) * (1.0 + rel_tol) + rel_tol))


def envelope(sample: LineSample, r0: float, epsilon: float = 0.0) -> Envelope:
    """
    Build the envelope y with y(0) = r0 for a sample centred at the origin.

    Parameters
    ----------
    sample:  Line sample whose window is centred at the origin, radius ≥ r0.
    r0:      Starting radius.
    epsilon: Off-network speed used as a floor for the slope.
    """
    if not r0 > 0:
        raise UsageError(f"r0 must be positive, got {r0}")
    window = sample.window
    if math.hypot(*window.center) != 0.0:
        raise UsageError(f"envelope needs a window centred at the origin, got {window.center}")
    if window.radius < r0:
        raise UsageError(f"window radius {window.radius} is smaller than r0={r0}")

    order = sorted((ml.distance((0.0, 0.0)), ml.v) for ml in sample.lines)
    # Running maximum speed over lines closer than each distance.
    best = 0.0
    k = 0
    while k < len(order) and order[k][0] <= r0:
        best = max(best, order[k][1])
        k += 1
    ts, ys, slopes = [0.0], [r0], [max(best, epsilon)]
    for dist, v in order[k:]:
        if v <= best:
            continue
        if slopes[-1] == 0.0:
            break
        ts.append(ts[-1] + (dist - ys[-1]) / slopes[-1])
        ys.append(dist)
        best = v
        slopes.append(max(best, epsilon))
    logger.debug("envelope: %d knots, final slope %.4g", len(ts), slopes[-1])
    return Envelope(np.array(ts), np.array(ys), np.array(slopes))
