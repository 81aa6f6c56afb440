"""Numerical integration of the cell model.

A classical 4th-order fixed-step scheme drives everything: it is
deterministic, its error model is simple, and the model is never stiff in
the parameter ranges of interest. Piecewise-constant stimulus profiles are
handled by restarting the step grid exactly at each segment boundary, so
no step ever straddles a consumption discontinuity and the 4th-order
accuracy survives step inputs.

Two entry points operate on a single cell (:func:`integrate`,
:func:`run_to_steady`); :func:`simulate_ensemble` advances a whole batch
of independent cells at once as flat numpy arrays, which is how the
parameter sweeps and the randomized verification suites stay fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    ModelInputError,
    NonConvergenceError,
    StepSizeError,
)
from .model import CellSpec, CellState, StimulusProfile

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "EnsembleResult",
    "integrate",
    "run_to_steady",
    "simulate_ensemble",
    "ENSEMBLE_RUNNING",
    "ENSEMBLE_STEADY",
    "ENSEMBLE_ESCAPED",
]

NEGATIVE_DUST = 1e-12  # clamp window for roundoff-scale negative components


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    step: step size (time units).
    output_stride: number of steps between emitted trajectory samples.
    steady_tol: steady-state threshold on the max derivative component.
    max_time: time cap for steady-state searches.
    """

    step: float = 0.01
    output_stride: int = 10
    steady_tol: float = 1e-8
    max_time: float = 1000.0

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise ModelInputError(f"step must be positive, got {self.step!r}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ModelInputError(f"output_stride must be a positive integer, got {self.output_stride!r}")
        if not (np.isfinite(self.steady_tol) and self.steady_tol > 0):
            raise ModelInputError(f"steady_tol must be positive, got {self.steady_tol!r}")
        if not (np.isfinite(self.max_time) and self.max_time > 0):
            raise ModelInputError(f"max_time must be positive, got {self.max_time!r}")


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory of one cell.

    times: (T,) strictly increasing sample instants.
    factory/product: (T, N) state samples.
    stimulus: (T, N) consumption rates active at each instant
      (right-continuous across segment boundaries).
    net_production: (T, N) instantaneous synthesis rate
      production - production_inhibition * P.
    """

    times: np.ndarray
    factory: np.ndarray
    product: np.ndarray
    stimulus: np.ndarray
    net_production: np.ndarray

    @property
    def final_state(self) -> CellState:
        return CellState(self.factory[-1], self.product[-1])


def _rhs(g, k, r, i, opp, c, f, p):
    """Vector field on bare arrays; opp is None for unopposed cells."""
    if opp is None:
        df = (g - k * p) * f
    else:
        df = (g - k * p - f @ opp.T) * f
    dp = (r - i * p) * f - c * p
    return df, dp


def _rk4_step(g, k, r, i, opp, c, f, p, h):
    k1f, k1p = _rhs(g, k, r, i, opp, c, f, p)
    k2f, k2p = _rhs(g, k, r, i, opp, c, f + 0.5 * h * k1f, p + 0.5 * h * k1p)
    k3f, k3p = _rhs(g, k, r, i, opp, c, f + 0.5 * h * k2f, p + 0.5 * h * k2p)
    k4f, k4p = _rhs(g, k, r, i, opp, c, f + h * k3f, p + h * k3p)
    sixth = h / 6.0
    return (
        f + sixth * (k1f + 2.0 * (k2f + k3f) + k4f),
        p + sixth * (k1p + 2.0 * (k2p + k3p) + k4p),
    )


def _guard_state(f: np.ndarray, p: np.ndarray, t: float, step: float, f_prev, p_prev):
    """Clamp roundoff dust at zero; reject real negatives and non-finite values."""
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
        raise DivergenceError(t, f_prev.copy(), p_prev.copy())
    worst = min(f.min(), p.min())
    if worst < 0.0:
        if worst < -NEGATIVE_DUST:
            raise StepSizeError(t, float(worst), step)
        np.maximum(f, 0.0, out=f)
        np.maximum(p, 0.0, out=p)
    return f, p


def _segment_steps(length: float, h: float) -> list[float]:
    """Step sizes covering a segment exactly: full steps plus one remainder."""
    n_full = int(np.floor(length / h + 1e-9))
    rem = length - n_full * h
    steps = [h] * n_full
    if rem > 1e-9 * max(1.0, length):
        steps.append(rem)
    return steps


def integrate(
    spec: CellSpec,
    initial: CellState,
    profile: StimulusProfile,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate a cell under a piecewise-constant stimulus profile.

    Samples every ``output_stride`` steps; stimulus breakpoints and the
    horizon are always sampled exactly. A step that drags a component
    below -1e-12 raises StepSizeError; smaller negative dust is clamped.
    """
    if initial.n != spec.n or profile.n != spec.n:
        raise ModelInputError(
            f"dimension mismatch: spec has {spec.n} factories, initial state {initial.n}, "
            f"profile {profile.n}"
        )
    g, k, r, i = spec.rate_arrays()
    opp = spec.opposition if spec._opposed else None

    boundaries = [0.0, *profile.breakpoints().tolist(), profile.horizon]
    f = np.array(initial.factory, dtype=float)
    p = np.array(initial.product, dtype=float)

    times = [0.0]
    f_out = [f.copy()]
    p_out = [p.copy()]
    c_out = [profile.rates_at(0.0)]

    for a, b in zip(boundaries, boundaries[1:]):
        c = profile.rates_at(a)
        steps = _segment_steps(b - a, cfg.step)
        for idx, h in enumerate(steps):
            last = idx == len(steps) - 1
            t = b if last else a + (idx + 1) * cfg.step
            f_new, p_new = _rk4_step(g, k, r, i, opp, c, f, p, h)
            f, p = _guard_state(f_new, p_new, t, cfg.step, f, p)
            if last or (idx + 1) % cfg.output_stride == 0:
                times.append(t)
                f_out.append(f.copy())
                p_out.append(p.copy())
                c_out.append(profile.rates_at(t))

    product = np.vstack(p_out)
    return Trajectory(
        times=np.array(times),
        factory=np.vstack(f_out),
        product=product,
        stimulus=np.vstack(c_out),
        net_production=r[None, :] - i[None, :] * product,
    )


def run_to_steady(
    spec: CellSpec,
    initial: CellState,
    consumption,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> tuple[CellState, float]:
    """Advance under constant consumption until the flow norm drops below steady_tol.

    Returns (state, elapsed time); raises NonConvergenceError with the
    final state if max_time passes first (the expected outcome when the
    stability criterion is violated and the factory grows without bound).
    """
    c = np.atleast_1d(np.asarray(consumption, dtype=float))
    if initial.n != spec.n or c.shape != (spec.n,):
        raise ModelInputError("dimension mismatch between spec, initial state, and consumption")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ModelInputError("consumption rates must be finite and >= 0")
    g, k, r, i = spec.rate_arrays()
    opp = spec.opposition if spec._opposed else None

    f = np.array(initial.factory, dtype=float)
    p = np.array(initial.product, dtype=float)
    t = 0.0
    while True:
        df, dp = _rhs(g, k, r, i, opp, c, f, p)
        if max(np.max(np.abs(df)), np.max(np.abs(dp))) < cfg.steady_tol:
            return CellState(f, p), t
        if t >= cfg.max_time:
            raise NonConvergenceError(t, f.copy(), p.copy())
        f_new, p_new = _rk4_step(g, k, r, i, opp, c, f, p, cfg.step)
        t += cfg.step
        f, p = _guard_state(f_new, p_new, t, cfg.step, f, p)


ENSEMBLE_RUNNING = 0
ENSEMBLE_STEADY = 1
ENSEMBLE_ESCAPED = 2


@dataclass(frozen=True)
class EnsembleResult:
    """Final states of a batch of independent cells.

    status per member: 1 = flow norm fell below steady_tol, 2 = a factory
    exceeded escape_threshold, 0 = still running at max_time. ``time``
    holds the instant each member stopped (or max_time).
    """

    factory: np.ndarray
    product: np.ndarray
    time: np.ndarray
    status: np.ndarray


def simulate_ensemble(
    growth,
    growth_inhibition,
    production,
    production_inhibition,
    consumption,
    factory0,
    product0,
    *,
    opposition=None,
    step: float = 0.01,
    max_time: float = 1000.0,
    steady_tol: float = 1e-8,
    escape_threshold: float | None = None,
    chunk_steps: int = 200,
) -> EnsembleResult:
    """Advance B independent cells at once, each with its own parameters.

    Parameter and state arrays have shape (B,) for single-factory members
    or (B, N) for N-factory members; ``opposition``, when given, has shape
    (B, N, N). Members stop individually on steady state or escape, and
    finished members are dropped from the working batch, so ensembles with
    a few slow stragglers stay cheap.
    """
    g = np.atleast_1d(np.asarray(growth, dtype=float))
    single = g.ndim == 1
    shape = g.shape
    arrays = [
        np.broadcast_to(np.asarray(a, dtype=float), shape).astype(float)
        for a in (growth_inhibition, production, production_inhibition, consumption)
    ]
    k, r, i, c = arrays
    f = np.broadcast_to(np.asarray(factory0, dtype=float), shape).astype(float)
    p = np.broadcast_to(np.asarray(product0, dtype=float), shape).astype(float)
    opp = None
    if opposition is not None:
        opp = np.asarray(opposition, dtype=float)
        if single:
            raise ModelInputError("opposition requires (B, N) shaped parameter arrays")

    n_members = shape[0]
    out_f = f.copy()
    out_p = p.copy()
    out_t = np.full(n_members, float(max_time))
    out_status = np.zeros(n_members, dtype=int)

    idx = np.arange(n_members)
    t = 0.0

    def rhs(fv, pv, kv, rv, iv, cv, gv, ov):
        if ov is None:
            df = (gv - kv * pv) * fv
        else:
            df = (gv - kv * pv - np.einsum("bij,bj->bi", ov, fv)) * fv
        dp = (rv - iv * pv) * fv - cv * pv
        return df, dp

    g_, k_, r_, i_, c_, opp_ = g, k, r, i, c, opp
    while idx.size and t < max_time:
        n_chunk = min(chunk_steps, max(1, int(np.ceil((max_time - t) / step - 1e-9))))
        for _ in range(n_chunk):
            k1f, k1p = rhs(f, p, k_, r_, i_, c_, g_, opp_)
            k2f, k2p = rhs(f + 0.5 * step * k1f, p + 0.5 * step * k1p, k_, r_, i_, c_, g_, opp_)
            k3f, k3p = rhs(f + 0.5 * step * k2f, p + 0.5 * step * k2p, k_, r_, i_, c_, g_, opp_)
            k4f, k4p = rhs(f + step * k3f, p + step * k3p, k_, r_, i_, c_, g_, opp_)
            sixth = step / 6.0
            f = f + sixth * (k1f + 2.0 * (k2f + k3f) + k4f)
            p = p + sixth * (k1p + 2.0 * (k2p + k3p) + k4p)
        t += n_chunk * step

        df, dp = rhs(f, p, k_, r_, i_, c_, g_, opp_)
        if single:
            flow_norm = np.maximum(np.abs(df), np.abs(dp))
            finite = np.isfinite(f) & np.isfinite(p)
            peak = f
        else:
            flow_norm = np.maximum(np.abs(df).max(axis=1), np.abs(dp).max(axis=1))
            finite = np.isfinite(f).all(axis=1) & np.isfinite(p).all(axis=1)
            peak = f.max(axis=1, initial=-np.inf, where=np.isfinite(f))
        with np.errstate(invalid="ignore"):
            steady = flow_norm < steady_tol
            escaped = ~finite
            if escape_threshold is not None:
                escaped |= peak > escape_threshold
        steady &= ~escaped

        done = steady | escaped
        if np.any(done):
            sel = idx[done]
            out_f[sel] = f[done]
            out_p[sel] = p[done]
            out_t[sel] = t
            out_status[sel] = np.where(steady[done], ENSEMBLE_STEADY, ENSEMBLE_ESCAPED)
            keep = ~done
            idx = idx[keep]
            f, p = f[keep], p[keep]
            g_, k_, r_, i_, c_ = g_[keep], k_[keep], r_[keep], i_[keep], c_[keep]
            if opp_ is not None:
                opp_ = opp_[keep]

    if idx.size:
        out_f[idx] = f
        out_p[idx] = p
        out_t[idx] = max_time
    return EnsembleResult(out_f, out_p, out_t, out_status)
