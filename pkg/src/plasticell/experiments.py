"""Parametric studies: step-response time constants, pulse transients,
opposition surfaces, and total-capacity maps.

The studies here are the scriptable versions of the model's standard
characterization plots:

* ``time_constants`` / ``tau_ratio_heatmap``: response times of factory
  and product to a step in the minimum factory quantity, swept over the
  reduced parameter plane (p_inf, p_lim).
* ``pulse_transient``: short versus long consumption surges and the
  distinct factory response they produce.
* ``opposition_surface`` / ``capacity_map``: steady-state capacities of a
  two-factory cell over a consumption grid, showing how opposition makes
  specialization profitable.

Grid cells are independent, so sweeps run as vectorized batches; the
``PLASTICELL_THREADS`` environment variable additionally caps how many
worker threads may carve up a grid (default 1, i.e. serial).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import jacobian_metrics, multi_equilibrium, single_equilibrium
from .dynamics import IntegratorConfig, Trajectory, integrate
from .errors import ModelInputError, SolverError
from .model import CellSpec, CellState, FactoryParams, StimulusProfile, params_from_levels

__all__ = [
    "TAU_FRACTION",
    "TimeConstantResult",
    "AxisDef",
    "SweepGrid",
    "PulseTransientResult",
    "OppositionSurfaceResult",
    "CapacityMapResult",
    "time_constants",
    "check_response_ordering",
    "tau_ratio_heatmap",
    "pulse_transient",
    "opposition_surface",
    "capacity_map",
    "capacity_along_contour",
]

# conventional 1 - 1/e rise fraction
TAU_FRACTION = 1.0 - math.exp(-1.0)

MARKER_OK = ""
MARKER_INVALID = "invalid"
MARKER_OSCILLATORY = "oscillatory"
MARKER_FAILED = "failed"


def _max_threads() -> int:
    raw = os.environ.get("PLASTICELL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TimeConstantResult:
    """Measured response times to a step in the minimum factory quantity.

    tau_f: time for the factory to traverse 63.2% of the gap between its
      pre- and post-step equilibria.
    tau_p: the product's initial-response time: how long after the step
      the product (equivalently, the net production rate, which is an
      affine image of it) has covered 63.2% of the gap between its
      pre-step level and its extremal transient deviation. The product's
      equilibrium itself does not move, so its response lives entirely in
      this transient excursion.
    ratio: tau_f / tau_p.
    oscillatory: linearization discriminant at the post-step consumption
      is negative (damped oscillatory approach).
    tau_p_recovery: alternative product measure: time at which the product
      has recovered 63.2% of the way back from its extremal deviation to
      its equilibrium level. The recovery leg is paced by factory
      regrowth, so this variant tracks tau_f rather than the product's
      own reaction speed; it is reported for comparison only.
    tau_f_linear / tau_p_linear: eigenvalue-reciprocal variants (slow and
      fast mode of the post-step linearization).
    converged: all trajectory crossings were found before the time cap.
    """

    tau_f: float
    tau_p: float
    ratio: float
    oscillatory: bool
    tau_p_recovery: float
    tau_f_linear: float
    tau_p_linear: float
    converged: bool


class _ChunkedBatch:
    """Chunked vectorized integration of B single-factory cells under fixed c.

    Each call to ``advance`` steps the still-active cells one chunk and
    hands the per-chunk state history to ``scan``, which returns a boolean
    "done" mask; finished cells are compressed out. Subclasses implement
    ``scan`` to record whatever crossings they are after.
    """

    def __init__(self, g, k, r, i, c, f0, p0, step, chunk):
        self.g, self.k, self.r, self.i, self.c = g, k, r, i, c
        self.f, self.p = f0.copy(), p0.copy()
        self.h = step
        self.chunk = chunk
        self.idx = np.arange(g.shape[0])
        self.t = 0.0
        self._fh = np.empty((chunk + 1, g.shape[0]))
        self._ph = np.empty((chunk + 1, g.shape[0]))

    def compress(self, keep: np.ndarray):
        self.idx = self.idx[keep]
        for name in ("g", "k", "r", "i", "c", "f", "p"):
            setattr(self, name, getattr(self, name)[keep])

    def run(self, max_time: float):
        while self.idx.size and self.t < max_time:
            n = min(self.chunk, max(1, int(np.ceil((max_time - self.t) / self.h - 1e-9))))
            m = self.idx.size
            h = self.h
            self._fh[0, :m] = self.f
            self._ph[0, :m] = self.p
            f, p = self.f, self.p
            g, k, r, i, c = self.g, self.k, self.r, self.i, self.c
            for s in range(n):
                k1f = (g - k * p) * f
                k1p = (r - i * p) * f - c * p
                f2, p2 = f + 0.5 * h * k1f, p + 0.5 * h * k1p
                k2f = (g - k * p2) * f2
                k2p = (r - i * p2) * f2 - c * p2
                f3, p3 = f + 0.5 * h * k2f, p + 0.5 * h * k2p
                k3f = (g - k * p3) * f3
                k3p = (r - i * p3) * f3 - c * p3
                f4, p4 = f + h * k3f, p + h * k3p
                k4f = (g - k * p4) * f4
                k4p = (r - i * p4) * f4 - c * p4
                f = f + h / 6.0 * (k1f + 2.0 * (k2f + k3f) + k4f)
                p = p + h / 6.0 * (k1p + 2.0 * (k2p + k3p) + k4p)
                self._fh[s + 1, :m] = f
                self._ph[s + 1, :m] = p
            self.f, self.p = f, p
            done = self.scan(self._fh[: n + 1, :m], self._ph[: n + 1, :m], self.t)
            self.t += n * h
            if np.any(done):
                self.compress(~done)
        if self.idx.size:
            # time cap reached: flush whatever the stragglers measured
            self.compress(np.zeros(self.idx.size, dtype=bool))

    def scan(self, F, P, t0):  # pragma: no cover - abstract
        raise NotImplementedError


def _first_crossing(values: np.ndarray, threshold: np.ndarray, upward: bool):
    """Interpolated first-crossing row (in steps) per column, NaN if absent."""
    hit = values[1:] >= threshold if upward else values[1:] <= threshold
    any_hit = hit.any(axis=0)
    out = np.full(values.shape[1], np.nan)
    if np.any(any_hit):
        srow = hit[:, any_hit].argmax(axis=0)
        cols = np.where(any_hit)[0]
        before = values[srow, cols]
        after = values[srow + 1, cols]
        with np.errstate(divide="ignore", invalid="ignore"):
            fr = (threshold[cols] - before) / (after - before)
        fr = np.where(np.isfinite(fr), np.clip(fr, 0.0, 1.0), 1.0)
        out[cols] = srow + fr
    return out


class _StepResponsePass1(_ChunkedBatch):
    """Finds tau_f, the product extremum, the recovery crossing, and the factory peak."""

    def __init__(self, g, k, r, i, c1, f0, p0, f_thr, osc_window, step, chunk):
        super().__init__(g, k, r, i, c1, f0, p0, step, chunk)
        B = g.shape[0]
        self.p_ref = p0.copy()
        self.f_thr = f_thr
        self.osc_window = osc_window
        self.tau_f = np.full(B, np.nan)
        self.tau_rec = np.full(B, np.nan)
        self.p_min = p0.copy()
        self.f_peak = f0.copy()
        self.out_tau_f = np.full(B, np.nan)
        self.out_tau_rec = np.full(B, np.nan)
        self.out_p_min = p0.copy()
        self.out_f_peak = f0.copy()

    def compress(self, keep):
        sel = self.idx[~keep]
        self.out_tau_f[sel] = self.tau_f[~keep]
        self.out_tau_rec[sel] = self.tau_rec[~keep]
        self.out_p_min[sel] = self.p_min[~keep]
        self.out_f_peak[sel] = self.f_peak[~keep]
        for name in ("p_ref", "f_thr", "osc_window", "tau_f", "tau_rec", "p_min", "f_peak"):
            setattr(self, name, getattr(self, name)[keep])
        super().compress(keep)

    def scan(self, F, P, t0):
        h = self.h
        need = np.isnan(self.tau_f)
        if np.any(need):
            rows = _first_crossing(F, self.f_thr, upward=True)
            found = need & ~np.isnan(rows)
            self.tau_f[found] = t0 + rows[found] * h

        carg = P.argmin(axis=0)
        cmin = P[carg, np.arange(P.shape[1])]
        lower = cmin < self.p_min
        self.p_min = np.where(lower, cmin, self.p_min)

        # recovery crossing is only valid after the (deepest) minimum
        need_rec = np.isnan(self.tau_rec) & (self.p_ref - self.p_min > 1e-9)
        if np.any(need_rec):
            thr = self.p_min + TAU_FRACTION * (self.p_ref - self.p_min)
            start_row = np.where(lower, carg, 0)
            masked = np.where(np.arange(P.shape[0])[:, None] >= start_row[None, :], P, -np.inf)
            rows = _first_crossing(masked, thr, upward=True)
            found = need_rec & ~np.isnan(rows)
            self.tau_rec[found] = t0 + rows[found] * h

        self.f_peak = np.maximum(self.f_peak, F.max(axis=0))
        settled = P[-1] > self.p_min + 1e-3 * np.maximum(self.p_ref - self.p_min, 1e-12)
        return (
            ~np.isnan(self.tau_f)
            & ~np.isnan(self.tau_rec)
            & settled
            & (self.t + (P.shape[0] - 1) * h >= np.where(self.osc_window > 0, self.tau_f + self.osc_window, 0.0))
        )


class _StepResponsePass2(_ChunkedBatch):
    """Finds the descent crossing toward a per-cell product threshold."""

    def __init__(self, g, k, r, i, c1, f0, p0, p_thr, step, chunk):
        super().__init__(g, k, r, i, c1, f0, p0, step, chunk)
        self.p_thr = p_thr
        self.out_tau = np.full(g.shape[0], np.nan)

    def compress(self, keep):
        self.p_thr = self.p_thr[keep]
        super().compress(keep)

    def scan(self, F, P, t0):
        rows = _first_crossing(P, self.p_thr, upward=False)
        found = ~np.isnan(rows)
        self.out_tau[self.idx[found]] = t0 + rows[found] * self.h
        return found


def _measure_step_response(
    g, k, r, i, c0, c1, *, step: float = 0.01, max_time: float = 500.0, chunk: int = 200
):
    """Measure step-response times for B single-factory cells stepped c0 -> c1.

    Every cell starts on its pre-step equilibrium and is integrated under
    c1. Returns (tau_f, tau_p, tau_p_recovery, f_peak, f_target) arrays;
    unfound crossings stay NaN. tau_p needs the extremal product deviation
    before its threshold is defined, so the descent crossing is measured
    in a cheap second pass over the early transient.
    """
    g, k, r, i, c0, c1 = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (g, k, r, i, c0, c1))
    gap = k * r - i * g
    if np.any(gap <= 0):
        raise ModelInputError("step response needs the stability criterion to hold")
    f0 = c0 * g / gap
    f1 = c1 * g / gap
    p_ref = g / k
    f_thr = f0 + TAU_FRACTION * (f1 - f0)

    # horizon needed to observe the first overshoot peak of spiral cells
    trace = -c1 * k * r / gap
    disc = trace * trace - 4.0 * c1 * g
    osc_window = np.zeros(g.shape[0])
    spiral = disc < 0
    with np.errstate(invalid="ignore"):
        omega = np.sqrt(np.maximum(-disc, 0.0)) / 2.0
    osc_window[spiral] = 2.0 * np.pi / omega[spiral] + 5.0 / np.abs(trace[spiral] / 2.0)

    pass1 = _StepResponsePass1(g, k, r, i, c1, f0, p_ref, f_thr, osc_window, step, chunk)
    pass1.run(max_time)
    tau_f = pass1.out_tau_f
    tau_rec = pass1.out_tau_rec
    p_min = pass1.out_p_min
    f_peak = pass1.out_f_peak

    measurable = (p_ref - p_min) > 1e-9
    p_thr = p_ref - TAU_FRACTION * (p_ref - p_min)
    tau_p = np.full(g.shape[0], np.nan)
    if np.any(measurable):
        sel = np.where(measurable)[0]
        pass2 = _StepResponsePass2(
            g[sel], k[sel], r[sel], i[sel], c1[sel], f0[sel], p_ref[sel], p_thr[sel], step, chunk
        )
        pass2.run(max_time)
        tau_p[sel] = pass2.out_tau
    return tau_f, tau_p, tau_rec, f_peak, f1


def time_constants(
    params: FactoryParams,
    f_min_baseline: float,
    f_min_step: float,
    *,
    step: float = 0.01,
    max_time: float = 500.0,
) -> TimeConstantResult:
    """Measure factory/product time constants for a step in f_min.

    The cell is initialized on its equilibrium for consumption
    ``f_min_baseline * production`` and stepped at t=0 to
    ``(f_min_baseline + f_min_step) * production``.
    """
    if not (f_min_baseline > 0):
        raise ModelInputError(f"f_min_baseline must be > 0, got {f_min_baseline!r}")
    if not (f_min_step > 0):
        raise ModelInputError(f"f_min_step must be > 0, got {f_min_step!r}")
    if not params.stable:
        raise ModelInputError("time constants need a parameter set satisfying the stability criterion")
    c0 = f_min_baseline * params.production
    c1 = (f_min_baseline + f_min_step) * params.production
    g, k, r, i = (params.growth, params.growth_inhibition, params.production, params.production_inhibition)
    tau_f, tau_p, tau_rec, _, _ = _measure_step_response(g, k, r, i, c0, c1, step=step, max_time=max_time)
    trace, det, disc = jacobian_metrics(params, c1, at="equilibrium")
    if disc >= 0:
        root = math.sqrt(disc)
        slow = abs(trace + root) / 2.0
        fast = abs(trace - root) / 2.0
        tau_f_lin, tau_p_lin = 1.0 / slow, 1.0 / fast
    else:
        tau_f_lin = tau_p_lin = 2.0 / abs(trace)
    tf, tp = float(tau_f[0]), float(tau_p[0])
    converged = math.isfinite(tf) and math.isfinite(tp) and math.isfinite(float(tau_rec[0]))
    return TimeConstantResult(
        tau_f=tf,
        tau_p=tp,
        ratio=tf / tp if converged else math.nan,
        oscillatory=disc < 0,
        tau_p_recovery=float(tau_rec[0]),
        tau_f_linear=tau_f_lin,
        tau_p_linear=tau_p_lin,
        converged=converged,
    )


def check_response_ordering(
    params: FactoryParams, f_min_baseline: float = 0.1, f_min_step: float = 1.0
) -> tuple[bool, TimeConstantResult]:
    """Empirical check of the required response ordering tau_f > tau_p."""
    result = time_constants(params, f_min_baseline, f_min_step)
    return result.converged and result.tau_f > result.tau_p, result


@dataclass(frozen=True)
class AxisDef:
    """One sweep axis: evenly spaced ``count`` values on [lo, hi]."""

    name: str
    lo: float
    hi: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular sweep result: values[iy, ix] over (x.values(), y.values()).

    Cells that could not be measured carry NaN plus a non-empty marker
    string ('invalid', 'oscillatory', 'failed'). ``extras`` holds
    same-shaped auxiliary fields.
    """

    x: AxisDef
    y: AxisDef
    metric: str
    values: np.ndarray
    markers: np.ndarray
    extras: dict[str, np.ndarray] = field(default_factory=dict)


def tau_ratio_heatmap(
    p_inf_range: tuple[float, float] = (0.1, 5.0),
    p_lim_range: tuple[float, float] = (0.1, 5.0),
    resolution: int = 50,
    *,
    f_min_baseline: float = 0.1,
    f_min_step: float = 1.0,
    step: float = 0.01,
    max_time: float = 500.0,
) -> SweepGrid:
    """Ratio tau_f/tau_p over the reduced (p_inf, p_lim) parameter plane.

    Cell parameter sets are reconstructed under the unit normalization
    (growth = production = 1), so a consumption rate equals f_min. Cells
    with p_inf >= p_lim are 'invalid' (no positive equilibrium); cells
    whose post-step linearization discriminant is negative are marked
    'oscillatory' but still carry their measured values in ``extras``.
    """
    if p_inf_range[0] <= 0 or p_lim_range[0] <= 0:
        raise ModelInputError("ranges must be positive")
    x = AxisDef("p_inf", *p_inf_range, resolution)
    y = AxisDef("p_lim", *p_lim_range, resolution)
    p_inf_v = x.values()
    p_lim_v = y.values()
    pi_grid, pl_grid = np.meshgrid(p_inf_v, p_lim_v)  # shape (ny, nx)

    markers = np.full(pi_grid.shape, MARKER_OK, dtype="<U16")
    values = np.full(pi_grid.shape, np.nan)
    tau_f = np.full(pi_grid.shape, np.nan)
    tau_p = np.full(pi_grid.shape, np.nan)
    tau_rec = np.full(pi_grid.shape, np.nan)
    peak = np.full(pi_grid.shape, np.nan)
    target = np.full(pi_grid.shape, np.nan)

    invalid = pi_grid >= pl_grid
    markers[invalid] = MARKER_INVALID
    run = ~invalid

    pi, pl = pi_grid[run], pl_grid[run]
    g = np.ones_like(pi)
    r = np.ones_like(pi)
    k = 1.0 / pi
    i = 1.0 / pl
    c0 = np.full_like(pi, float(f_min_baseline))
    c1 = np.full_like(pi, float(f_min_baseline + f_min_step))

    tf, tp, trec, fp, f1 = _measure_step_response(g, k, r, i, c0, c1, step=step, max_time=max_time)
    tau_f[run], tau_p[run], tau_rec[run], peak[run], target[run] = tf, tp, trec, fp, f1

    trace = -c1 * k * r / (k * r - i * g)
    disc_run = trace * trace - 4.0 * c1 * g
    disc = np.full(pi_grid.shape, np.nan)
    disc[run] = disc_run

    failed = run.copy()
    failed[run] = ~(np.isfinite(tf) & np.isfinite(tp))
    markers[failed] = MARKER_FAILED
    with np.errstate(invalid="ignore"):
        oscillatory = run & (disc < 0) & ~failed
    markers[oscillatory] = MARKER_OSCILLATORY

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = tau_f / tau_p
        log_ratio = np.log10(ratio)
    ok = markers == MARKER_OK
    values[ok] = ratio[ok]

    return SweepGrid(
        x=x,
        y=y,
        metric="tau_f_over_tau_p",
        values=values,
        markers=markers,
        extras={
            "tau_f": tau_f,
            "tau_p": tau_p,
            "tau_p_recovery": tau_rec,
            "ratio": ratio,
            "log10_ratio": log_ratio,
            "discriminant": disc,
            "f_peak": peak,
            "f_target": target,
        },
    )


@dataclass(frozen=True)
class PulseTransientResult:
    """Trajectory of the two-pulse consumption protocol plus plot annotations.

    f_min_series / f_inf_series: the instantaneous minimum factory
    quantity and the equilibrium the factory is being pulled toward
    (both step functions of time). p_inf is consumption-independent.
    windows: named (start, end) spans of the two pulses.
    """

    trajectory: Trajectory
    f_min_series: np.ndarray
    f_inf_series: np.ndarray
    p_inf: float
    baseline_f: float
    baseline_p: float
    windows: dict[str, tuple[float, float]]


def pulse_transient(
    params: FactoryParams,
    c_base: float = 0.2,
    pulse_height: float = 2.0,
    short_span: float = 2.0,
    long_span: float = 50.0,
    *,
    short_start: float = 50.0,
    long_start: float = 100.0,
    tail: float = 100.0,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> PulseTransientResult:
    """Run the short/long consumption-pulse protocol from the baseline equilibrium.

    The cell equilibrates at ``c_base``, receives ``c_base + pulse_height``
    over [short_start, short_start+short_span] and again over
    [long_start, long_start+long_span], and relaxes for ``tail`` after.
    """
    if not (c_base > 0):
        raise ModelInputError(f"c_base must be > 0, got {c_base!r}")
    if pulse_height <= 0 or short_span <= 0 or long_span <= 0:
        raise ModelInputError("pulse height and spans must be > 0")
    if not (0 < short_start and short_start + short_span < long_start):
        raise ModelInputError("pulse windows must be ordered and non-overlapping")
    f0, p0 = single_equilibrium(params, c_base)
    horizon = long_start + long_span + tail
    c_hi = c_base + pulse_height
    profile = StimulusProfile(
        (
            (
                (0.0, c_base),
                (short_start, c_hi),
                (short_start + short_span, c_base),
                (long_start, c_hi),
                (long_start + long_span, c_base),
            ),
        ),
        horizon,
    )
    traj = integrate(CellSpec.single(params), CellState([f0], [p0]), profile, cfg)
    c_series = traj.stimulus[:, 0]
    gap = params.growth_inhibition * params.production - params.production_inhibition * params.growth
    return PulseTransientResult(
        trajectory=traj,
        f_min_series=c_series / params.production,
        f_inf_series=c_series * params.growth / gap,
        p_inf=params.p_inf,
        baseline_f=f0,
        baseline_p=p0,
        windows={
            "short": (short_start, short_start + short_span),
            "long": (long_start, long_start + long_span),
        },
    )


def _pair_equilibria_batch(
    spec: CellSpec,
    c_batch: np.ndarray,
    *,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Damped fixed-point iteration for many consumption vectors of one spec.

    Returns (f, p, converged) with shapes (M, N), (M, N), (M,). Cells whose
    net growth is driven to zero get that factory pinned at zero (the
    invariant-plane equilibrium). Non-converged cells are flagged, not fatal.
    """
    g, k, r, i = spec.rate_arrays()
    opp = spec.opposition
    m = c_batch.shape[0]
    f_min = c_batch / r[None, :]
    gap = k * r - i * g
    f = c_batch * (g / gap)[None, :]
    active = c_batch > 0
    f[~active] = 0.0
    converged = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        net = g[None, :] - f @ opp.T
        dead = active & (net <= 0.0)
        if np.any(dead):
            active = active & ~dead
            f[dead] = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = f_min / (k[None, :] / net - (i / r)[None, :])
        nxt[~active] = 0.0
        residual = np.abs(nxt - f).max(axis=1)
        f = (1.0 - damping) * f + damping * nxt
        converged = residual < tol
        if converged.all():
            break
    net = g[None, :] - f @ opp.T
    p = net / k[None, :]
    p[(c_batch > 0) & (f == 0.0)] = 0.0  # extinguished: consumption drains the product
    return f, p, converged


def _solve_grid(spec: CellSpec, c_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched equilibrium solve, split across PLASTICELL_THREADS workers."""
    threads = _max_threads()
    if threads == 1 or c_batch.shape[0] < 2 * threads:
        return _pair_equilibria_batch(spec, c_batch)
    chunks = np.array_split(np.arange(c_batch.shape[0]), threads)
    out_f = np.empty_like(c_batch)
    out_p = np.empty_like(c_batch)
    out_ok = np.empty(c_batch.shape[0], dtype=bool)

    def work(sel):
        out_f[sel], out_p[sel], out_ok[sel] = _pair_equilibria_batch(spec, c_batch[sel])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, chunks))
    return out_f, out_p, out_ok


@dataclass(frozen=True)
class OppositionSurfaceResult:
    """Two-factory steady states over a (c1, c2) consumption grid.

    f1[iy, ix] is factory 1's capacity at c1 = c1_axis.values()[ix],
    c2 = c2_axis.values()[iy]; likewise f2/p1/p2. ``ok`` flags solver
    convergence per cell.
    """

    c1_axis: AxisDef
    c2_axis: AxisDef
    f1: np.ndarray
    f2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    ok: np.ndarray

    def constant_c1_curves(self):
        """One (c1, f1-column, f2-column) tuple per grid column."""
        c1v = self.c1_axis.values()
        return [(c1v[ix], self.f1[:, ix], self.f2[:, ix]) for ix in range(len(c1v))]

    def constant_c2_curves(self):
        c2v = self.c2_axis.values()
        return [(c2v[iy], self.f1[iy, :], self.f2[iy, :]) for iy in range(len(c2v))]


def opposition_surface(
    spec: CellSpec,
    c_range: tuple[float, float] = (0.1, 1.0),
    resolution: int = 50,
) -> OppositionSurfaceResult:
    """Steady-state surface of a two-factory cell over a consumption grid."""
    if spec.n != 2:
        raise ModelInputError("opposition_surface needs a two-factory cell")
    if c_range[0] <= 0:
        raise ModelInputError("consumption range must be positive")
    c1_axis = AxisDef("c1", *c_range, resolution)
    c2_axis = AxisDef("c2", *c_range, resolution)
    c1g, c2g = np.meshgrid(c1_axis.values(), c2_axis.values())
    batch = np.column_stack([c1g.ravel(), c2g.ravel()])
    f, p, ok = _solve_grid(spec, batch)
    shape = c1g.shape
    return OppositionSurfaceResult(
        c1_axis=c1_axis,
        c2_axis=c2_axis,
        f1=f[:, 0].reshape(shape),
        f2=f[:, 1].reshape(shape),
        p1=p[:, 0].reshape(shape),
        p2=p[:, 1].reshape(shape),
        ok=ok.reshape(shape),
    )


@dataclass(frozen=True)
class CapacityMapResult:
    """Total capacity of two identical opposed factories over a consumption grid.

    total = f1 + f2 per cell; totcon = c1 + c2 supports the constant-
    total-consumption contours along which specialization is visible.
    """

    c1_axis: AxisDef
    c2_axis: AxisDef
    f1: np.ndarray
    f2: np.ndarray
    total: np.ndarray
    totcon: np.ndarray
    ok: np.ndarray


def _symmetric_pair(params: FactoryParams, opposition_rate: float) -> CellSpec:
    return CellSpec(
        (params, params),
        np.array([[0.0, opposition_rate], [opposition_rate, 0.0]]),
    )


def capacity_map(
    params: FactoryParams,
    opposition_rate: float = 0.05,
    c_range: tuple[float, float] = (0.1, 1.0),
    resolution: int = 50,
) -> CapacityMapResult:
    """Total-capacity heatmap for a symmetric two-factory cell."""
    if opposition_rate < 0:
        raise ModelInputError("opposition_rate must be >= 0")
    surf = opposition_surface(_symmetric_pair(params, opposition_rate), c_range, resolution)
    c1g, c2g = np.meshgrid(surf.c1_axis.values(), surf.c2_axis.values())
    return CapacityMapResult(
        c1_axis=surf.c1_axis,
        c2_axis=surf.c2_axis,
        f1=surf.f1,
        f2=surf.f2,
        total=surf.f1 + surf.f2,
        totcon=c1g + c2g,
        ok=surf.ok,
    )


def capacity_along_contour(
    params: FactoryParams,
    opposition_rate: float,
    totcon: float,
    n: int = 41,
    c_floor: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """Total capacity sampled along the contour c1 + c2 = totcon.

    Returns (c1 samples, totals). For identical factories with symmetric
    positive opposition the total is minimal at the even split and grows
    toward either specialized end.
    """
    if totcon <= 2 * c_floor:
        raise ModelInputError("totcon too small for the requested floor")
    spec = _symmetric_pair(params, opposition_rate)
    c1 = np.linspace(c_floor, totcon - c_floor, n)
    batch = np.column_stack([c1, totcon - c1])
    f, _, ok = _pair_equilibria_batch(spec, batch)
    if not ok.all():
        raise SolverError("contour solve failed to converge everywhere")
    return c1, f.sum(axis=1)
