"""Closed-form analysis: nullclines, equilibria, linearization, stability.

For a single factory/product pair with rates (g, k, r, i) and consumption
rate c, writing p_inf = g/k and p_lim = r/i:

  factory nullclines:  P = p_inf  and  F = 0
  product nullcline:   F(P) = c*P / (r - i*P),  a pole at P = p_lim

Their intersection is the unique nonzero equilibrium

  p* = p_inf,   f* = c*g / (k*r - i*g)

which exists in the positive quadrant iff p_inf < p_lim (the stability
criterion). The Jacobian there has trace -c*k*r/(k*r - i*g) < 0 and
determinant c*g > 0, so the equilibrium is always attracting when it
exists; the discriminant trace^2 - 4*det separates monotone (node) from
damped-oscillatory (spiral) approach. The origin has trace g - c and
determinant -c*g < 0: a saddle for every positive c, which pushes the flow
into the positive quadrant.

The factory equilibrium is computed as c*g/(k*r - i*g) rather than the
algebraically equal (c/r)/(k/g - i/r): the former needs one subtraction of
exactly-representable products and is exact for round benchmark values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelInputError, NonPhysicalEquilibriumError, SolverError
from .model import CellSpec, FactoryParams, flow_field

__all__ = [
    "EquilibriumReport",
    "NullclineSet",
    "MultiEquilibrium",
    "ConvergenceRecord",
    "VectorFieldGrid",
    "STABLE_NODE",
    "STABLE_SPIRAL",
    "UNSTABLE",
    "SADDLE",
    "NON_PHYSICAL",
    "single_equilibrium",
    "multi_equilibrium",
    "jacobian_metrics",
    "classify",
    "classify_linearization",
    "nullclines",
    "vector_field",
]

STABLE_NODE = "stable-node"
STABLE_SPIRAL = "stable-spiral"
UNSTABLE = "unstable"
SADDLE = "saddle"
NON_PHYSICAL = "non-physical"


def _check_consumption(c: float) -> float:
    c = float(c)
    if not math.isfinite(c) or c < 0:
        raise ModelInputError(f"consumption must be finite and >= 0, got {c!r}")
    return c


def single_equilibrium(params: FactoryParams, consumption: float) -> tuple[float, float]:
    """The nonzero equilibrium (f*, p*) of a single factory under constant consumption.

    Raises NonPhysicalEquilibriumError when the stability criterion fails
    (the closed form would be negative or divide by zero). consumption = 0
    returns the limit value f* = 0.
    """
    c = _check_consumption(consumption)
    gap = params.growth_inhibition * params.production - params.production_inhibition * params.growth
    if gap <= 0.0:
        raise NonPhysicalEquilibriumError(params.p_inf, params.p_lim)
    return c * params.growth / gap, params.p_inf


def jacobian_metrics(
    params: FactoryParams, consumption: float, at: str = "equilibrium"
) -> tuple[float, float, float]:
    """(trace, determinant, discriminant) of the Jacobian at a fixed point.

    ``at`` is "equilibrium" (the nonzero equilibrium; requires the
    stability criterion) or "origin" (always defined, always a saddle for
    c > 0 since its determinant is -c*growth).
    """
    c = _check_consumption(consumption)
    g = params.growth
    if at == "origin":
        trace = g - c
        det = -c * g
    elif at == "equilibrium":
        gap = params.growth_inhibition * params.production - params.production_inhibition * g
        if gap <= 0.0:
            raise NonPhysicalEquilibriumError(params.p_inf, params.p_lim)
        trace = -c * params.growth_inhibition * params.production / gap
        det = c * g
    else:
        raise ModelInputError(f"at must be 'equilibrium' or 'origin', got {at!r}")
    return trace, det, trace * trace - 4.0 * det


def classify_linearization(trace: float, det: float, discriminant: float) -> str:
    """Stability class of a planar fixed point from its trace/determinant."""
    if det < 0.0:
        return SADDLE
    if trace < 0.0 < det:
        return STABLE_NODE if discriminant >= 0.0 else STABLE_SPIRAL
    return UNSTABLE


@dataclass(frozen=True)
class EquilibriumReport:
    """Equilibrium location plus linearization metrics and stability class."""

    f_star: float
    p_star: float
    trace: float
    det: float
    discriminant: float
    stability_class: str

    def to_dict(self) -> dict:
        def _num(x: float):
            return None if (isinstance(x, float) and math.isnan(x)) else x

        return {
            "f_star": _num(self.f_star),
            "p_star": _num(self.p_star),
            "trace": _num(self.trace),
            "det": _num(self.det),
            "discriminant": _num(self.discriminant),
            "class": self.stability_class,
        }


def classify(params: FactoryParams, consumption: float) -> EquilibriumReport:
    """Classify the nonzero equilibrium of a single factory.

    Violation of the stability criterion is encoded as class
    "non-physical" with NaN metrics rather than an exception, so parameter
    sweeps can record it as data.
    """
    c = _check_consumption(consumption)
    if not params.stable:
        return EquilibriumReport(math.nan, params.p_inf, math.nan, math.nan, math.nan, NON_PHYSICAL)
    f_star, p_star = single_equilibrium(params, c)
    trace, det, disc = jacobian_metrics(params, c, at="equilibrium")
    return EquilibriumReport(f_star, p_star, trace, det, disc, classify_linearization(trace, det, disc))


@dataclass(frozen=True)
class NullclineSet:
    """Sampled nullclines of the single-factory phase plane.

    factory_level: the horizontal factory nullcline P = p_inf.
    The second factory nullcline is the axis F = 0.
    product_p/product_f: samples of the product nullcline F(P) on [0, p_lim).
    """

    factory_level: float
    product_p: np.ndarray
    product_f: np.ndarray


def nullclines(
    params: FactoryParams, consumption: float, p_samples=None, n: int = 201
) -> NullclineSet:
    """Sample the nullclines; sample points must stay below the pole p_lim."""
    c = _check_consumption(consumption)
    p_lim = params.p_lim
    if p_samples is None:
        p_samples = np.linspace(0.0, p_lim * (n - 1) / n, n)
    p = np.atleast_1d(np.asarray(p_samples, dtype=float))
    if np.any(p < 0.0) or np.any(p >= p_lim):
        raise ModelInputError(f"product samples must lie in [0, {p_lim:g})")
    f = c * p / (params.production - params.production_inhibition * p)
    return NullclineSet(params.p_inf, p, f)


@dataclass(frozen=True)
class VectorFieldGrid:
    """(dF, dP) sampled on the tensor grid f_values x p_values.

    df[i, j] and dp[i, j] are the derivatives at (f_values[i], p_values[j]).
    """

    f_values: np.ndarray
    p_values: np.ndarray
    df: np.ndarray
    dp: np.ndarray


def vector_field(params: FactoryParams, consumption: float, f_values, p_values) -> VectorFieldGrid:
    """Sample the raw vector field over an (F, P) grid for phase portraits."""
    c = _check_consumption(consumption)
    f_values = np.atleast_1d(np.asarray(f_values, dtype=float))
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    ff, pp = np.meshgrid(f_values, p_values, indexing="ij")
    spec = CellSpec.single(params)
    df, dp = flow_field(spec, ff[..., None], pp[..., None], c)
    return VectorFieldGrid(f_values, p_values, df[..., 0], dp[..., 0])


@dataclass(frozen=True)
class ConvergenceRecord:
    """How the multi-factory equilibrium was obtained."""

    iterations: int
    residual: float
    residual_history: tuple[float, ...]
    used_fallback: bool
    extinguished: tuple[int, ...]
    flow_residual: float


@dataclass(frozen=True)
class MultiEquilibrium:
    f_star: np.ndarray
    p_star: np.ndarray
    record: ConvergenceRecord


def _fixed_point_map(
    spec: CellSpec, f_min: np.ndarray, f: np.ndarray, active: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One application of the steady-state map; returns (next_f, net_growth)."""
    g, k, r, i = spec.rate_arrays()
    net_growth = g - spec.opposition @ f
    nxt = np.zeros_like(f)
    ok = active & (net_growth > 0.0)
    denom = k[ok] / net_growth[ok] - i[ok] / r[ok]
    nxt[ok] = f_min[ok] / denom
    return nxt, net_growth


def multi_equilibrium(
    spec: CellSpec,
    consumption,
    *,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10000,
    history_tail: int = 20,
) -> MultiEquilibrium:
    """Coupled steady state of an N-factory cell under a constant consumption vector.

    Solves the implicit system

        F_i = f_min_i / (k_i / (g_i - sum_j O_ij F_j) - 1/p_lim_i)
        P_i = (g_i - sum_j O_ij F_j) / k_i

    by damped fixed-point iteration. If an iterate drives some factory's
    net growth to zero or below, that factory is extinguished (F_i = 0,
    and P_i = 0 when its product is being consumed) and the reduced system
    is re-solved; the F_i = 0 plane is invariant, so these are genuine
    equilibria. If iteration stalls, a steady-state simulation seeds a
    fresh attempt. Factories with zero consumption get F_i = 0 with P_i at
    the product nullcline level: with no consumption every point of the
    F_i = 0 axis is steady, and the nullcline value is the canonical
    representative.

    The returned point is always cross-checked by evaluating the flow on
    it; the maximum component ends up in ``record.flow_residual``.
    """
    c = np.atleast_1d(np.asarray(consumption, dtype=float))
    if c.shape != (spec.n,):
        raise ModelInputError(
            f"consumption must have shape ({spec.n},), got {c.shape}"
        )
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ModelInputError("consumption rates must be finite and >= 0")
    for idx, fac in enumerate(spec.factories):
        if not fac.stable:
            raise NonPhysicalEquilibriumError(fac.p_inf, fac.p_lim)

    g, k, r, i = spec.rate_arrays()
    f_min = c / r

    def solve_from(f0: np.ndarray, active: np.ndarray):
        f = f0.copy()
        f[~active] = 0.0
        history: list[float] = []
        for it in range(1, max_iter + 1):
            nxt, net_growth = _fixed_point_map(spec, f_min, f, active)
            dying = active & (net_growth <= 0.0)
            if np.any(dying):
                # extinguish the most suppressed factory and restart reduced
                worst = int(np.argmin(np.where(dying, net_growth, np.inf)))
                return None, worst, history
            residual = float(np.max(np.abs(nxt - f))) if np.any(active) else 0.0
            history.append(residual)
            f = (1.0 - damping) * f + damping * nxt
            if residual < tol:
                return f, None, history
        return None, None, history

    active = c > 0.0
    extinguished: list[int] = []
    used_fallback = False
    f0 = np.zeros(spec.n)
    gap = k * r - i * g
    f0[active] = c[active] * g[active] / gap[active]  # unopposed equilibria as seed

    history: list[float] = []
    f_star = None
    for _ in range(spec.n + 1):
        f_star, casualty, history = solve_from(f0, active)
        if f_star is not None:
            break
        if casualty is None:
            break  # stalled, not extinct: try the simulation fallback
        extinguished.append(casualty)
        active = active.copy()
        active[casualty] = False

    if f_star is None:
        from .dynamics import IntegratorConfig, run_to_steady
        from .model import CellState

        used_fallback = True
        start = CellState(np.where(active, np.maximum(f0, 1e-3), 0.0), g / k)
        cfg = IntegratorConfig(step=0.01, steady_tol=1e-11, max_time=5000.0)
        try:
            steady, _ = run_to_steady(spec, start, c, cfg)
        except Exception as exc:
            raise SolverError(
                f"fixed-point iteration stalled and the simulation fallback failed: {exc}",
                history,
            ) from exc
        active = active & (steady.factory > 1e-8)
        f_star, casualty, history2 = solve_from(np.asarray(steady.factory), active)
        history = history + history2
        if f_star is None:
            raise SolverError(
                "no convergence after fixed-point iteration plus simulation fallback",
                history,
            )

    net_growth = g - spec.opposition @ f_star
    p_star = np.where(c > 0.0, np.where(f_star > 0.0, net_growth / k, 0.0), net_growth / k)

    df, dp = flow_field(spec, f_star, p_star, c)
    flow_residual = float(max(np.max(np.abs(df)), np.max(np.abs(dp))))
    if flow_residual > 1e-7:
        raise SolverError(
            f"equilibrium cross-check failed: flow residual {flow_residual:.3e}", history
        )
    record = ConvergenceRecord(
        iterations=len(history),
        residual=history[-1] if history else 0.0,
        residual_history=tuple(history[-history_tail:]),
        used_fallback=used_fallback,
        extinguished=tuple(sorted(extinguished)),
        flow_residual=flow_residual,
    )
    return MultiEquilibrium(f_star, p_star, record)
