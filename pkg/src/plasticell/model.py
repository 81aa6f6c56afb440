"""Core activator-inhibitor cell model.

A cell hosts one or more factory/product pairs. The factory quantity F is
the activator: it self-replicates and synthesizes its product. The product
quantity P is the inhibitor: it slows both factory growth and its own
synthesis, and the environment consumes it at a rate proportional to its
level. For a single pair under consumption rate c:

    dF/dt = (growth - growth_inhibition * P) * F
    dP/dt = (production - production_inhibition * P) * F - c * P

With several pairs in one cell, factory j additionally suppresses the net
growth of factory i at rate ``opposition[i, j] * F_j``, modelling
competition for shared resources inside the cell:

    dF_i/dt = (growth_i - growth_inhibition_i * P_i
               - sum_j opposition[i, j] * F_j) * F_i

All quantities are dimensionless; nominal units (e.g. "product/time") are
noted in field docs purely as a reading aid. Every type is an immutable
value and every operation is a pure function, so everything here is safe
to use from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelInputError

__all__ = [
    "FactoryParams",
    "DerivedParams",
    "CellSpec",
    "CellState",
    "StimulusProfile",
    "ValidationIssue",
    "ValidationReport",
    "derivative",
    "flow_field",
    "derived_params",
    "params_from_levels",
    "validate",
]


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ModelInputError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class FactoryParams:
    """Intrinsic rates of one factory/product pair.

    Fields (in constructor order):
      growth: factory self-replication rate (1/time).
      growth_inhibition: rate at which product suppresses factory growth
        (1/(product*time)).
      production: product synthesis rate (product/(factory*time)).
      production_inhibition: rate at which product suppresses its own
        synthesis (1/(factory*time), scaled per product).

    All four rates must be strictly positive; the constructor rejects
    anything else. The stability criterion (steady product level below the
    limit product level, i.e. growth/growth_inhibition <
    production/production_inhibition) is *not* enforced at construction:
    parameter sets violating it are legal objects, flagged via ``stable``,
    so that the non-physical regime can be analysed and classified.
    """

    growth: float
    growth_inhibition: float
    production: float
    production_inhibition: float

    def __post_init__(self):
        _require_positive("growth", self.growth)
        _require_positive("growth_inhibition", self.growth_inhibition)
        _require_positive("production", self.production)
        _require_positive("production_inhibition", self.production_inhibition)

    @property
    def p_inf(self) -> float:
        """Steady product level growth/growth_inhibition (environment-independent)."""
        return self.growth / self.growth_inhibition

    @property
    def p_lim(self) -> float:
        """Limit product level production/production_inhibition (nullcline pole)."""
        return self.production / self.production_inhibition

    @property
    def stable(self) -> bool:
        """True when the steady product level lies strictly below the limit level."""
        return self.p_inf < self.p_lim

    def f_min(self, consumption: float) -> float:
        """Minimum factory quantity able to sustain the given consumption rate."""
        if consumption < 0:
            raise ModelInputError(f"consumption must be >= 0, got {consumption!r}")
        return consumption / self.production


@dataclass(frozen=True)
class DerivedParams:
    """Reduced parameter set (p_inf, p_lim, f_min).

    p_inf: steady product level, growth/growth_inhibition.
    p_lim: limit product level, production/production_inhibition.
    f_min: minimum factory quantity for the given consumption, c/production.
    """

    p_inf: float
    p_lim: float
    f_min: float

    @property
    def stable(self) -> bool:
        return self.p_inf < self.p_lim


def derived_params(params: FactoryParams, consumption: float) -> DerivedParams:
    """Map intrinsic rates plus a consumption rate to (p_inf, p_lim, f_min)."""
    return DerivedParams(params.p_inf, params.p_lim, params.f_min(consumption))


def params_from_levels(p_inf: float, p_lim: float) -> FactoryParams:
    """Reconstruct intrinsic rates from (p_inf, p_lim) under the unit normalization.

    Uses growth = production = 1, so growth_inhibition = 1/p_inf and
    production_inhibition = 1/p_lim; with production = 1 a consumption rate
    equals the corresponding f_min numerically.
    """
    _require_positive("p_inf", p_inf)
    _require_positive("p_lim", p_lim)
    return FactoryParams(1.0, 1.0 / p_inf, 1.0, 1.0 / p_lim)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CellSpec:
    """A full cell: N factory/product pairs plus the opposition matrix.

    ``opposition[i, j]`` is the rate at which factory j suppresses factory
    i's net growth (1/(factory*time)). Off-diagonal entries must be
    nonnegative and the diagonal must be exactly zero. A single-factory
    cell has a 1x1 zero matrix and reduces exactly to the two-equation
    model.
    """

    factories: tuple[FactoryParams, ...]
    opposition: np.ndarray
    _rates: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] = field(
        init=False, repr=False, compare=False
    )
    _opposed: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factories = tuple(self.factories)
        if not factories:
            raise ModelInputError("a cell needs at least one factory")
        for f in factories:
            if not isinstance(f, FactoryParams):
                raise ModelInputError(f"factories must be FactoryParams, got {type(f).__name__}")
        n = len(factories)
        opp = np.asarray(self.opposition, dtype=float)
        if opp.shape != (n, n):
            raise ModelInputError(
                f"opposition must be an {n}x{n} matrix, got shape {opp.shape}"
            )
        if not np.all(np.isfinite(opp)):
            raise ModelInputError("opposition entries must be finite")
        if np.any(np.diag(opp) != 0.0):
            raise ModelInputError("opposition diagonal must be exactly zero")
        if np.any(opp < 0.0):
            raise ModelInputError("opposition entries must be nonnegative")
        opp = _readonly(opp.copy())
        object.__setattr__(self, "factories", factories)
        object.__setattr__(self, "opposition", opp)
        rates = tuple(
            _readonly(np.array([getattr(f, name) for f in factories], dtype=float))
            for name in ("growth", "growth_inhibition", "production", "production_inhibition")
        )
        object.__setattr__(self, "_rates", rates)
        object.__setattr__(self, "_opposed", bool(np.any(opp > 0.0)))

    @classmethod
    def single(cls, params: FactoryParams) -> "CellSpec":
        return cls((params,), np.zeros((1, 1)))

    @property
    def n(self) -> int:
        return len(self.factories)

    def rate_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(growth, growth_inhibition, production, production_inhibition) vectors."""
        return self._rates


@dataclass(frozen=True)
class CellState:
    """Instantaneous factory and product quantities, both componentwise >= 0."""

    factory: np.ndarray
    product: np.ndarray

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.factory, dtype=float))
        p = np.atleast_1d(np.asarray(self.product, dtype=float))
        if f.ndim != 1 or p.ndim != 1 or f.shape != p.shape:
            raise ModelInputError(
                f"factory and product must be equal-length vectors, got {f.shape} and {p.shape}"
            )
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(p))):
            raise ModelInputError("state components must be finite")
        if np.any(f < 0.0) or np.any(p < 0.0):
            raise ModelInputError("negative factory/product quantities are not meaningful")
        object.__setattr__(self, "factory", _readonly(f.copy()))
        object.__setattr__(self, "product", _readonly(p.copy()))

    @property
    def n(self) -> int:
        return self.factory.shape[0]


@dataclass(frozen=True)
class StimulusProfile:
    """Piecewise-constant consumption schedule, one segment list per factory.

    ``segments[i]`` is an ordered tuple of (start_time, rate) pairs for
    factory i; the first segment must start at t=0, start times must be
    strictly increasing, and rates must be nonnegative (the environment
    can only consume, never supply product). Each rate applies on
    [start, next_start), the last one up to ``horizon``.
    """

    segments: tuple[tuple[tuple[float, float], ...], ...]
    horizon: float

    def __post_init__(self):
        horizon = float(self.horizon)
        if not np.isfinite(horizon) or horizon <= 0:
            raise ModelInputError(f"horizon must be positive, got {horizon!r}")
        cleaned = []
        for idx, seg_list in enumerate(self.segments):
            segs = tuple((float(t), float(c)) for t, c in seg_list)
            if not segs:
                raise ModelInputError(f"factory {idx}: needs at least one stimulus segment")
            if segs[0][0] != 0.0:
                raise ModelInputError(f"factory {idx}: first segment must start at t=0")
            starts = [t for t, _ in segs]
            if any(b <= a for a, b in zip(starts, starts[1:])):
                raise ModelInputError(f"factory {idx}: segment start times must strictly increase")
            if any(c < 0 for _, c in segs):
                raise ModelInputError(f"factory {idx}: consumption rates must be >= 0")
            if starts[-1] >= horizon:
                raise ModelInputError(f"factory {idx}: segment starts at or past the horizon")
            cleaned.append(segs)
        object.__setattr__(self, "segments", tuple(cleaned))
        object.__setattr__(self, "horizon", horizon)

    @classmethod
    def constant(cls, rates, horizon: float) -> "StimulusProfile":
        rates = np.atleast_1d(np.asarray(rates, dtype=float))
        return cls(tuple(((0.0, float(c)),) for c in rates), horizon)

    @property
    def n(self) -> int:
        return len(self.segments)

    def rates_at(self, t: float) -> np.ndarray:
        """Consumption vector at time t (right-continuous step function)."""
        out = np.empty(self.n)
        for i, segs in enumerate(self.segments):
            rate = segs[0][1]
            for start, c in segs:
                if t >= start:
                    rate = c
                else:
                    break
            out[i] = rate
        return out

    def breakpoints(self) -> np.ndarray:
        """Sorted unique segment starts in (0, horizon)."""
        starts = {t for segs in self.segments for t, _ in segs if 0.0 < t < self.horizon}
        return np.array(sorted(starts))


def flow_field(spec: CellSpec, factory, product, consumption) -> tuple[np.ndarray, np.ndarray]:
    """Raw model vector field, defined for arbitrary real inputs.

    Broadcasts over leading axes: inputs of shape (..., N) yield
    (dF, dP) of shape (..., N). The model's meaningful domain is the
    nonnegative quadrant; this function performs no sign checks so that
    integrator stages and numerical Jacobians may probe freely. Use
    :func:`derivative` for the checked entry point.
    """
    f = np.asarray(factory, dtype=float)
    p = np.asarray(product, dtype=float)
    c = np.asarray(consumption, dtype=float)
    g, k, r, i = spec._rates
    if spec._opposed:
        suppression = np.einsum("ij,...j->...i", spec.opposition, f)
        df = (g - k * p - suppression) * f
    else:
        df = (g - k * p) * f
    dp = (r - i * p) * f - c * p
    return df, dp


def derivative(spec: CellSpec, state: CellState, consumption) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (dF/dt, dP/dt) of a cell state under a consumption vector.

    Rejects dimension mismatches and negative consumption rates; state
    nonnegativity is already guaranteed by CellState.
    """
    c = np.atleast_1d(np.asarray(consumption, dtype=float))
    if state.n != spec.n or c.shape != (spec.n,):
        raise ModelInputError(
            f"dimension mismatch: spec has {spec.n} factories, state has {state.n}, "
            f"consumption has shape {c.shape}"
        )
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ModelInputError("consumption rates must be finite and >= 0")
    return flow_field(spec, state.factory, state.product, c)


@dataclass(frozen=True)
class ValidationIssue:
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of structural/parametric checks on a cell spec."""

    issues: tuple[ValidationIssue, ...]
    factory_stable: tuple[bool, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "factory_stable": list(self.factory_stable),
            "issues": [{"location": i.location, "message": i.message} for i in self.issues],
        }


def validate(spec: CellSpec) -> ValidationReport:
    """Check every factory against the model constraints.

    Rate positivity and opposition shape/sign are enforced by the
    constructors, so the report re-affirms those and focuses on the
    stability criterion, which constructors deliberately leave soft.
    Equality of the steady and limit product levels is reported as a
    violation: the closed-form equilibrium divides by their gap.

    The empirical response-ordering check (factory slower than product)
    requires simulating a consumption step; see
    ``experiments.check_response_ordering``.
    """
    issues: list[ValidationIssue] = []
    stable_flags: list[bool] = []
    for idx, f in enumerate(spec.factories):
        stable_flags.append(f.stable)
        if not f.stable:
            rel = "equals" if f.p_inf == f.p_lim else "exceeds"
            issues.append(
                ValidationIssue(
                    f"factories[{idx}]",
                    f"stability criterion violated: steady product level {f.p_inf:.6g} "
                    f"{rel} limit product level {f.p_lim:.6g}",
                )
            )
    return ValidationReport(tuple(issues), tuple(stable_flags))
