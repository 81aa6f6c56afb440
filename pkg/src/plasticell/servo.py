"""Single-joint servo demo: a proportional gain that grows with demand.

The joint's position controller uses the factory quantity F as its
proportional gain on the angular error, the product P as the available
torque reserve, and the magnitude of the torque actually applied as the
consumption rate driving the plasticity model:

    inertia * angular_accel = applied + perturbation - damping * velocity
    applied = F * (reference - angle), magnitude-capped per step
    consumption = |applied|

Under a sustained external load the steady applied torque must cancel the
load, so consumption equals the load magnitude and the steady gain scales
with it: heavier loads stiffen the joint, lighter loads relax it. Brief
disturbances are absorbed by the product reserve and barely move the
gain, mirroring the cell model's short-pulse behaviour.

The per-step torque cap (|applied| <= 1/step) bounds the product drawn in
one integration step by the product currently available, which keeps
P >= 0 even under absurd gains; with the default parameters it never
engages. The consumption rate is the torque actually applied, not the
torque the controller wanted; the unmet remainder is simply never drawn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorConfig
from .errors import DivergenceError, ModelInputError
from .model import FactoryParams

__all__ = ["JointSpec", "ServoTrajectory", "simulate_joint"]


@dataclass(frozen=True)
class JointSpec:
    """A rotational joint with a plasticity-governed proportional gain.

    perturbation is a piecewise-constant external torque schedule
    ((start_time, torque), ...), first segment at t=0; torques may have
    either sign. initial_gain/initial_product seed the plasticity state
    (product defaults to its consumption-independent equilibrium level).
    """

    inertia: float = 1.0
    damping: float = 0.5
    reference_angle: float = 0.0
    perturbation: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    plasticity: FactoryParams = FactoryParams(1.0, 1.0, 1.1, 1.0)
    initial_angle: float | None = None
    initial_gain: float = 0.5
    initial_product: float | None = None

    def __post_init__(self):
        if not (self.inertia > 0):
            raise ModelInputError(f"inertia must be > 0, got {self.inertia!r}")
        if self.damping < 0:
            raise ModelInputError(f"damping must be >= 0, got {self.damping!r}")
        segs = tuple((float(t), float(tq)) for t, tq in self.perturbation)
        if not segs or segs[0][0] != 0.0:
            raise ModelInputError("perturbation schedule must start at t=0")
        starts = [t for t, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ModelInputError("perturbation start times must strictly increase")
        if not (self.initial_gain > 0):
            raise ModelInputError("initial_gain must be > 0")
        object.__setattr__(self, "perturbation", segs)

    def torque_at(self, t: float) -> float:
        out = self.perturbation[0][1]
        for start, tq in self.perturbation:
            if t >= start:
                out = tq
            else:
                break
        return out


@dataclass(frozen=True)
class ServoTrajectory:
    times: np.ndarray
    angle: np.ndarray
    velocity: np.ndarray
    gain: np.ndarray
    product: np.ndarray
    torque_applied: np.ndarray
    torque_perturbation: np.ndarray
    consumption: np.ndarray


def simulate_joint(
    spec: JointSpec, duration: float, cfg: IntegratorConfig = IntegratorConfig()
) -> ServoTrajectory:
    """Co-integrate joint mechanics with the plasticity model.

    Fixed-step 4th-order integration of (angle, velocity, gain, product);
    perturbation segment boundaries restart the step grid exactly. Samples
    every cfg.output_stride steps plus each segment boundary.
    """
    if not (duration > 0):
        raise ModelInputError("duration must be > 0")
    pl = spec.plasticity
    g, k, r, i = pl.growth, pl.growth_inhibition, pl.production, pl.production_inhibition
    theta_ref = spec.reference_angle
    cap = 1.0 / cfg.step

    def applied_torque(theta: float, gain: float, product: float) -> float:
        desired = gain * (theta_ref - theta)
        limit = min(cap, product / cfg.step)
        return float(np.clip(desired, -limit, limit))

    def rhs(y, tq_ext):
        theta, omega, gain, product = y
        tau = applied_torque(theta, gain, product)
        c = abs(tau)
        return np.array(
            [
                omega,
                (tau + tq_ext - spec.damping * omega) / spec.inertia,
                (g - k * product) * gain,
                (r - i * product) * gain - c * product,
            ]
        )

    y = np.array(
        [
            theta_ref if spec.initial_angle is None else spec.initial_angle,
            0.0,
            spec.initial_gain,
            pl.p_inf if spec.initial_product is None else spec.initial_product,
        ]
    )
    if y[3] < 0:
        raise ModelInputError("initial_product must be >= 0")

    boundaries = [0.0] + [t for t, _ in spec.perturbation if 0.0 < t < duration] + [duration]
    h0 = cfg.step

    def sample(t, y, tq):
        times.append(t)
        rows.append(y.copy())
        torque_rows.append((applied_torque(y[0], y[2], y[3]), tq))

    times: list[float] = []
    rows: list[np.ndarray] = []
    torque_rows: list[tuple[float, float]] = []
    sample(0.0, y, spec.torque_at(0.0))

    for a, b in zip(boundaries, boundaries[1:]):
        tq = spec.torque_at(a)
        n_full = int(np.floor((b - a) / h0 + 1e-9))
        rem = (b - a) - n_full * h0
        steps = [h0] * n_full + ([rem] if rem > 1e-9 * max(1.0, b - a) else [])
        for idx, h in enumerate(steps):
            last = idx == len(steps) - 1
            t = b if last else a + (idx + 1) * h0
            k1 = rhs(y, tq)
            k2 = rhs(y + 0.5 * h * k1, tq)
            k3 = rhs(y + 0.5 * h * k2, tq)
            k4 = rhs(y + h * k3, tq)
            y = y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
            if not np.all(np.isfinite(y)):
                raise DivergenceError(t, rows[-1][2], rows[-1][3])
            if y[3] < 0.0:
                if y[3] < -1e-12:
                    raise ModelInputError(
                        f"product went negative ({y[3]:.3e}) at t={t:.6g}; reduce the step"
                    )
                y[3] = 0.0
            if last or (idx + 1) % cfg.output_stride == 0:
                sample(t, y, spec.torque_at(t))

    arr = np.vstack(rows)
    torque = np.array(torque_rows)
    return ServoTrajectory(
        times=np.array(times),
        angle=arr[:, 0],
        velocity=arr[:, 1],
        gain=arr[:, 2],
        product=arr[:, 3],
        torque_applied=torque[:, 0],
        torque_perturbation=torque[:, 1],
        consumption=np.abs(torque[:, 0]),
    )
