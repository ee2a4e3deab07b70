"""Unicycle kinematics: pose/twist types, the oscillatory angular-velocity
profile, angle normalization, and the fixed-step integrator.

Integration order is orientation-first: theta is advanced and normalized,
then the position update uses the new heading. The harness' fine-step
oracle integrates the same way, so refinement comparisons are apples to
apples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi).

    Mathematically identical to ((theta + pi) mod 2*pi) - pi with a
    non-negative mod; implemented via the IEEE-exact remainder so the
    half-open range holds for every finite input (float ``%`` can round
    up to the divisor for tiny negative dividends). pi maps to -pi.
    """
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    r = math.remainder(theta, math.tau)
    if r >= math.pi:
        r -= math.tau
    elif r < -math.pi:  # unreachable for IEEE remainder; guards the contract
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose:
    """Planar pose (meters, meters, radians). theta is always in [-pi, pi)."""
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose position must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def distance_to(self, x: float, y: float) -> float:
        return math.hypot(self.x - x, self.y - y)


@dataclass(frozen=True)
class Twist:
    """Commanded linear (m/s) and angular (rad/s) velocity."""
    linear: float = 0.0
    angular: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.linear) and math.isfinite(self.angular)):
            raise ValueError("twist components must be finite")


@dataclass(frozen=True)
class OscillatorParams:
    """Damped-sinusoid angular velocity: amplitude (rad/s), damping (1/s),
    onset shift (s), period (s), constant bias (rad/s)."""
    amplitude: float
    damping: float
    onset: float
    period: float
    bias: float = 0.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be > 0")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")


@dataclass(frozen=True)
class SimClock:
    """Fixed-step clock; time is tick * dt by construction, never a float sum."""
    tick: int = 0
    dt: float = 0.05

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    @property
    def t(self) -> float:
        return self.tick * self.dt

    def advanced(self) -> "SimClock":
        return SimClock(self.tick + 1, self.dt)


def oscillatory_omega(params: OscillatorParams, t: float) -> float:
    """Angular velocity at time t:
    amplitude * exp(-damping*t) * sin(2*pi*(t - onset)/period) + bias.
    """
    return (params.amplitude
            * math.exp(-params.damping * t)
            * math.sin(math.tau * (t - params.onset) / params.period)
            + params.bias)


def integrate_step(pose: Pose, cmd: Twist, dt: float) -> Pose:
    """One fixed step: heading first (wrapped), then position along the
    new heading."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    theta = normalize_angle(pose.theta + cmd.angular * dt)
    x = pose.x + cmd.linear * math.cos(theta) * dt
    y = pose.y + cmd.linear * math.sin(theta) * dt
    return Pose(x, y, theta)


def clamp_twist(cmd: Twist, v_max: float, omega_max: float) -> tuple[Twist, bool]:
    """Clamp to the configured limits; second value reports whether it changed."""
    v = max(-v_max, min(v_max, cmd.linear))
    w = max(-omega_max, min(omega_max, cmd.angular))
    if v == cmd.linear and w == cmd.angular:
        return cmd, False
    return Twist(v, w), True
