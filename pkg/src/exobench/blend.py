"""Blend control: mixing the two single-stance torques.

The raw regressed phase is mapped to a pair of gains summing to one; the
assistive torque is the gain-weighted mix of the two stance compensations
plus the (unblended) friction/ripple terms.  Because the gains are
continuous in the joint angles, the commanded torque is continuous across
stance transitions.

When a gain is exactly zero the corresponding side is skipped entirely, so
a saturated phase reproduces the single-stance torque bit for bit and the
step gets cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .dynamics import (
    ACTUATED_MASK,
    AccelerationEstimator,
    CompensationTables,
    JointState,
    StanceModel,
    blended_torque,
)
from .errors import OutOfOrderFrameError
from .segmentation import GaitRegressor

_ZERO6 = (0.0,) * 6


@dataclass(frozen=True)
class BlendGains:
    """Stance mixing gains; each in [0, 1] and summing to one exactly."""

    gamma_l: float
    gamma_r: float


def gains(raw_phase: float) -> BlendGains:
    """Gains from the raw (unclamped) phase: gamma_l = clamp((p+1)/2)."""
    if raw_phase != raw_phase or raw_phase in (float("inf"), float("-inf")):
        raise ValueError("raw_phase must be finite")
    gl = 0.5 * (raw_phase + 1.0)
    if gl < 0.0:
        gl = 0.0
    elif gl > 1.0:
        gl = 1.0
    return BlendGains(gl, 1.0 - gl)


def blend_gains(raw_phase) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised form of ``gains`` for arrays of raw phase values."""
    raw = np.asarray(raw_phase, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw_phase must be finite")
    gl = np.clip(0.5 * (raw + 1.0), 0.0, 1.0)
    return gl, 1.0 - gl


@dataclass(slots=True)
class AssistCommand:
    """One control-step output.

    ``tau`` covers all six joints; entries for the passive ankles are
    informational only (see ``actuated``).  ``degraded`` marks commands
    issued before the acceleration estimate was ready, with the inertial
    term omitted.
    """

    t: float
    tau: tuple
    raw_phase: float
    gamma_l: float
    gamma_r: float
    degraded: bool
    qd: tuple
    qdd: tuple
    step_time_us: float = 0.0

    actuated = ACTUATED_MASK

    def tau_array(self) -> np.ndarray:
        return np.asarray(self.tau)


def assist(state: JointState, left: StanceModel, right: StanceModel,
           regressor: GaitRegressor, tables: CompensationTables) -> AssistCommand:
    """One-shot assistance evaluation for a fully known joint state."""
    raw = regressor.phase(state.q)
    g = gains(raw)
    tau6 = blended_torque(state.q, state.qd, state.qdd, g.gamma_l, g.gamma_r,
                          left, right, tables)
    return AssistCommand(t=state.t, tau=tuple(tau6), raw_phase=raw,
                         gamma_l=g.gamma_l, gamma_r=g.gamma_r,
                         degraded=False, qd=tuple(state.qd),
                         qdd=tuple(state.qdd))


class ControlLoop:
    """Deterministic single-threaded control pipeline.

    Each step estimates joint velocity/acceleration from the incoming
    angle stream, regresses the gait phase, and emits the blended
    assistance command.  ``blending='hard'`` switches stance models at
    phase zero instead of mixing them; it exists to demonstrate what the
    blend buys and must not be used for assistance.
    """

    def __init__(self, left: StanceModel, right: StanceModel,
                 regressor: GaitRegressor, tables: CompensationTables,
                 rate: float = 5000.0, accel_cutoff_hz: float | None = 20.0,
                 blending: str = "smooth", degraded_policy: str = "gravity"):
        if blending not in ("smooth", "hard"):
            raise ValueError("blending must be 'smooth' or 'hard'")
        if degraded_policy not in ("gravity", "passive"):
            raise ValueError("degraded_policy must be 'gravity' or 'passive'")
        self.left = left
        self.right = right
        self.regressor = regressor
        self.tables = tables
        self.rate = rate
        self.blending = blending
        # while the acceleration estimate warms up: 'gravity' keeps
        # gravity/friction/ripple support active, 'passive' commands zero
        self.degraded_policy = degraded_policy
        self.estimator = AccelerationEstimator(cutoff_hz=accel_cutoff_hz)
        self._last_t = None
        # trigger any one-time kernel compilation outside the timed steps
        blended_torque(_ZERO6, _ZERO6, _ZERO6, 0.5, 0.5, left, right, tables)

    def reset(self):
        self.estimator.reset()
        self._last_t = None

    def step(self, frame) -> AssistCommand:
        """Process one sensor frame; raises OutOfOrderFrameError on a
        timestamp regression (the frame must be dropped)."""
        t0 = perf_counter()
        t = frame.t
        last = self._last_t
        if last is not None and t <= last:
            raise OutOfOrderFrameError(
                f"frame at t={t} after t={last}")
        q = frame.q
        qd, qdd = self.estimator.push(t, q)
        degraded = qdd is None
        if qd is None:
            qd = _ZERO6
        if qdd is None:
            qdd = _ZERO6
        raw = self.regressor.phase(q)
        if self.blending == "smooth":
            gl = 0.5 * (raw + 1.0)
            if gl < 0.0:
                gl = 0.0
            elif gl > 1.0:
                gl = 1.0
        else:
            gl = 1.0 if raw >= 0.0 else 0.0
        gr = 1.0 - gl
        if degraded and self.degraded_policy == "passive":
            tau6 = _ZERO6
        else:
            tau6 = blended_torque(q, qd, qdd, gl, gr, self.left, self.right,
                                  self.tables)
        self._last_t = t
        cmd = AssistCommand(t=t, tau=tuple(tau6), raw_phase=raw, gamma_l=gl,
                            gamma_r=gr, degraded=degraded, qd=tuple(qd),
                            qdd=tuple(qdd))
        cmd.step_time_us = (perf_counter() - t0) * 1e6
        return cmd
