"""Synthetic gait generation and closed-loop replay.

Joint trajectories are sinusoid templates with the two legs half a cycle
apart; the knee carries second- and third-harmonic content so a linear
phase regressor has the features it needs.  Sole loads follow a flat-top
profile whose transitions span the double-support fraction of the cycle,
so the load-share label moves smoothly between -1 and +1.

Everything is reproducible from an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .blend import AssistCommand, ControlLoop
from .errors import OutOfOrderFrameError
from .streams import SensorStream

TREADMILL_SPEEDS_KMH = (1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class GaitPattern:
    """Parameters of the synthetic gait templates.

    ``cadence`` is in steps/min (one cycle = two steps).  Amplitudes are
    radians; the knee waveform is flexion-only.  ``double_support_fraction``
    is the fraction of the cycle spent with both feet loaded.
    """

    cadence: float = 100.0
    hip_amplitude: float = 0.32
    knee_amplitude: float = 0.42
    ankle_amplitude: float = 0.14
    hip_phase: float = -0.4 * math.pi
    ankle_phase: float = 0.25 * math.pi
    knee_stance_fraction: float = 0.25   # 2nd harmonic, relative to knee_amplitude
    knee_stance_phase: float = 0.6
    knee_third_fraction: float = 0.18    # 3rd harmonic, relative to knee_amplitude
    hip_offset: float = 0.05
    knee_offset: float = 0.62
    double_support_fraction: float = 0.36
    treadmill_speed: float = 2.0
    total_load: float = 750.0            # body + device weight on the soles, N
    angle_noise: float = 0.004           # rad, 1 sigma
    load_noise: float = 4.0              # N, 1 sigma

    def __post_init__(self):
        if self.cadence <= 0:
            raise ValueError("cadence must be positive")
        if not 0.0 <= self.double_support_fraction <= 0.4:
            raise ValueError("double_support_fraction must lie in [0, 0.4]")
        if abs(self.hip_offset) + self.hip_amplitude > 0.7:
            raise ValueError("hip excursion exceeds the 0.7 rad bound")
        k_osc = self.knee_amplitude * (1.0 + self.knee_stance_fraction
                                       + self.knee_third_fraction)
        if self.knee_offset - k_osc < 0 or self.knee_offset + k_osc > 1.3:
            raise ValueError("knee waveform leaves the [0, 1.3] rad flexion range")
        if self.treadmill_speed <= 0:
            raise ValueError("treadmill_speed must be positive")
        if self.total_load <= 0:
            raise ValueError("total_load must be positive")
        if self.angle_noise < 0 or self.load_noise < 0:
            raise ValueError("noise levels must be non-negative")

    @property
    def cycle_duration(self) -> float:
        """Seconds per full gait cycle (two steps)."""
        return 120.0 / self.cadence

    def at_speed(self, speed_kmh: float) -> "GaitPattern":
        """Same templates, cadence scaled linearly with treadmill speed
        (reference: the default speed)."""
        scale = speed_kmh / self.treadmill_speed
        return replace(self, cadence=self.cadence * scale,
                       treadmill_speed=speed_kmh)


# -- waveform templates ------------------------------------------------------


def _hip(pat: GaitPattern, psi):
    return pat.hip_amplitude * np.sin(2 * np.pi * psi + pat.hip_phase) + pat.hip_offset


def _knee(pat: GaitPattern, psi):
    a1 = pat.knee_amplitude
    return (pat.knee_offset
            + a1 * np.sin(2 * np.pi * psi)
            + pat.knee_stance_fraction * a1 * np.sin(4 * np.pi * psi
                                                     + pat.knee_stance_phase)
            + pat.knee_third_fraction * a1 * np.sin(6 * np.pi * psi))


def _ankle(pat: GaitPattern, psi):
    return pat.ankle_amplitude * np.sin(2 * np.pi * psi + pat.ankle_phase)


def joint_angles(pat: GaitPattern, psi) -> np.ndarray:
    """Six joint angles (RH, RK, RA, LH, LK, LA) at cycle phase psi.

    The right leg runs at phase ``psi``, the left leg half a cycle ahead;
    the left foot is the grounded one for psi in (0, 0.5).
    """
    psi = np.asarray(psi, dtype=float) % 1.0
    psi_l = (psi + 0.5) % 1.0
    return np.column_stack([
        _hip(pat, psi), _knee(pat, psi), _ankle(pat, psi),
        _hip(pat, psi_l), _knee(pat, psi_l), _ankle(pat, psi_l),
    ])


def load_share(psi, double_support_fraction: float):
    """Smooth load-share waveform in [-1, +1] over cycle phase.

    +1 during left single support, -1 during right single support, with a
    sinusoidal crossfade across each double-support window.  A zero
    double-support fraction gives an instantaneous handover (the two feet
    are never loaded simultaneously).
    """
    psi = np.asarray(psi, dtype=float) % 1.0
    s = np.where(psi < 0.5, 1.0, -1.0)
    r = double_support_fraction / 2.0
    if r == 0:
        return s
    d0 = np.where(psi > 0.5, psi - 1.0, psi)
    s = np.where(np.abs(d0) <= r / 2, np.sin(np.pi * d0 / np.maximum(r, 1e-12)), s)
    d5 = psi - 0.5
    s = np.where(np.abs(d5) <= r / 2, -np.sin(np.pi * d5 / np.maximum(r, 1e-12)), s)
    return s


def _assemble(pat: GaitPattern, t, q, share, rng, stage) -> SensorStream:
    n = t.size
    left = pat.total_load * (1.0 + share) / 2.0
    right = pat.total_load * (1.0 - share) / 2.0
    if pat.angle_noise > 0:
        q = q + rng.normal(scale=pat.angle_noise, size=q.shape)
    if pat.load_noise > 0:
        # noise never un-grounds a foot or loads an airborne one
        left = np.where(left > 0, np.maximum(left + rng.normal(
            scale=pat.load_noise, size=n), 1e-9), 0.0)
        right = np.where(right > 0, np.maximum(right + rng.normal(
            scale=pat.load_noise, size=n), 1e-9), 0.0)
    return SensorStream(t=t, q=q, left_load=left, right_load=right,
                        stage=np.full(n, stage, dtype=object))


def generate_cycle(pattern: GaitPattern, rate: float, cycles: int,
                   seed: int = 0, stage: str = "gait",
                   t_start: float = 0.0) -> SensorStream:
    """Periodic gait frames at the given sample rate, ``cycles`` cycles long."""
    if rate < 100:
        raise ValueError("sample rate must be at least 100 Hz")
    if cycles <= 0:
        raise ValueError("cycles must be positive")
    rng = np.random.default_rng(seed)
    n = round(cycles * pattern.cycle_duration * rate)
    t = t_start + np.arange(n) / rate
    psi = ((t - t_start) / pattern.cycle_duration) % 1.0
    q = joint_angles(pattern, psi)
    share = load_share(psi, pattern.double_support_fraction)
    return _assemble(pattern, t, q, share, rng, stage)


def _swing_stage(pattern: GaitPattern, side: str, swings: int, rate: float,
                 rng, t_start: float) -> SensorStream:
    """Leg-swing exercise: the grounded leg holds a mid-stance pose while
    the other sweeps its swing half-cycle back and forth."""
    duration = swings * pattern.cycle_duration
    n = round(duration * rate)
    t = t_start + np.arange(n) / rate
    u = (t - t_start) / pattern.cycle_duration
    # own-phase of the swinging leg oscillates over its swing window
    ph = 0.25 + 0.25 * np.sin(2 * np.pi * u)
    hold = 0.75  # grounded leg frozen mid single-support
    swing_cols = np.column_stack([_hip(pattern, ph), _knee(pattern, ph),
                                  _ankle(pattern, ph)])
    hold_cols = np.tile([float(_hip(pattern, hold)), float(_knee(pattern, hold)),
                         float(_ankle(pattern, hold))], (n, 1))
    if side == "left":
        q = np.hstack([hold_cols, swing_cols])   # right grounded
        share = -np.ones(n)
        stage = "left_swing"
    else:
        q = np.hstack([swing_cols, hold_cols])   # left grounded
        share = np.ones(n)
        stage = "right_swing"
    return _assemble(pattern, t, q, share, rng, stage)


def generate_training_protocol(pattern: GaitPattern | None = None,
                               seed: int = 0, rate: float = 100.0,
                               swings: int = 3,
                               speeds=TREADMILL_SPEEDS_KMH,
                               treadmill_duration: float = 112.8) -> SensorStream:
    """The full training recording: left swings, right swings, then a
    treadmill sweep over the speed steps.

    Defaults give three swings per side plus five equal treadmill segments
    and come to roughly two minutes at 100 Hz.
    """
    pattern = pattern or GaitPattern()
    rng = np.random.default_rng(seed)
    parts = []
    t_cursor = 0.0
    for side in ("left", "right"):
        part = _swing_stage(pattern, side, swings, rate, rng, t_cursor)
        parts.append(part)
        t_cursor = part.t[-1] + 1.0 / rate
    seg_duration = treadmill_duration / len(speeds)
    for speed in speeds:
        pat_v = pattern.at_speed(speed)
        cycles = max(1, round(seg_duration / pat_v.cycle_duration))
        part = generate_cycle(pat_v, rate, cycles, seed=rng.integers(2**32),
                              stage=f"treadmill_{speed:g}", t_start=t_cursor)
        parts.append(part)
        t_cursor = part.t[-1] + 1.0 / rate
    return SensorStream.concatenate(parts)


# -- closed-loop replay ------------------------------------------------------


@dataclass
class TimingReport:
    """Wall-clock step-time distribution in microseconds."""

    steps: int
    p50_us: float
    p95_us: float
    p99_us: float
    max_us: float

    def to_dict(self) -> dict:
        return {"steps": self.steps, "p50_us": self.p50_us,
                "p95_us": self.p95_us, "p99_us": self.p99_us,
                "max_us": self.max_us}


@dataclass
class SmoothnessReport:
    """Inter-step torque-jump statistics over a replayed corpus.

    Jumps touching degraded (estimator warm-up) commands are excluded:
    the inertial term switching on as the acceleration estimate becomes
    ready is a flagged start-up event, not a property of the blend law.
    """

    median_jump: float
    max_jump: float
    jump_ratio: float      # max / median
    lipschitz: float       # max jump / sample period, Nm/s

    def to_dict(self) -> dict:
        return {"median_jump": self.median_jump, "max_jump": self.max_jump,
                "jump_ratio": self.jump_ratio, "lipschitz": self.lipschitz}


@dataclass
class ReplayResult:
    t: np.ndarray
    raw_phase: np.ndarray
    gamma_l: np.ndarray
    tau: np.ndarray
    step_us: np.ndarray
    degraded: np.ndarray
    dropped_frames: int

    @property
    def commands(self) -> int:
        return self.t.size

    def timing(self) -> TimingReport:
        us = self.step_us
        return TimingReport(
            steps=int(us.size),
            p50_us=float(np.percentile(us, 50)),
            p95_us=float(np.percentile(us, 95)),
            p99_us=float(np.percentile(us, 99)),
            max_us=float(np.max(us)),
        )

    def smoothness(self) -> SmoothnessReport:
        jumps = np.max(np.abs(np.diff(self.tau, axis=0)), axis=1)
        settled = ~self.degraded[:-1] & ~self.degraded[1:]
        jumps = jumps[settled]
        if jumps.size == 0:
            raise ValueError("no settled command pairs to measure")
        median = float(np.median(jumps))
        peak = float(np.max(jumps))
        dt = float(np.median(np.diff(self.t)))
        return SmoothnessReport(
            median_jump=median,
            max_jump=peak,
            jump_ratio=peak / median if median > 0 else math.inf,
            lipschitz=peak / dt if dt > 0 else math.inf,
        )

    def save_csv(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("t,raw_phase,gamma_l,tau_rh,tau_rk,tau_ra,tau_lh,tau_lk,"
                    "tau_la,step_time_us\n")
            for i in range(self.t.size):
                taus = ",".join(repr(float(v)) for v in self.tau[i])
                f.write(f"{self.t[i]!r},{self.raw_phase[i]!r},"
                        f"{self.gamma_l[i]!r},{taus},{self.step_us[i]!r}\n")


def replay(stream: SensorStream, loop: ControlLoop) -> ReplayResult:
    """Feed every frame through the control loop and collect the command
    stream plus timing; out-of-order frames are dropped and counted."""
    n = len(stream)
    t = np.empty(n)
    raw = np.empty(n)
    gl = np.empty(n)
    tau = np.empty((n, 6))
    us = np.empty(n)
    deg = np.empty(n, dtype=bool)
    k = 0
    dropped = 0
    for frame in stream.frames():
        try:
            cmd: AssistCommand = loop.step(frame)
        except OutOfOrderFrameError:
            dropped += 1
            continue
        t[k] = cmd.t
        raw[k] = cmd.raw_phase
        gl[k] = cmd.gamma_l
        tau[k] = cmd.tau
        us[k] = cmd.step_time_us
        deg[k] = cmd.degraded
        k += 1
    return ReplayResult(t=t[:k], raw_phase=raw[:k], gamma_l=gl[:k],
                        tau=tau[:k], step_us=us[:k], degraded=deg[:k],
                        dropped_frames=dropped)
