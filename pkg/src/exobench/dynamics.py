"""Planar sagittal rigid-body model of the exoskeleton.

The device is modelled, for each single-stance configuration, as a serial
chain of five links rooted at the grounded ankle:

    stance shank -> stance thigh -> back -> swing thigh -> swing shank

Links are uniform rods (configurable centre-of-mass fraction, rod inertia
about the COM); the swing-side foot rides as a point mass fixed to the
swing shank.  Joint angles are relative, measured so that a fully vertical
chain is q = 0, and the chain tips toward +x for positive angles.

Two torque evaluation paths exist on purpose:

* ``inertia_matrix`` / ``gravity_vector`` build the dense operators with
  vectorised numpy; they are the readable reference used by analysis code.
* ``blended_torque`` is the canonical full-torque evaluator used by the
  control loop, where a step must fit a 5 kHz budget.  It runs through a
  numba-compiled kernel when numba is importable and through an equivalent
  pure-Python path otherwise; ``stance_torque`` routes through the same
  evaluator so logged commands and one-shot evaluations are bit-identical
  within a process.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SchemaError

JOINTS = ("RH", "RK", "RA", "LH", "LK", "LA")
ACTUATED_JOINTS = ("RH", "RK", "LH", "LK")
ACTUATED_MASK = tuple(j in ACTUATED_JOINTS for j in JOINTS)

# permutation from the 6-joint sensor vector to the 5-joint stance chain
# (grounded ankle, grounded knee, grounded hip, swing hip, swing knee)
LEFT_STANCE_PERM = (5, 4, 3, 0, 1)
RIGHT_STANCE_PERM = (2, 1, 0, 3, 4)

CALIBRATION_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExoParams:
    """Link geometry and mass distribution of the device.

    Lengths are joint-to-joint distances; ``foot_height`` is the ankle
    height above the ground contact plane.  ``back_mass`` defaults to the
    battery pack (4.3 kg) plus minimal structure and may be set anywhere
    in the supported [1.2, 8] kg range.
    """

    back_length: float = 0.474
    thigh_length: float = 0.407
    shank_length: float = 0.402
    foot_height: float = 0.095
    thigh_mass: float = 4.1
    shank_mass: float = 2.9
    foot_mass: float = 0.2
    back_mass: float = 4.3 + 1.2
    com_fraction: float = 0.5
    gravity: float = 9.81

    def __post_init__(self):
        for name in ("back_length", "thigh_length", "shank_length", "foot_height"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("thigh_mass", "shank_mass", "foot_mass", "back_mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 1.2 <= self.back_mass <= 8.0:
            raise ValueError("back_mass must lie in [1.2, 8] kg")
        if not 0.0 <= self.com_fraction <= 1.0:
            raise ValueError("com_fraction must lie in [0, 1]")
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")


@dataclass(frozen=True)
class JointState:
    """Angle/velocity/acceleration snapshot of all six sagittal joints.

    Ordering is ``(RH, RK, RA, LH, LK, LA)``.
    """

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (6,):
                raise ValueError(f"{name} must have shape (6,)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)

    @staticmethod
    def static(q) -> "JointState":
        """State with zero velocity and acceleration."""
        return JointState(np.asarray(q, float), np.zeros(6), np.zeros(6))


class PlanarChain:
    """Serial chain of rigid rods in a vertical plane, revolute joints.

    ``point_masses`` is a list of ``(link_index, distance, mass)`` tuples:
    point masses rigidly attached to a link at a given distance from its
    proximal joint.
    """

    def __init__(self, lengths, masses, com_fractions=None, inertias=None,
                 point_masses=(), gravity=9.81):
        self.lengths = tuple(float(v) for v in lengths)
        self.masses = tuple(float(v) for v in masses)
        n = len(self.lengths)
        if len(self.masses) != n:
            raise ValueError("lengths and masses must have the same size")
        if com_fractions is None:
            com_fractions = [0.5] * n
        self.com_fractions = tuple(float(v) for v in com_fractions)
        if inertias is None:
            # uniform rod about its COM
            inertias = [m * l * l / 12.0 for m, l in zip(self.masses, self.lengths)]
        self.inertias = tuple(float(v) for v in inertias)
        self.point_masses = tuple((int(k), float(d), float(m)) for k, d, m in point_masses)
        self.gravity = float(gravity)
        self.n = n
        self._precompute()

    def _precompute(self):
        n = self.n
        # each body b has COM position sum_{j<k} l_j u(phi_j) + d_b u(phi_k);
        # collect its reach coefficients over joints
        coefs = []
        bmass = []
        for k in range(n):
            c = [0.0] * n
            for j in range(k):
                c[j] = self.lengths[j]
            c[k] = self.com_fractions[k] * self.lengths[k]
            coefs.append(c)
            bmass.append(self.masses[k])
        for k, d, m in self.point_masses:
            if not 0 <= k < n:
                raise ValueError("point mass attached to unknown link")
            c = [0.0] * n
            for j in range(k):
                c[j] = self.lengths[j]
            c[k] = d
            coefs.append(c)
            bmass.append(m)
        C = np.asarray(coefs)
        m = np.asarray(bmass)
        # quadratic mass coupling and gravity weights, configuration independent
        self._P = np.ascontiguousarray((C.T * m) @ C)
        self._w = np.ascontiguousarray(m @ C)
        # rotational inertia coupling: joints i and i' both spin every link
        # k >= max(i, i')
        tail = np.flip(np.cumsum(np.flip(np.asarray(self.inertias))))
        idx = np.arange(n)
        self._R = np.ascontiguousarray(tail[np.maximum.outer(idx, idx)])
        # flattened copies for the pure-python kernel
        self._P_rows = tuple(tuple(row) for row in self._P)
        self._R_rows = tuple(tuple(row) for row in self._R)
        self._w_t = tuple(self._w)

    # -- reference (vectorised) evaluators ---------------------------------

    def inertia(self, q) -> np.ndarray:
        """Joint-space inertia matrix, shape (n, n)."""
        q = self._check_q(q)
        phi = np.cumsum(q)
        s, c = np.sin(phi), np.cos(phi)
        cosd = np.multiply.outer(c, c) + np.multiply.outer(s, s)
        M = self._P * cosd
        Bv = np.flip(np.flip(M).cumsum(0).cumsum(1))
        return Bv + self._R

    def gravity_torque(self, q) -> np.ndarray:
        """Joint torques balancing gravity: the gradient of potential energy."""
        q = self._check_q(q)
        phi = np.cumsum(q)
        ws = self._w * np.sin(phi)
        return -self.gravity * np.flip(np.cumsum(np.flip(ws)))

    def potential_energy(self, q) -> float:
        q = self._check_q(q)
        phi = np.cumsum(q)
        return self.gravity * float(self._w @ np.cos(phi))

    def _check_q(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(f"expected {self.n} joint angles")
        if not np.all(np.isfinite(q)):
            raise ValueError("joint angles must be finite")
        return q

    # -- fused scalar kernel (control-loop hot path) ------------------------

    def torque(self, q, qdd, perm=None):
        """B(q) @ qdd + G(q) as a list of floats.

        Accepts any indexable float sequences and performs no validation.
        With ``perm`` given, joint i of the chain reads ``q[perm[i]]``,
        saving the caller a copy.  This is the pure-python twin of the
        jitted kernel behind ``blended_torque``.
        """
        n = self.n
        sin = math.sin
        cos = math.cos
        s = [0.0] * n
        c = [0.0] * n
        acc = 0.0
        if perm is None:
            for i in range(n):
                acc += q[i]
                s[i] = sin(acc)
                c[i] = cos(acc)
            qdd5 = qdd
        else:
            for i in range(n):
                acc += q[perm[i]]
                s[i] = sin(acc)
                c[i] = cos(acc)
            qdd5 = (qdd[perm[0]], qdd[perm[1]], qdd[perm[2]], qdd[perm[3]],
                    qdd[perm[4]])
        w = self._w_t
        g = self.gravity
        tau = [0.0] * n
        acc = 0.0
        for i in range(n - 1, -1, -1):
            acc += w[i] * s[i]
            tau[i] = -g * acc
        # inertia contribution: tau_i += sum_{a>=i} sum_b P[a][b]
        # * cos(phi_a - phi_b) * (prefix sum of qdd up to b)
        P = self._P_rows
        R = self._R_rows
        qc = [0.0] * n
        acc = 0.0
        for j in range(n):
            acc += qdd5[j]
            qc[j] = acc
        accv = 0.0
        for a in range(n - 1, -1, -1):
            Pa = P[a]
            ca = c[a]
            sa = s[a]
            da = 0.0
            for b in range(n):
                da += Pa[b] * (ca * c[b] + sa * s[b]) * qc[b]
            accv += da
            tau[a] += accv
        for i in range(n):
            Ri = R[i]
            acc = 0.0
            for j in range(n):
                acc += Ri[j] * qdd5[j]
            tau[i] += acc
        return tau


class StanceModel:
    """Single-stance chain for one grounded side plus its joint permutation."""

    def __init__(self, side: str, params: ExoParams | None = None):
        side = side.lower()
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.side = side
        self.params = params or ExoParams()
        p = self.params
        self.perm = LEFT_STANCE_PERM if side == "left" else RIGHT_STANCE_PERM
        # the grounded foot is part of the fixed base; the swing foot rides
        # the swing shank as a point mass at ankle height past the knee span
        self.chain = PlanarChain(
            lengths=[p.shank_length, p.thigh_length, p.back_length,
                     p.thigh_length, p.shank_length],
            masses=[p.shank_mass, p.thigh_mass, p.back_mass,
                    p.thigh_mass, p.shank_mass],
            com_fractions=[p.com_fraction] * 5,
            point_masses=[(4, p.shank_length + p.foot_height, p.foot_mass)],
            gravity=p.gravity,
        )
        self._perm_arr = np.asarray(self.perm)
        self._perm_np = np.asarray(self.perm, dtype=np.int64)

    def select(self, q6) -> np.ndarray:
        """Permute a 6-joint vector into the 5-joint stance ordering."""
        return np.asarray(q6, dtype=float)[self._perm_arr]

    def scatter(self, values5, out=None) -> np.ndarray:
        """Place 5 chain values back into a 6-joint vector (swing ankle = 0)."""
        if out is None:
            out = np.zeros(6)
        out[self._perm_arr] = values5
        return out


def inertia_matrix(model: StanceModel, q5) -> np.ndarray:
    """Configuration-dependent 5x5 joint-space inertia matrix (kg m^2)."""
    return model.chain.inertia(q5)


def gravity_vector(model: StanceModel, q5) -> np.ndarray:
    """Gravity-balancing torques for the 5-joint stance chain (Nm)."""
    return model.chain.gravity_torque(q5)


# ---------------------------------------------------------------------------
# lookup-table compensation (friction and torque ripple)
# ---------------------------------------------------------------------------


class LookupTable1D:
    """Piecewise-linear table with endpoint clamping."""

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        val = np.asarray(values, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if val.shape != bp.shape:
            raise ValueError("values must match breakpoints in length")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(val))):
            raise ValueError("table entries must be finite")
        self.breakpoints = bp
        self.values = val
        self._bp = bp.tolist()
        self._val = val.tolist()

    def __call__(self, x: float) -> float:
        xs = self._bp
        ys = self._val
        if x <= xs[0]:
            return ys[0]
        if x >= xs[-1]:
            return ys[-1]
        i = bisect.bisect_right(xs, x) - 1
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + t * (ys[i + 1] - ys[i])

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(),
                "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LookupTable1D":
        return cls(d["breakpoints"], d["values"])


@dataclass
class CompensationTables:
    """Per-joint friction (velocity) and ripple (position) tables.

    Tables are required for every actuated joint; the passive ankles
    contribute zero.
    """

    friction: dict = field(default_factory=dict)
    ripple: dict = field(default_factory=dict)

    def __post_init__(self):
        for joint in ACTUATED_JOINTS:
            if joint not in self.friction:
                raise ConfigurationError(f"missing friction table for joint {joint}")
            if joint not in self.ripple:
                raise ConfigurationError(f"missing ripple table for joint {joint}")
        self._fr = tuple(
            (JOINTS.index(j), self.friction[j], self.ripple[j])
            for j in ACTUATED_JOINTS
        )
        self._pack_for_kernel()

    def _pack_for_kernel(self):
        # rectangular per-joint table arrays for the jitted evaluator;
        # short rows are padded by repeating their last entry, which is
        # invisible behind the endpoint clamp
        self._jidx = np.asarray([JOINTS.index(j) for j in ACTUATED_JOINTS],
                                dtype=np.int64)

        def pack(tabs):
            width = max(t.breakpoints.size for t in tabs)
            bp = np.empty((len(tabs), width))
            val = np.empty((len(tabs), width))
            for i, t in enumerate(tabs):
                k = t.breakpoints.size
                bp[i, :k] = t.breakpoints
                val[i, :k] = t.values
                bp[i, k:] = t.breakpoints[-1]
                val[i, k:] = t.values[-1]
            return bp, val

        self._fbp, self._fval = pack([self.friction[j] for j in ACTUATED_JOINTS])
        self._rbp, self._rval = pack([self.ripple[j] for j in ACTUATED_JOINTS])

    def evaluate_scalar(self, q, qd):
        """Compensation torques as a list of 6 floats (ankles zero)."""
        out = [0.0] * 6
        for idx, ftab, rtab in self._fr:
            out[idx] = ftab(qd[idx]) + rtab(q[idx])
        return out

    @classmethod
    def zeroed(cls) -> "CompensationTables":
        flat = LookupTable1D([-10.0, 10.0], [0.0, 0.0])
        return cls(friction={j: flat for j in ACTUATED_JOINTS},
                   ripple={j: flat for j in ACTUATED_JOINTS})

    @classmethod
    def default_synthetic(cls, viscous=0.6, coulomb=0.8, smooth_vel=0.2,
                          ripple_amp=0.25, ripple_cycles=9.0) -> "CompensationTables":
        """Viscous + smoothed-Coulomb friction and sinusoidal ripple,
        sampled onto tables.  Stands in for a device calibration file."""
        qd_grid = np.linspace(-4.0, 4.0, 81)
        fric = viscous * qd_grid + coulomb * np.tanh(qd_grid / smooth_vel)
        q_grid = np.linspace(-1.6, 1.6, 81)
        rip = ripple_amp * np.sin(ripple_cycles * q_grid)
        ftab = LookupTable1D(qd_grid, fric)
        rtab = LookupTable1D(q_grid, rip)
        return cls(friction={j: ftab for j in ACTUATED_JOINTS},
                   ripple={j: rtab for j in ACTUATED_JOINTS})


def friction_ripple(tables: CompensationTables, q, qd) -> np.ndarray:
    """Summed friction + ripple compensation over all six joints (Nm)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    if q.shape != (6,) or qd.shape != (6,):
        raise ValueError("q and qd must have shape (6,)")
    return np.asarray(tables.evaluate_scalar(q, qd))


# ---------------------------------------------------------------------------
# canonical full-torque evaluation
# ---------------------------------------------------------------------------


def _blended_tau6_impl(q, qd, qdd, gl, gr, perm_l, perm_r, p_l, r_l, w_l,
                       p_r, r_r, w_r, g, jidx, fbp, fval, rbp, rval, out):
    # written in the numba-compilable subset; also runs under plain python
    n = 5
    s = np.empty(n)
    c = np.empty(n)
    tau5 = np.empty(n)
    qc = np.empty(n)
    for side in range(2):
        gain = gl if side == 0 else gr
        if gain <= 0.0:
            continue
        perm = perm_l if side == 0 else perm_r
        P = p_l if side == 0 else p_r
        R = r_l if side == 0 else r_r
        w = w_l if side == 0 else w_r
        acc = 0.0
        for i in range(n):
            acc += q[perm[i]]
            s[i] = math.sin(acc)
            c[i] = math.cos(acc)
        acc = 0.0
        for i in range(n - 1, -1, -1):
            acc += w[i] * s[i]
            tau5[i] = -g * acc
        acc = 0.0
        for j in range(n):
            acc += qdd[perm[j]]
            qc[j] = acc
        accv = 0.0
        for a in range(n - 1, -1, -1):
            da = 0.0
            for b in range(n):
                da += P[a, b] * (c[a] * c[b] + s[a] * s[b]) * qc[b]
            accv += da
            tau5[a] += accv
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += R[i, j] * qdd[perm[j]]
            tau5[i] += acc
        for k in range(n):
            out[perm[k]] += gain * tau5[k]
    for a in range(jidx.shape[0]):
        j = jidx[a]
        for kind in range(2):
            x = qd[j] if kind == 0 else q[j]
            bp = fbp[a] if kind == 0 else rbp[a]
            val = fval[a] if kind == 0 else rval[a]
            m = bp.shape[0]
            if x <= bp[0]:
                out[j] += val[0]
            elif x >= bp[m - 1]:
                out[j] += val[m - 1]
            else:
                lo = 0
                hi = m - 1
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if bp[mid] <= x:
                        lo = mid
                    else:
                        hi = mid
                t = (x - bp[lo]) / (bp[lo + 1] - bp[lo])
                out[j] += val[lo] + t * (val[lo + 1] - val[lo])
    return out


_KERNEL = {"fn": None, "tried": False}


def _get_kernel():
    """Compile the fused evaluator on first use; None when numba is not
    usable (the pure-python path takes over)."""
    if not _KERNEL["tried"]:
        _KERNEL["tried"] = True
        try:
            from numba import njit

            fn = njit(cache=True, fastmath=False)(_blended_tau6_impl)
            z6 = np.zeros(6)
            perm = np.arange(5, dtype=np.int64)
            m5 = np.eye(5)
            w5 = np.zeros(5)
            tab = np.zeros((1, 2))
            tab[0, 1] = 1.0
            fn(z6, z6, z6, 0.5, 0.5, perm, perm, m5, m5, w5, m5, m5, w5,
               9.81, np.zeros(1, dtype=np.int64), tab, np.zeros((1, 2)),
               tab, np.zeros((1, 2)), np.zeros(6))
            _KERNEL["fn"] = fn
        except Exception:
            _KERNEL["fn"] = None
    return _KERNEL["fn"]


def blended_torque(q, qd, qdd, gamma_l: float, gamma_r: float,
                   left: StanceModel, right: StanceModel,
                   tables: CompensationTables) -> np.ndarray:
    """Gain-weighted mix of the two stance compensations plus the
    (unblended) friction/ripple terms, over all six joints.

    A side whose gain is exactly zero is skipped entirely, so saturated
    gains reproduce the corresponding single-stance torque bit for bit.
    """
    kern = _get_kernel()
    if kern is not None:
        out = np.zeros(6)
        kern(np.asarray(q, dtype=np.float64), np.asarray(qd, dtype=np.float64),
             np.asarray(qdd, dtype=np.float64), gamma_l, gamma_r,
             left._perm_np, right._perm_np,
             left.chain._P, left.chain._R, left.chain._w,
             right.chain._P, right.chain._R, right.chain._w,
             left.chain.gravity, tables._jidx, tables._fbp, tables._fval,
             tables._rbp, tables._rval, out)
        return out
    tau6 = [0.0] * 6
    if gamma_l > 0.0:
        perm = left.perm
        tau5 = left.chain.torque(q, qdd, perm=perm)
        for k in range(5):
            tau6[perm[k]] += gamma_l * tau5[k]
    if gamma_r > 0.0:
        perm = right.perm
        tau5 = right.chain.torque(q, qdd, perm=perm)
        for k in range(5):
            tau6[perm[k]] += gamma_r * tau5[k]
    comp = tables.evaluate_scalar(q, qd)
    for i in range(6):
        tau6[i] += comp[i]
    return np.asarray(tau6)


def stance_torque(model: StanceModel, state: JointState,
                  tables: CompensationTables) -> np.ndarray:
    """Full single-stance compensation torque in the 6-joint space.

    Inertia and gravity act in the 5-joint stance space and are scattered
    back (swing-side ankle entry zero); friction and ripple are added per
    joint.  Passive ankle entries are informational: see ``ACTUATED_MASK``.
    """
    return blended_torque(state.q, state.qd, state.qdd, 1.0, 0.0,
                          model, model, tables)


# ---------------------------------------------------------------------------
# acceleration estimation
# ---------------------------------------------------------------------------


class AccelerationEstimator:
    """Finite-difference joint velocity/acceleration with one-pole smoothing.

    Acceleration uses a three-point second difference, so it becomes
    available on the third sample; velocity on the second.  ``cutoff_hz``
    of ``None`` disables the low-pass stage.
    """

    def __init__(self, cutoff_hz: float | None = 20.0, n_joints: int = 6):
        self.cutoff_hz = cutoff_hz
        self.n = n_joints
        self._rc = None if cutoff_hz is None else 1.0 / (2.0 * math.pi * cutoff_hz)
        self.reset()

    def reset(self):
        self._seen = 0
        self._t1 = self._t2 = 0.0
        self._q1 = self._q2 = None
        self._qd = None
        self._qdd = None

    @property
    def ready(self) -> bool:
        """True once an acceleration estimate exists (three samples seen)."""
        return self._qdd is not None

    def push(self, t: float, q):
        """Ingest one sample; returns (qd, qdd) lists or (None, None) parts
        while the history is too short."""
        seen = self._seen
        if seen == 0:
            self._t1 = t
            self._q1 = q
            self._seen = 1
            return None, None
        dt = t - self._t1
        if dt <= 0:
            raise ValueError("timestamps must be strictly increasing")
        n = self.n
        q1 = self._q1
        qd_raw = [(q[i] - q1[i]) / dt for i in range(n)]
        self._qd = self._filter(self._qd, qd_raw, dt)
        if seen == 1:
            self._t2, self._q2 = self._t1, self._q1
            self._t1, self._q1 = t, q
            self._seen = 2
            return self._qd, None
        q2 = self._q2
        dth = 0.5 * (t - self._t2)
        inv = 1.0 / (dth * dth)
        qdd_raw = [(q[i] - 2.0 * q1[i] + q2[i]) * inv for i in range(n)]
        self._qdd = self._filter(self._qdd, qdd_raw, dt)
        self._t2, self._q2 = self._t1, self._q1
        self._t1, self._q1 = t, q
        return self._qd, self._qdd

    def _filter(self, prev, raw, dt):
        if self._rc is None or prev is None:
            return raw
        alpha = dt / (dt + self._rc)
        return [p + alpha * (r - p) for p, r in zip(prev, raw)]


def estimate_acceleration(history, cutoff_hz: float | None = 20.0):
    """Acceleration from a short uniformly sampled history of (t, q) pairs.

    Returns ``None`` (not ready) with fewer than three points; callers
    substitute zero acceleration.
    """
    est = AccelerationEstimator(cutoff_hz=cutoff_hz,
                                n_joints=len(history[0][1]) if history else 6)
    qdd = None
    for t, q in history:
        _, qdd = est.push(t, q)
    return None if qdd is None else np.asarray(qdd)


# ---------------------------------------------------------------------------
# calibration file
# ---------------------------------------------------------------------------


def save_calibration(path, params: ExoParams, tables: CompensationTables):
    doc = {
        "schema_version": CALIBRATION_SCHEMA_VERSION,
        "link_parameters": {
            "back_length": params.back_length,
            "thigh_length": params.thigh_length,
            "shank_length": params.shank_length,
            "foot_height": params.foot_height,
            "thigh_mass": params.thigh_mass,
            "shank_mass": params.shank_mass,
            "foot_mass": params.foot_mass,
            "back_mass": params.back_mass,
            "com_fraction": params.com_fraction,
            "gravity": params.gravity,
        },
        "friction_tables": {j: tables.friction[j].to_dict() for j in ACTUATED_JOINTS},
        "ripple_tables": {j: tables.ripple[j].to_dict() for j in ACTUATED_JOINTS},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_calibration(path):
    """Read a calibration file; returns (ExoParams, CompensationTables)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("schema_version") != CALIBRATION_SCHEMA_VERSION:
        raise SchemaError(f"unsupported calibration schema_version "
                          f"{doc.get('schema_version')!r}")
    try:
        params = ExoParams(**doc["link_parameters"])
        friction = {j: LookupTable1D.from_dict(d)
                    for j, d in doc["friction_tables"].items()}
        ripple = {j: LookupTable1D.from_dict(d)
                  for j, d in doc["ripple_tables"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed calibration file: {exc}") from exc
    return params, CompensationTables(friction=friction, ripple=ripple)
