"""Serial-chain kinematics in the standard Denavit-Hartenberg convention.

Joint i rotates about the z axis of frame i-1.  The transform from frame i
to frame i-1 is Rot_z(theta_i) Trans_z(d_i) Trans_x(a_i) Rot_x(alpha_i)
with theta_i = q_i + offset_i.  All joints are revolute.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY_DEFAULT = (0.0, 0.0, -9.80665)


@dataclass(frozen=True)
class DhRow:
    """One standard-DH row.

    Attributes:
        a: link length [m].
        alpha: link twist [rad].
        d: link offset [m].
        offset: constant angle [rad] added to the joint variable.
    """

    a: float
    alpha: float
    d: float
    offset: float = 0.0

    def __post_init__(self):
        for name in ("a", "alpha", "d", "offset"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"DhRow.{name} must be finite")


@dataclass(frozen=True)
class KinematicChain:
    """A serial chain of revolute joints with a base-frame gravity vector."""

    rows: tuple[DhRow, ...]
    gravity: tuple[float, float, float] = GRAVITY_DEFAULT

    def __post_init__(self):
        if len(self.rows) < 1:
            raise ValueError("chain needs at least one joint")
        g = np.asarray(self.gravity, dtype=float)
        if g.shape != (3,) or not np.all(np.isfinite(g)):
            raise ValueError("gravity must be a finite 3-vector")
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "gravity", tuple(float(x) for x in g))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def gravity_vector(self) -> np.ndarray:
        return np.array(self.gravity, dtype=float)

    def check_q(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(
                f"expected {self.n} joint values, got shape {q.shape}"
            )
        if not np.all(np.isfinite(q)):
            bad = int(np.flatnonzero(~np.isfinite(q))[0])
            raise ValueError(f"joint value at index {bad} is not finite")
        return q


def dh_transform(row: DhRow, q: float) -> np.ndarray:
    """Homogeneous transform of one DH row at joint angle q (frame i -> i-1)."""
    th = q + row.offset
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    return np.array([
        [ct, -st * ca, st * sa, row.a * ct],
        [st, ct * ca, -ct * sa, row.a * st],
        [0.0, sa, ca, row.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def link_pose(chain: KinematicChain, q, i: int) -> np.ndarray:
    """Pose of frame i in the base frame; i ranges over 1..n (0 gives identity)."""
    q = chain.check_q(q)
    if not 0 <= i <= chain.n:
        raise ValueError(f"frame index {i} outside 0..{chain.n}")
    T = np.eye(4)
    for k in range(i):
        T = T @ dh_transform(chain.rows[k], q[k])
    return T


def frame_chain(chain: KinematicChain, q) -> list[np.ndarray]:
    """All cumulative poses [T_0, T_1, ..., T_n] with T_0 the identity."""
    q = chain.check_q(q)
    out = [np.eye(4)]
    for k in range(chain.n):
        out.append(out[-1] @ dh_transform(chain.rows[k], q[k]))
    return out


def local_frames(chain: KinematicChain, q):
    """Per-joint rotations R_i (frame i axes in frame i-1) and origin
    offsets p_i (frame-i origin in frame i-1 coordinates)."""
    q = chain.check_q(q)
    R = np.empty((chain.n, 3, 3))
    p = np.empty((chain.n, 3))
    for k, row in enumerate(chain.rows):
        A = dh_transform(row, q[k])
        R[k] = A[:3, :3]
        p[k] = A[:3, 3]
    return R, p


def local_frames_batch(chain: KinematicChain, Q: np.ndarray):
    """Vectorized local_frames for Q of shape (M, n)."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != chain.n:
        raise ValueError(f"expected joint array of shape (M, {chain.n})")
    M = Q.shape[0]
    R = np.zeros((M, chain.n, 3, 3))
    p = np.zeros((M, chain.n, 3))
    for k, row in enumerate(chain.rows):
        th = Q[:, k] + row.offset
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(row.alpha), np.sin(row.alpha)
        R[:, k, 0, 0] = ct
        R[:, k, 0, 1] = -st * ca
        R[:, k, 0, 2] = st * sa
        R[:, k, 1, 0] = st
        R[:, k, 1, 1] = ct * ca
        R[:, k, 1, 2] = -ct * sa
        R[:, k, 2, 1] = sa
        R[:, k, 2, 2] = ca
        p[:, k, 0] = row.a * ct
        p[:, k, 1] = row.a * st
        p[:, k, 2] = row.d
    return R, p


def ur10_chain(gravity=GRAVITY_DEFAULT) -> KinematicChain:
    """Kinematic chain of a UR10-class 6-DOF arm (z0 up, lengths in meters)."""
    return KinematicChain(
        rows=(
            DhRow(a=0.0, alpha=-np.pi / 2, d=0.1273),
            DhRow(a=0.612, alpha=0.0, d=0.0),
            DhRow(a=0.5723, alpha=0.0, d=0.0),
            DhRow(a=0.0, alpha=-np.pi / 2, d=0.163941),
            DhRow(a=0.0, alpha=np.pi / 2, d=0.1157),
            DhRow(a=0.0, alpha=0.0, d=0.0922),
        ),
        gravity=gravity,
    )
