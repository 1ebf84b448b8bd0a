"""Torque-level rigid-body dynamics for serial chains.

Inverse dynamics is the recursive Newton-Euler algorithm written in
origin-referenced inertial coordinates: mass m, first moment m*r, and the
inertia tensor taken about the link-frame origin.  In these coordinates the
joint torques are linear in the parameters, so the regressor can be built
column by column from unit-parameter sweeps.  Gravity enters as an
acceleration of the base frame.

Per-joint friction is modeled at two levels: a linear triple
f_o + f_v*qd + f_c*sgn(qd) that keeps the regressor linear, and a sigmoid
law f_o + f_v*qd + f_c/(1 + exp(-delta*(nu + qd))) that captures the
direction-change transition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import KinematicChain, local_frames, local_frames_batch

N_INERTIAL = 10   # per-link inertial parameters
N_FRICTION = 3    # per-joint linear friction parameters

# symmetric basis order for the inertia tensor: xx, xy, xz, yy, yz, zz
_I_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_EZ = np.array([0.0, 0.0, 1.0])


def _sym_basis() -> np.ndarray:
    E = np.zeros((6, 3, 3))
    for s, (a, b) in enumerate(_I_PAIRS):
        E[s, a, b] = 1.0
        E[s, b, a] = 1.0
        if a == b:
            E[s, a, b] = 1.0
    return E


_E_SYM = _sym_basis()


def _skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _skew_batch(V: np.ndarray) -> np.ndarray:
    """Skew matrices for V of shape (..., 3) -> (..., 3, 3)."""
    out = np.zeros(V.shape + (3,))
    out[..., 0, 1] = -V[..., 2]
    out[..., 0, 2] = V[..., 1]
    out[..., 1, 0] = V[..., 2]
    out[..., 1, 2] = -V[..., 0]
    out[..., 2, 0] = -V[..., 1]
    out[..., 2, 1] = V[..., 0]
    return out


def inertia_vector_to_matrix(v6: np.ndarray) -> np.ndarray:
    """(xx, xy, xz, yy, yz, zz) -> symmetric 3x3."""
    xx, xy, xz, yy, yz, zz = v6
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def inertia_matrix_to_vector(I: np.ndarray) -> np.ndarray:
    return np.array([I[0, 0], I[0, 1], I[0, 2], I[1, 1], I[1, 2], I[2, 2]])


def steiner_shift(mass: float, r: np.ndarray) -> np.ndarray:
    """Inertia increment [r]x^T [r]x scaled by mass (COM -> origin shift)."""
    r = np.asarray(r, dtype=float)
    return mass * ((r @ r) * np.eye(3) - np.outer(r, r))


@dataclass(frozen=True)
class InertialParameters:
    """Inertial parameters of one link in its own DH frame.

    Attributes:
        mass: link mass [kg].
        first_moment: mass times COM position, m*r [kg m].
        inertia_origin: inertia tensor about the frame origin [kg m^2].
    """

    mass: float
    first_moment: tuple[float, float, float]
    inertia_origin: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        h = np.asarray(self.first_moment, dtype=float)
        I = np.asarray(self.inertia_origin, dtype=float)
        if h.shape != (3,) or I.shape != (3, 3):
            raise ValueError("first_moment must be (3,), inertia_origin (3, 3)")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(I))
                and np.isfinite(self.mass)):
            raise ValueError("inertial parameters must be finite")
        if np.max(np.abs(I - I.T)) > 1e-12 * max(1.0, np.max(np.abs(I))):
            raise ValueError("inertia_origin must be symmetric")
        object.__setattr__(self, "first_moment", tuple(float(x) for x in h))
        object.__setattr__(
            self, "inertia_origin", tuple(tuple(float(x) for x in row) for row in I)
        )

    @classmethod
    def from_com(cls, mass: float, com, inertia_com) -> "InertialParameters":
        """Build from COM position and COM-referenced inertia; the COM tensor
        must be symmetric positive semidefinite and the mass positive."""
        com = np.asarray(com, dtype=float)
        Ic = np.asarray(inertia_com, dtype=float)
        if mass <= 0.0:
            raise ValueError("mass must be positive")
        if np.max(np.abs(Ic - Ic.T)) > 1e-12 * max(1.0, np.max(np.abs(Ic))):
            raise ValueError("COM inertia must be symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (Ic + Ic.T))
        if eigs[0] < -1e-12 * max(1.0, abs(eigs[-1])):
            raise ValueError("COM inertia must be positive semidefinite")
        I0 = Ic + steiner_shift(mass, com)
        return cls(mass=float(mass), first_moment=tuple(mass * com),
                   inertia_origin=tuple(map(tuple, I0)))

    @property
    def com(self) -> np.ndarray:
        return np.array(self.first_moment) / self.mass

    @property
    def inertia_com(self) -> np.ndarray:
        I0 = np.array(self.inertia_origin)
        return I0 - steiner_shift(self.mass, self.com)

    def to_vector(self) -> np.ndarray:
        """[m, m*rx, m*ry, m*rz, Ixx, Ixy, Ixz, Iyy, Iyz, Izz]."""
        return np.concatenate((
            [self.mass], self.first_moment,
            inertia_matrix_to_vector(np.array(self.inertia_origin)),
        ))

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "InertialParameters":
        v = np.asarray(v, dtype=float)
        if v.shape != (N_INERTIAL,):
            raise ValueError(f"expected vector of length {N_INERTIAL}")
        return cls(mass=float(v[0]), first_moment=tuple(v[1:4]),
                   inertia_origin=tuple(map(tuple, inertia_vector_to_matrix(v[4:]))))


@dataclass(frozen=True)
class FrictionSet:
    """Per-joint sigmoid friction parameters.

    f(qd) = f_o + f_v*qd + f_c / (1 + exp(-delta*(nu + qd)))

    delta is the transition steepness [s/rad] and nu the velocity shift
    [rad/s].  Values are at torque level [Nm] for plant models and at
    current level [A] for identified models.
    """

    f_o: tuple[float, ...]
    f_v: tuple[float, ...]
    f_c: tuple[float, ...]
    delta: tuple[float, ...]
    nu: tuple[float, ...]

    def __post_init__(self):
        arrays = {}
        width = None
        for name in ("f_o", "f_v", "f_c", "delta", "nu"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or not np.all(np.isfinite(a)):
                raise ValueError(f"FrictionSet.{name} must be a finite 1-d array")
            if width is None:
                width = a.size
            elif a.size != width:
                raise ValueError("FrictionSet fields must have equal length")
            arrays[name] = tuple(float(x) for x in a)
        for name, val in arrays.items():
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return len(self.f_o)

    def as_arrays(self):
        return (np.array(self.f_o), np.array(self.f_v), np.array(self.f_c),
                np.array(self.delta), np.array(self.nu))

    def params_of(self, j: int) -> np.ndarray:
        """(f_o, f_v, f_c, delta, nu) of joint j (0-based)."""
        return np.array([self.f_o[j], self.f_v[j], self.f_c[j],
                         self.delta[j], self.nu[j]])

    @classmethod
    def from_linear(cls, f_o, f_v, f_c) -> "FrictionSet":
        """Sigmoid set that reproduces f_o + f_v*qd + f_c*sgn(qd) exactly,
        including the sgn(0) = 0 convention, via a saturated transition."""
        f_o = np.asarray(f_o, dtype=float)
        f_c = np.asarray(f_c, dtype=float)
        return cls(f_o=tuple(f_o - f_c), f_v=tuple(np.asarray(f_v, dtype=float)),
                   f_c=tuple(2.0 * f_c), delta=tuple(np.full(f_o.size, 1e9)),
                   nu=tuple(np.zeros(f_o.size)))


@dataclass(frozen=True)
class DynamicParameters:
    """Full parameter set of a chain: per-link inertial parameters plus
    per-joint linear friction triples (f_o, f_v, f_c)."""

    links: tuple[InertialParameters, ...]
    friction: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.links) != len(self.friction):
            raise ValueError("links and friction triples must match in length")
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(
            self, "friction",
            tuple(tuple(float(x) for x in tri) for tri in self.friction),
        )
        for tri in self.friction:
            if len(tri) != 3:
                raise ValueError("friction entries must be (f_o, f_v, f_c)")

    @property
    def n(self) -> int:
        return len(self.links)

    def to_vector(self) -> np.ndarray:
        """Layout: n blocks of 10 inertial entries, then n friction triples."""
        parts = [lk.to_vector() for lk in self.links]
        parts.append(np.array(self.friction, dtype=float).ravel())
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, v: np.ndarray, n: int) -> "DynamicParameters":
        v = np.asarray(v, dtype=float)
        if v.shape != (n * (N_INERTIAL + N_FRICTION),):
            raise ValueError(
                f"expected vector of length {n * (N_INERTIAL + N_FRICTION)}"
            )
        links = tuple(
            InertialParameters.from_vector(v[N_INERTIAL * i:N_INERTIAL * (i + 1)])
            for i in range(n)
        )
        fr = v[N_INERTIAL * n:].reshape(n, N_FRICTION)
        return cls(links=links, friction=tuple(map(tuple, fr)))


@dataclass(frozen=True)
class JointState:
    """One joint-space sample (positions, velocities, accelerations)."""

    q: tuple[float, ...]
    qd: tuple[float, ...]
    qdd: tuple[float, ...]

    def __post_init__(self):
        qs = {}
        width = None
        for name in ("q", "qd", "qdd"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or not np.all(np.isfinite(a)):
                raise ValueError(f"JointState.{name} must be a finite 1-d array")
            if width is None:
                width = a.size
            elif a.size != width:
                raise ValueError("JointState fields must have equal length")
            qs[name] = tuple(float(x) for x in a)
        for name, val in qs.items():
            object.__setattr__(self, name, val)

    def arrays(self):
        return (np.array(self.q), np.array(self.qd), np.array(self.qdd))


def rnea(chain: KinematicChain, links, state: JointState,
         gravity=None) -> np.ndarray:
    """Joint torques of the rigid-body model (no friction).

    Args:
        chain: kinematic chain.
        links: sequence of n InertialParameters.
        state: joint positions, velocities, accelerations.
        gravity: optional base-frame gravity override (3-vector).

    Returns:
        (n,) torque vector.
    """
    n = chain.n
    if len(links) != n:
        raise ValueError(f"expected {n} links, got {len(links)}")
    q, qd, qdd = state.arrays()
    chain.check_q(q)
    g = chain.gravity_vector if gravity is None else np.asarray(gravity, dtype=float)

    R, p = local_frames(chain, q)
    # forward pass: angular velocity/acceleration and origin acceleration of
    # each link in its own frame; gravity folded into the base acceleration
    om = np.zeros((n, 3))
    omd = np.zeros((n, 3))
    acc = np.zeros((n, 3))
    om_prev = np.zeros(3)
    omd_prev = np.zeros(3)
    acc_prev = -g
    for i in range(n):
        Ri = R[i]
        om[i] = Ri.T @ (om_prev + qd[i] * _EZ)
        omd[i] = Ri.T @ (omd_prev + qdd[i] * _EZ
                         + qd[i] * np.cross(om_prev, _EZ))
        r = Ri.T @ p[i]
        acc[i] = Ri.T @ acc_prev + np.cross(omd[i], r) \
            + np.cross(om[i], np.cross(om[i], r))
        om_prev, omd_prev, acc_prev = om[i], omd[i], acc[i]

    # backward pass: net wrench per link about its own origin, transported
    # through each joint to the parent origin (a point on the joint axis);
    # the joint torque is the z component of that transported moment
    tau = np.zeros(n)
    carry_f = np.zeros(3)
    carry_n = np.zeros(3)
    for i in range(n - 1, -1, -1):
        m = links[i].mass
        h = np.array(links[i].first_moment)
        I0 = np.array(links[i].inertia_origin)
        F = m * acc[i] + np.cross(omd[i], h) \
            + np.cross(om[i], np.cross(om[i], h)) + carry_f
        N = I0 @ omd[i] + np.cross(om[i], I0 @ om[i]) \
            + np.cross(h, acc[i]) + carry_n
        carry_f = R[i] @ F
        carry_n = R[i] @ N + np.cross(p[i], carry_f)
        tau[i] = carry_n[2]
    return tau


def inertia_matrix(chain: KinematicChain, links, q) -> np.ndarray:
    """Joint-space inertia matrix from unit-acceleration sweeps, gravity off."""
    n = chain.n
    M = np.empty((n, n))
    zero = np.zeros(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        state = JointState(q=tuple(q), qd=tuple(zero), qdd=tuple(e))
        M[:, k] = rnea(chain, links, state, gravity=(0.0, 0.0, 0.0))
    return M


def coriolis_vector(chain: KinematicChain, links, q, qd) -> np.ndarray:
    """Velocity-product torques c(q, qd) with gravity off."""
    zero = np.zeros(chain.n)
    state = JointState(q=tuple(q), qd=tuple(qd), qdd=tuple(zero))
    return rnea(chain, links, state, gravity=(0.0, 0.0, 0.0))


def gravity_vector(chain: KinematicChain, links, q, gravity=None) -> np.ndarray:
    """Static gravity torques g(q)."""
    zero = np.zeros(chain.n)
    state = JointState(q=tuple(q), qd=tuple(zero), qdd=tuple(zero))
    return rnea(chain, links, state, gravity=gravity)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function computed as 0.5*(1 + tanh(x/2)); overflow-free."""
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def friction_linear(triples, qd) -> np.ndarray:
    """Per-joint f_o + f_v*qd + f_c*sgn(qd) with sgn(0) = 0.

    triples: (n, 3) array-like of (f_o, f_v, f_c); qd: (n,) or (M, n).
    """
    tri = np.asarray(triples, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return tri[..., 0] + tri[..., 1] * qd + tri[..., 2] * np.sign(qd)


def friction_sigmoid(fs: FrictionSet, qd) -> np.ndarray:
    """Per-joint sigmoid friction; qd of shape (n,) or (M, n)."""
    f_o, f_v, f_c, delta, nu = fs.as_arrays()
    qd = np.asarray(qd, dtype=float)
    return f_o + f_v * qd + f_c * sigmoid(delta * (nu + qd))


def _forward_batch(chain: KinematicChain, Q, Qd, Qdd, gravity=None):
    """Batched forward recursion.

    Returns per-link local rotations R (M,n,3,3), origin offsets p in the
    parent frame (M,n,3), and angular velocity / angular acceleration /
    origin acceleration in link coordinates, each (M,n,3).
    """
    Q = np.asarray(Q, dtype=float)
    Qd = np.asarray(Qd, dtype=float)
    Qdd = np.asarray(Qdd, dtype=float)
    M, n = Q.shape
    g = chain.gravity_vector if gravity is None else np.asarray(gravity, dtype=float)
    R, p = local_frames_batch(chain, Q)
    om = np.zeros((M, n, 3))
    omd = np.zeros((M, n, 3))
    acc = np.zeros((M, n, 3))
    om_prev = np.zeros((M, 3))
    omd_prev = np.zeros((M, 3))
    acc_prev = np.broadcast_to(-g, (M, 3))
    for i in range(n):
        Ri = R[:, i]
        w = om_prev.copy()
        w[:, 2] += Qd[:, i]
        om[:, i] = np.einsum("mji,mj->mi", Ri, w)
        wd = omd_prev.copy()
        wd[:, 2] += Qdd[:, i]
        wd += Qd[:, i, None] * np.cross(om_prev, _EZ)
        omd[:, i] = np.einsum("mji,mj->mi", Ri, wd)
        r = np.einsum("mji,mj->mi", Ri, p[:, i])
        acc[:, i] = (np.einsum("mji,mj->mi", Ri, acc_prev)
                     + np.cross(omd[:, i], r)
                     + np.cross(om[:, i], np.cross(om[:, i], r)))
        om_prev, omd_prev, acc_prev = om[:, i], omd[:, i], acc[:, i]
    return R, p, om, omd, acc


def regressor_stack(chain: KinematicChain, Q, Qd, Qdd,
                    gravity=None) -> np.ndarray:
    """Regressor Y for a batch of states, shape (M, n, 13n).

    Columns follow the DynamicParameters layout: 10 inertial columns per
    link, then per-joint friction columns [1, qd_j, sgn(qd_j)] placed in
    row j.  Y @ pi equals rnea torques plus linear friction.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    Qd = np.atleast_2d(np.asarray(Qd, dtype=float))
    Qdd = np.atleast_2d(np.asarray(Qdd, dtype=float))
    if Q.shape != Qd.shape or Q.shape != Qdd.shape:
        raise ValueError("Q, Qd, Qdd must share shape (M, n)")
    M, n = Q.shape
    if n != chain.n:
        raise ValueError(f"expected {chain.n} joints, got {n}")

    R, p, om, omd, acc = _forward_batch(chain, Q, Qd, Qdd, gravity)
    Y = np.zeros((M, n, (N_INERTIAL + N_FRICTION) * n))

    for i in range(n):
        # unit-parameter wrenches of link i about its own origin, in its
        # own frame: force rows F (M,10,3) and moment rows Nm (M,10,3)
        F = np.zeros((M, N_INERTIAL, 3))
        Nm = np.zeros((M, N_INERTIAL, 3))
        F[:, 0] = acc[:, i]
        W = _skew_batch(omd[:, i]) + _skew_batch(om[:, i]) @ _skew_batch(om[:, i])
        F[:, 1:4] = np.swapaxes(W, 1, 2)
        Nm[:, 1:4] = -np.swapaxes(_skew_batch(acc[:, i]), 1, 2)
        Ew = np.einsum("sab,mb->msa", _E_SYM, om[:, i])
        Ewd = np.einsum("sab,mb->msa", _E_SYM, omd[:, i])
        Nm[:, 4:10] = Ewd + np.cross(om[:, i, None, :], Ew)

        # propagate toward the base; torque of joint k is the z component
        # of the moment about the parent origin, expressed in frame k-1
        f, nm = F, Nm
        col = N_INERTIAL * i
        for k in range(i, -1, -1):
            Rf = np.einsum("mab,mpb->mpa", R[:, k], f)
            Rn = np.einsum("mab,mpb->mpa", R[:, k], nm) \
                + np.cross(p[:, k, None, :], Rf)
            Y[:, k, col:col + N_INERTIAL] = Rn[:, :, 2]
            f, nm = Rf, Rn

    base = N_INERTIAL * n
    rows = np.arange(M)
    for j in range(n):
        Y[rows, j, base + 3 * j] = 1.0
        Y[:, j, base + 3 * j + 1] = Qd[:, j]
        Y[:, j, base + 3 * j + 2] = np.sign(Qd[:, j])
    return Y


def regressor(chain: KinematicChain, state: JointState,
              gravity=None) -> np.ndarray:
    """Regressor of a single state, shape (n, 13n)."""
    q, qd, qdd = state.arrays()
    return regressor_stack(chain, q[None, :], qd[None, :], qdd[None, :],
                           gravity=gravity)[0]
