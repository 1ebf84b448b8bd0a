import math

import numpy as np
import pytest

from dynid.dynamics import (DynamicParameters, FrictionSet, InertialParameters,
                            JointState, coriolis_vector, friction_linear,
                            friction_sigmoid, gravity_vector, inertia_matrix,
                            regressor, regressor_stack, rnea, sigmoid)
from dynid.kinematics import DhRow, KinematicChain, frame_chain, ur10_chain

# single link rotating about z, gravity along -y: the swing works against
# gravity, so tau = m g r cos(q)
PENDULUM = KinematicChain(rows=(DhRow(0.0, 0.0, 0.0),),
                          gravity=(0.0, -9.80665, 0.0))
PENDULUM_LINK = InertialParameters(mass=2.0, first_moment=(1.0, 0.0, 0.0),
                                   inertia_origin=((0.0,) * 3,) * 3)


def random_links(n, rng, physical=True):
    links = []
    for _ in range(n):
        m = rng.uniform(0.5, 10.0)
        com = rng.uniform(-0.3, 0.3, size=3)
        A = rng.uniform(-1.0, 1.0, size=(3, 3))
        Ic = A @ A.T * 0.05 + np.eye(3) * 0.01
        links.append(InertialParameters.from_com(m, com, Ic))
    return links


def zero_links(n):
    z = InertialParameters(mass=0.0, first_moment=(0.0, 0.0, 0.0),
                           inertia_origin=((0.0,) * 3,) * 3)
    return [z] * n


def random_state(n, rng):
    return JointState(q=tuple(rng.uniform(-np.pi, np.pi, n)),
                      qd=tuple(rng.uniform(-3.0, 3.0, n)),
                      qdd=tuple(rng.uniform(-10.0, 10.0, n)))


# ---------------------------------------------------------------------------
# rnea

def test_rnea_zero_parameters():
    chain = ur10_chain()
    st = JointState(q=(0.1,) * 6, qd=(1.0,) * 6, qdd=(-2.0,) * 6)
    assert np.array_equal(rnea(chain, zero_links(6), st), np.zeros(6))


def test_rnea_pendulum():
    st = JointState(q=(0.0,), qd=(0.0,), qdd=(0.0,))
    tau = rnea(PENDULUM, [PENDULUM_LINK], st)
    assert abs(tau[0] - 9.80665) < 1e-12
    for qv in (0.3, 1.0, -2.0):
        st = JointState(q=(qv,), qd=(0.0,), qdd=(0.0,))
        tau = rnea(PENDULUM, [PENDULUM_LINK], st)
        assert abs(tau[0] - 2.0 * 9.80665 * 0.5 * np.cos(qv)) < 1e-12


def test_rnea_dimension_mismatch():
    chain = ur10_chain()
    with pytest.raises(ValueError):
        rnea(chain, zero_links(5), JointState(q=(0,) * 6, qd=(0,) * 6,
                                              qdd=(0,) * 6))


def test_rnea_linear_in_parameters():
    chain = ur10_chain()
    rng = np.random.default_rng(5)
    st = random_state(6, rng)
    v1 = rng.normal(size=(6, 10))
    v2 = rng.normal(size=(6, 10))

    def links_of(V):
        out = []
        for row in V:
            I = np.array([[row[4], row[5], row[6]],
                          [row[5], row[7], row[8]],
                          [row[6], row[8], row[9]]])
            out.append(InertialParameters(mass=row[0],
                                          first_moment=tuple(row[1:4]),
                                          inertia_origin=I))
        return out

    t1 = rnea(chain, links_of(v1), st)
    t2 = rnea(chain, links_of(v2), st)
    t12 = rnea(chain, links_of(v1 + v2), st)
    tc = rnea(chain, links_of(2.5 * v1), st)
    assert np.max(np.abs(t12 - (t1 + t2))) < 1e-9
    assert np.max(np.abs(tc - 2.5 * t1)) < 1e-9


# ---------------------------------------------------------------------------
# Lagrangian oracle: assemble torques from energy derivatives alone

def _world_frames(chain, q):
    Ts = frame_chain(chain, q)
    return [T[:3, :3] for T in Ts[1:]], [T[:3, 3] for T in Ts[1:]], Ts


def _link_velocities(chain, q, qd):
    Ts = frame_chain(chain, q)
    n = chain.n
    w = np.zeros((n, 3))
    v = np.zeros((n, 3))
    w_prev = np.zeros(3)
    v_prev = np.zeros(3)
    for i in range(n):
        z_axis = Ts[i][:3, 2]
        w_i = w_prev + qd[i] * z_axis
        dp = Ts[i + 1][:3, 3] - Ts[i][:3, 3]
        v_i = v_prev + np.cross(w_i, dp)
        w[i], v[i] = w_i, v_i
        w_prev, v_prev = w_i, v_i
    return w, v


def _kinetic(chain, links, q, qd):
    Rs, _, _ = _world_frames(chain, q)
    w, v = _link_velocities(chain, q, qd)
    T = 0.0
    for i, lk in enumerate(links):
        R = Rs[i]
        h_w = R @ np.array(lk.first_moment)
        I_w = R @ np.array(lk.inertia_origin) @ R.T
        T += (0.5 * lk.mass * v[i] @ v[i] + v[i] @ np.cross(w[i], h_w)
              + 0.5 * w[i] @ I_w @ w[i])
    return T


def _potential(chain, links, q):
    Rs, ps, _ = _world_frames(chain, q)
    gvec = chain.gravity_vector
    U = 0.0
    for i, lk in enumerate(links):
        U -= gvec @ (lk.mass * ps[i] + Rs[i] @ np.array(lk.first_moment))
    return U


def _mass_from_energy(chain, links, q):
    # kinetic energy is exactly quadratic in qd, so polarization recovers M
    n = chain.n
    M = np.zeros((n, n))
    for j in range(n):
        ej = np.eye(n)[j]
        for k in range(j + 1, n):
            ek = np.eye(n)[k]
            M[j, k] = (_kinetic(chain, links, q, ej + ek)
                       - _kinetic(chain, links, q, ej)
                       - _kinetic(chain, links, q, ek))
            M[k, j] = M[j, k]
        M[j, j] = 2.0 * _kinetic(chain, links, q, ej)
    return M


def _lagrangian_tau(chain, links, q, qd, qdd, h=1e-6):
    n = chain.n
    tau = _mass_from_energy(chain, links, q) @ qdd
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        dM = (_mass_from_energy(chain, links, q + e)
              - _mass_from_energy(chain, links, q - e)) / (2 * h)
        tau += qd[j] * (dM @ qd)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        tau[k] -= (_kinetic(chain, links, q + e, qd)
                   - _kinetic(chain, links, q - e, qd)) / (2 * h)
        tau[k] += (_potential(chain, links, q + e)
                   - _potential(chain, links, q - e)) / (2 * h)
    return tau


def test_rnea_matches_lagrangian_oracle():
    chain = ur10_chain()
    rng = np.random.default_rng(0)
    links = random_links(6, rng)
    for _ in range(2):
        q = rng.uniform(-np.pi, np.pi, 6)
        qd = rng.uniform(-3, 3, 6)
        qdd = rng.uniform(-10, 10, 6)
        st = JointState(q=tuple(q), qd=tuple(qd), qdd=tuple(qdd))
        t_direct = rnea(chain, links, st)
        t_energy = _lagrangian_tau(chain, links, q, qd, qdd)
        assert np.max(np.abs(t_direct - t_energy)) < 1e-6


# ---------------------------------------------------------------------------
# equation-of-motion terms

def test_inertia_matrix_properties():
    chain = ur10_chain()
    rng = np.random.default_rng(1)
    links = random_links(6, rng)
    assert np.array_equal(inertia_matrix(chain, zero_links(6), np.zeros(6)),
                          np.zeros((6, 6)))
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 6)
        M = inertia_matrix(chain, links, q)
        assert np.max(np.abs(M - M.T)) < 1e-10
    # physical parameters give positive definite M
    assert np.all(np.linalg.eigvalsh(inertia_matrix(chain, links, q)) > 0)


def test_inertia_matrix_pendulum():
    # point mass carries its own origin-referenced inertia via Steiner
    point = InertialParameters.from_com(2.0, (0.5, 0.0, 0.0), np.zeros((3, 3)))
    M = inertia_matrix(PENDULUM, [point], np.zeros(1))
    # 2 kg at radius 0.5 m about the joint axis: I = m r^2 = 0.5
    assert abs(M[0, 0] - 0.5) < 1e-12


def test_coriolis_vector():
    chain = ur10_chain()
    rng = np.random.default_rng(2)
    links = random_links(6, rng)
    q = rng.uniform(-np.pi, np.pi, 6)
    qd = rng.uniform(-3, 3, 6)
    assert np.array_equal(coriolis_vector(chain, links, q, np.zeros(6)),
                          np.zeros(6))
    c1 = coriolis_vector(chain, links, q, qd)
    c2 = coriolis_vector(chain, links, q, 2.0 * qd)
    assert np.max(np.abs(c2 - 4.0 * c1)) < 1e-9


def test_term_decomposition():
    chain = ur10_chain()
    rng = np.random.default_rng(3)
    links = random_links(6, rng)
    for _ in range(10):
        q = rng.uniform(-np.pi, np.pi, 6)
        qd = rng.uniform(-3, 3, 6)
        qdd = rng.uniform(-10, 10, 6)
        st = JointState(q=tuple(q), qd=tuple(qd), qdd=tuple(qdd))
        total = rnea(chain, links, st)
        M = inertia_matrix(chain, links, q)
        c = coriolis_vector(chain, links, q, qd)
        g = gravity_vector(chain, links, q)
        assert np.max(np.abs(total - (M @ qdd + c + g))) < 1e-9


def test_gravity_vector_pendulum():
    assert np.array_equal(gravity_vector(PENDULUM, zero_links(1), np.zeros(1)),
                          np.zeros(1))
    g = gravity_vector(PENDULUM, [PENDULUM_LINK], np.array([0.3]))
    assert abs(g[0] - 2.0 * 9.80665 * 0.5 * np.cos(0.3)) < 1e-12


def test_energy_rate_consistency():
    # d/dt of the kinetic metric equals twice the Coriolis power:
    # qd' Mdot qd = 2 qd' C(q, qd) qd, with Mdot by finite differences
    chain = ur10_chain()
    rng = np.random.default_rng(4)
    links = random_links(6, rng)
    h = 1e-6
    for _ in range(5):
        q = rng.uniform(-np.pi, np.pi, 6)
        qd = rng.uniform(-2, 2, 6)
        Mdot = (inertia_matrix(chain, links, q + h * qd)
                - inertia_matrix(chain, links, q - h * qd)) / (2 * h)
        c = coriolis_vector(chain, links, q, qd)
        assert abs(qd @ Mdot @ qd - 2.0 * qd @ c) < 1e-5


# ---------------------------------------------------------------------------
# friction models

def test_friction_linear_values():
    tri = ((0.0, 1.0, 0.0),)
    assert friction_linear(tri, np.array([0.3]))[0] == pytest.approx(0.3)
    tri = ((0.7, 1.0, 0.4),)
    assert friction_linear(tri, np.array([0.0]))[0] == 0.7  # sgn(0) = 0
    # reference joint-1 row at qd = 1 rad/s, checked by hand:
    # -1.0066 + 1.0640 * 1 + 2.0506 * sgn(1) = 2.108
    tri = ((-1.0066, 1.0640, 2.0506),)
    assert friction_linear(tri, np.array([1.0]))[0] == pytest.approx(2.108)


def test_friction_linear_odd_without_offset():
    tri = ((0.0, 1.3, 0.8), (0.0, 0.4, 0.2))
    qd = np.array([0.7, -2.1])
    f_pos = friction_linear(tri, qd)
    f_neg = friction_linear(tri, -qd)
    assert np.array_equal(f_pos, -f_neg)


def test_friction_sigmoid_midpoint():
    fs = FrictionSet(f_o=(0.3,), f_v=(1.2,), f_c=(0.8,), delta=(25.0,),
                     nu=(0.04,))
    val = friction_sigmoid(fs, np.array([-0.04]))[0]
    assert val == pytest.approx(0.3 + 1.2 * (-0.04) + 0.4, abs=1e-12)


def test_friction_sigmoid_step_limit():
    fs = FrictionSet(f_o=(0.3,), f_v=(1.2,), f_c=(0.8,), delta=(1e6,),
                     nu=(0.0,))
    for qd in (0.5, -0.5, 0.01, -0.01):
        val = friction_sigmoid(fs, np.array([qd]))[0]
        step = 0.3 + 1.2 * qd + 0.8 * (1.0 if qd > 0 else 0.0)
        assert abs(val - step) < 1e-6


def test_friction_sigmoid_scalar_oracle():
    # reference joint-3 row evaluated by the raw formula
    f_v, f_o, f_c, delta, nu = 0.6796, -0.8120, 1.6478, 19.8251, -0.0053
    fs = FrictionSet(f_o=(f_o,), f_v=(f_v,), f_c=(f_c,), delta=(delta,),
                     nu=(nu,))
    qd = 0.1
    expected = f_o + f_v * qd + f_c / (1.0 + math.exp(-delta * (nu + qd)))
    assert friction_sigmoid(fs, np.array([qd]))[0] == pytest.approx(
        expected, abs=1e-15)


def test_friction_set_from_linear():
    fs = FrictionSet.from_linear([0.7], [1.0], [0.4])
    for qd in (0.5, -0.5, 1e-3, -1e-3):
        lin = friction_linear(((0.7, 1.0, 0.4),), np.array([qd]))[0]
        assert friction_sigmoid(fs, np.array([qd]))[0] == pytest.approx(
            lin, abs=1e-12)
    # sgn(0) = 0 convention carries over: the sigmoid sits at its midpoint
    assert friction_sigmoid(fs, np.array([0.0]))[0] == pytest.approx(0.7)


def test_sigmoid_saturation():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(1000.0) == pytest.approx(1.0)
    assert sigmoid(-1000.0) == pytest.approx(0.0)


# ---------------------------------------------------------------------------
# regressor

def test_regressor_identity():
    chain = ur10_chain()
    rng = np.random.default_rng(6)
    links = random_links(6, rng)
    tri = rng.uniform(-2, 2, size=(6, 3))
    params = DynamicParameters(links=tuple(links),
                               friction=tuple(map(tuple, tri)))
    pi = params.to_vector()
    for _ in range(100):
        st = random_state(6, rng)
        Y = regressor(chain, st)
        ref = rnea(chain, links, st) + friction_linear(tri, np.asarray(st.qd))
        assert np.max(np.abs(Y @ pi - ref)) < 1e-9


def test_regressor_static_structure():
    chain = ur10_chain()
    st = JointState(q=(0.4, -0.2, 0.9, 0.1, -1.2, 0.5), qd=(0.0,) * 6,
                    qdd=(0.0,) * 6)
    Y = regressor(chain, st)
    for j in range(6):
        block = Y[:, 60 + 3 * j:60 + 3 * j + 3]
        expect = np.zeros((6, 3))
        expect[j, 0] = 1.0  # offset column; velocity and sign columns vanish
        assert np.array_equal(block, expect)


def test_regressor_mass_column():
    # the mass column of link i is the torque of a unit point mass at the
    # frame-i origin
    chain = ur10_chain()
    rng = np.random.default_rng(8)
    q = rng.uniform(-np.pi, np.pi, 6)
    st = JointState(q=tuple(q), qd=(0.0,) * 6, qdd=(0.0,) * 6)
    Y = regressor(chain, st)
    for i in range(6):
        links = zero_links(6).copy()
        links[i] = InertialParameters(mass=1.0, first_moment=(0.0, 0.0, 0.0),
                                      inertia_origin=((0.0,) * 3,) * 3)
        tau = rnea(chain, links, st)
        assert np.max(np.abs(Y[:, 10 * i] - tau)) < 1e-12


def test_regressor_stack_matches_single():
    chain = ur10_chain()
    rng = np.random.default_rng(9)
    Q = rng.uniform(-np.pi, np.pi, (5, 6))
    Qd = rng.uniform(-3, 3, (5, 6))
    Qdd = rng.uniform(-10, 10, (5, 6))
    Ys = regressor_stack(chain, Q, Qd, Qdd)
    for k in range(5):
        st = JointState(q=tuple(Q[k]), qd=tuple(Qd[k]), qdd=tuple(Qdd[k]))
        assert np.array_equal(Ys[k], regressor(chain, st))


# ---------------------------------------------------------------------------
# parameter containers

def test_inertial_parameters_steiner_round_trip():
    rng = np.random.default_rng(10)
    m = 3.2
    com = np.array([0.05, -0.02, 0.11])
    A = rng.uniform(-1, 1, (3, 3))
    Ic = A @ A.T * 0.01 + np.eye(3) * 0.005
    lk = InertialParameters.from_com(m, com, Ic)
    assert np.allclose(lk.com, com, atol=1e-14)
    assert np.allclose(lk.inertia_com, Ic, atol=1e-14)
    assert np.allclose(np.array(lk.first_moment), m * com, atol=1e-14)


def test_inertial_parameters_validation():
    with pytest.raises(ValueError):
        InertialParameters(mass=1.0, first_moment=(0.0, 0.0, 0.0),
                           inertia_origin=((0, 1, 0), (0, 0, 0), (0, 0, 0)))
    with pytest.raises(ValueError):
        InertialParameters.from_com(-1.0, (0, 0, 0), np.eye(3))


def test_dynamic_parameters_vector_layout():
    rng = np.random.default_rng(12)
    links = random_links(2, rng)
    tri = ((0.1, 0.2, 0.3), (0.4, 0.5, 0.6))
    params = DynamicParameters(links=tuple(links), friction=tri)
    vec = params.to_vector()
    assert vec.shape == (26,)
    assert vec[0] == links[0].mass
    assert np.array_equal(vec[20:], [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    back = InertialParameters.from_vector(vec[10:20])
    assert back.mass == links[1].mass
    assert np.array_equal(np.array(back.inertia_origin),
                          np.array(links[1].inertia_origin))
