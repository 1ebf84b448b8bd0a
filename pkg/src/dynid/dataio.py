"""Data exchange and the synthetic plant.

Covers the on-disk formats (sample CSV, robot-model file, payload file),
derived-signal preprocessing (backward-difference acceleration, zero-phase
lowpass), and a simulator that produces current-level sample sets from a
plant model so every identification stage can be checked against known
ground truth.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

import numpy as np
import scipy.signal

from .dynamics import (
    N_INERTIAL,
    DynamicParameters,
    FrictionSet,
    InertialParameters,
    friction_sigmoid,
    regressor_stack,
)
from .kinematics import DhRow, KinematicChain
from .payload import PayloadSpec, apply_payload, payload_to_frame_n
from .trajectory import FourierTrajectory, RATE_DEFAULT, sample as sample_trajectory

QD_THRESHOLD_DEFAULT = 0.17  # rad/s; boundary of the low-velocity friction region
TIME_TOL = 1e-9


class SchemaError(ValueError):
    """A file does not conform to its documented schema."""


@dataclass(frozen=True)
class SampleSet:
    """Uniformly sampled joint-space data with motor currents.

    Attributes:
        t: (M,) timestamps [s], uniformly spaced.
        q, qd, qdd: (M, n) positions, velocities, accelerations.
        v: (M, n) motor currents [A].
        scenario: 'a' (arm only) or 'b' (payload attached).
        source: 'measured' or 'simulated'.
        qd_threshold: linearity-region boundary [rad/s].
    """

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    v: np.ndarray
    scenario: str = "a"
    source: str = "measured"
    qd_threshold: float = QD_THRESHOLD_DEFAULT

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise SchemaError("need at least two samples")
        arrays = {name: np.asarray(getattr(self, name), dtype=float)
                  for name in ("q", "qd", "qdd", "v")}
        n = arrays["q"].shape[1] if arrays["q"].ndim == 2 else 0
        for name, a in arrays.items():
            if a.ndim != 2 or a.shape != (t.size, n):
                raise SchemaError(f"{name} must have shape ({t.size}, {n})")
            if not np.all(np.isfinite(a)):
                bad = np.argwhere(~np.isfinite(a))[0]
                raise SchemaError(
                    f"non-finite value in {name} at row {bad[0]}, column {bad[1]}")
        d = np.diff(t)
        if np.any(d <= 0):
            raise SchemaError("timestamps must be strictly increasing")
        if np.max(np.abs(d - d[0])) > TIME_TOL:
            raise SchemaError("timestamps must be uniformly spaced")
        if self.scenario not in ("a", "b"):
            raise SchemaError(f"scenario must be 'a' or 'b', got {self.scenario!r}")
        if self.qd_threshold < 0:
            raise SchemaError("qd_threshold must be nonnegative")
        object.__setattr__(self, "t", t)
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return self.t.size

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def period(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def mask(self) -> np.ndarray:
        """(M, n) bool; True where |qd| exceeds the linearity threshold."""
        return np.abs(self.qd) > self.qd_threshold

    def with_threshold(self, qd_threshold: float) -> "SampleSet":
        return replace(self, qd_threshold=qd_threshold)


def merge_sample_sets(sets) -> SampleSet:
    """Concatenate runs into one set for identification.

    A single excitation trajectory can leave some parameter directions
    nearly unexcited, and measurement noise blows up along them; merging
    independently generated runs fills those gaps.  Timestamps are
    regenerated as one uniform grid (identification never uses them), and
    accelerations are kept from each run so no seam artifacts appear.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one sample set")
    first = sets[0]
    for s in sets[1:]:
        if s.n != first.n:
            raise SchemaError("sample sets disagree on joint count")
        if s.scenario != first.scenario:
            raise SchemaError("sample sets disagree on scenario tag")
        if abs(s.period - first.period) > TIME_TOL:
            raise SchemaError("sample sets disagree on sample period")
        if s.qd_threshold != first.qd_threshold:
            raise SchemaError("sample sets disagree on velocity threshold")
    if len(sets) == 1:
        return first
    m = sum(s.m for s in sets)
    return SampleSet(
        t=np.arange(m) * first.period,
        q=np.vstack([s.q for s in sets]),
        qd=np.vstack([s.qd for s in sets]),
        qdd=np.vstack([s.qdd for s in sets]),
        v=np.vstack([s.v for s in sets]),
        scenario=first.scenario,
        source=first.source,
        qd_threshold=first.qd_threshold,
    )


def differentiate(values: np.ndarray, period: float) -> np.ndarray:
    """Backward difference along axis 0; the first row copies the second."""
    values = np.asarray(values, dtype=float)
    if period <= 0:
        raise ValueError("period must be positive")
    out = np.empty_like(values)
    out[1:] = (values[1:] - values[:-1]) / period
    out[0] = out[1]
    return out


def lowpass(values: np.ndarray, cutoff: float = 10.0,
            rate: float = RATE_DEFAULT) -> np.ndarray:
    """Zero-phase second-order Butterworth lowpass along axis 0.

    The forward-backward pass squares the magnitude response, so the
    effective gain is |H(f)|^2 = 1 / (1 + (f/cutoff)^4) with no phase
    distortion.  Coefficients come from the bilinear transform at the
    given sample rate, making outputs reproducible for fixed inputs.
    """
    if not 0 < cutoff < rate / 2:
        raise ValueError("cutoff must lie in (0, rate/2)")
    b, a = scipy.signal.butter(2, cutoff / (rate / 2.0), btype="low")
    return scipy.signal.filtfilt(b, a, np.asarray(values, dtype=float), axis=0)


# ---------------------------------------------------------------------------
# sample CSV format: t,q1..qn,qd1..qdn,v1..vn,scenario

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_samples(samples: SampleSet, path) -> None:
    n = samples.n
    header = (["t"] + [f"q{j+1}" for j in range(n)]
              + [f"qd{j+1}" for j in range(n)]
              + [f"v{j+1}" for j in range(n)] + ["scenario"])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(samples.m):
            row = ([_fmt(samples.t[k])]
                   + [_fmt(x) for x in samples.q[k]]
                   + [_fmt(x) for x in samples.qd[k]]
                   + [_fmt(x) for x in samples.v[k]]
                   + [samples.scenario])
            fh.write(",".join(row) + "\n")


def read_samples(path, qd_threshold: float = QD_THRESHOLD_DEFAULT) -> SampleSet:
    """Read a sample CSV; acceleration is always derived, never stored."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 5 or header[0] != "t" or header[-1] != "scenario":
        raise SchemaError(f"{path}: header must be t,q1..qn,qd1..qdn,v1..vn,scenario")
    n, rem = divmod(len(header) - 2, 3)
    expected = (["t"] + [f"q{j+1}" for j in range(n)]
                + [f"qd{j+1}" for j in range(n)]
                + [f"v{j+1}" for j in range(n)] + ["scenario"])
    if rem != 0 or header != expected:
        raise SchemaError(f"{path}: header must be t,q1..qn,qd1..qdn,v1..vn,scenario")
    width = len(header)
    m = len(lines) - 1
    data = np.empty((m, width - 1))
    scenario = None
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != width:
            raise SchemaError(f"{path}: row {i} has {len(parts)} fields, "
                              f"expected {width}")
        try:
            data[i - 2] = [float(x) for x in parts[:-1]]
        except ValueError:
            raise SchemaError(f"{path}: row {i} has a non-numeric field") from None
        bad = np.flatnonzero(~np.isfinite(data[i - 2]))
        if bad.size:
            raise SchemaError(f"{path}: row {i}, column {header[bad[0]]} "
                              "is not finite")
        tag = parts[-1]
        if scenario is None:
            scenario = tag
        elif tag != scenario:
            raise SchemaError(f"{path}: row {i} changes scenario tag "
                              f"({scenario!r} -> {tag!r})")
    t = data[:, 0]
    q = data[:, 1:1 + n]
    qd = data[:, 1 + n:1 + 2 * n]
    v = data[:, 1 + 2 * n:1 + 3 * n]
    if len(t) >= 2:
        d = np.diff(t)
        if np.any(d <= 0) or np.max(np.abs(d - d[0])) > TIME_TOL:
            raise SchemaError(f"{path}: timestamps not uniformly increasing")
        qdd = differentiate(qd, float(d[0]))
    else:
        raise SchemaError(f"{path}: need at least two rows")
    return SampleSet(t=t, q=q, qd=qd, qdd=qdd, v=v, scenario=scenario,
                     source="measured", qd_threshold=qd_threshold)


# ---------------------------------------------------------------------------
# robot-model file: [meta], [gravity], [dh], [inertial.link_i],
# [friction.joint_j], [gains]

@dataclass(frozen=True)
class RobotModel:
    """A plant description: kinematics plus, when known, full dynamics."""

    name: str
    chain: KinematicChain
    links: tuple[InertialParameters, ...] | None = None
    friction: FrictionSet | None = None
    gains: tuple[float, ...] | None = None

    def __post_init__(self):
        n = self.chain.n
        if self.links is not None and len(self.links) != n:
            raise ValueError(f"expected {n} links")
        if self.friction is not None and self.friction.n != n:
            raise ValueError(f"expected friction for {n} joints")
        if self.gains is not None:
            g = np.asarray(self.gains, dtype=float)
            if g.shape != (n,) or np.any(g <= 0) or not np.all(np.isfinite(g)):
                raise ValueError("gains must be positive and finite per joint")
            object.__setattr__(self, "gains", tuple(float(x) for x in g))

    @property
    def is_complete(self) -> bool:
        return (self.links is not None and self.friction is not None
                and self.gains is not None)


def _new_parser() -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cfg.optionxform = str  # keys carry units and are case-significant
    return cfg


def _vec(cfg, section, key, length, path):
    try:
        raw = cfg[section][key]
    except KeyError:
        raise SchemaError(f"{path}: missing {key} in [{section}]") from None
    parts = raw.split()
    if len(parts) != length:
        raise SchemaError(f"{path}: {key} in [{section}] must have "
                          f"{length} values, got {len(parts)}")
    try:
        vals = np.array([float(x) for x in parts])
    except ValueError:
        raise SchemaError(f"{path}: {key} in [{section}] has a "
                          "non-numeric value") from None
    if not np.all(np.isfinite(vals)):
        raise SchemaError(f"{path}: {key} in [{section}] has a non-finite value")
    return vals


def _vecstr(values) -> str:
    return " ".join(_fmt(x) for x in np.atleast_1d(values))


def _write_chain(cfg, chain: KinematicChain):
    cfg["gravity"] = {"g_mps2": _vecstr(chain.gravity_vector)}
    rows = chain.rows
    cfg["dh"] = {
        "a_m": _vecstr([r.a for r in rows]),
        "alpha_rad": _vecstr([r.alpha for r in rows]),
        "d_m": _vecstr([r.d for r in rows]),
        "offset_rad": _vecstr([r.offset for r in rows]),
    }


def _read_chain(cfg, path) -> KinematicChain:
    for section in ("dh", "gravity"):
        if section not in cfg:
            raise SchemaError(f"{path}: missing [{section}] section")
    n = len(cfg["dh"].get("a_m", "").split())
    if n < 1:
        raise SchemaError(f"{path}: [dh] a_m must list at least one joint")
    a = _vec(cfg, "dh", "a_m", n, path)
    alpha = _vec(cfg, "dh", "alpha_rad", n, path)
    d = _vec(cfg, "dh", "d_m", n, path)
    off = _vec(cfg, "dh", "offset_rad", n, path)
    g = _vec(cfg, "gravity", "g_mps2", 3, path)
    rows = tuple(DhRow(a=a[i], alpha=alpha[i], d=d[i], offset=off[i])
                 for i in range(n))
    return KinematicChain(rows=rows, gravity=tuple(g))


def _write_friction(cfg, fs: FrictionSet, level: str):
    for j in range(fs.n):
        cfg[f"friction.joint_{j+1}"] = {
            "f_o": _fmt(fs.f_o[j]),
            "f_v": _fmt(fs.f_v[j]),
            "f_c": _fmt(fs.f_c[j]),
            "delta_s_rad": _fmt(fs.delta[j]),
            "nu_rad_s": _fmt(fs.nu[j]),
            "level": level,
        }


def _read_friction(cfg, n, path) -> tuple[FrictionSet, str]:
    cols = {k: [] for k in ("f_o", "f_v", "f_c", "delta_s_rad", "nu_rad_s")}
    levels = set()
    for j in range(n):
        section = f"friction.joint_{j+1}"
        if section not in cfg:
            raise SchemaError(f"{path}: missing [{section}] section")
        for k in cols:
            cols[k].append(float(_vec(cfg, section, k, 1, path)[0]))
        levels.add(cfg[section].get("level", "torque"))
    if len(levels) != 1:
        raise SchemaError(f"{path}: friction sections disagree on level")
    fs = FrictionSet(f_o=tuple(cols["f_o"]), f_v=tuple(cols["f_v"]),
                     f_c=tuple(cols["f_c"]), delta=tuple(cols["delta_s_rad"]),
                     nu=tuple(cols["nu_rad_s"]))
    return fs, levels.pop()


def write_robot_model(model: RobotModel, path,
                      provenance: str = "unspecified") -> None:
    cfg = _new_parser()
    cfg["meta"] = {"name": model.name, "kind": "plant",
                   "provenance": provenance}
    _write_chain(cfg, model.chain)
    if model.links is not None:
        for i, lk in enumerate(model.links):
            cfg[f"inertial.link_{i+1}"] = {
                "mass_kg": _fmt(lk.mass),
                "com_m": _vecstr(lk.com),
                "inertia_origin_kgm2": _vecstr(
                    np.array(lk.inertia_origin)[np.triu_indices(3)]),
            }
    if model.friction is not None:
        _write_friction(cfg, model.friction, level="torque")
    if model.gains is not None:
        cfg["gains"] = {"K_NmA": _vecstr(model.gains)}
    with open(path, "w") as fh:
        cfg.write(fh)


def read_robot_model(path) -> RobotModel:
    cfg = _new_parser()
    read = cfg.read(path)
    if not read:
        raise SchemaError(f"{path}: cannot read file")
    chain = _read_chain(cfg, path)
    n = chain.n
    name = cfg.get("meta", "name", fallback="unnamed")

    links = None
    if "inertial.link_1" in cfg:
        links = []
        for i in range(n):
            section = f"inertial.link_{i+1}"
            if section not in cfg:
                raise SchemaError(f"{path}: missing [{section}] section")
            mass = float(_vec(cfg, section, "mass_kg", 1, path)[0])
            com = _vec(cfg, section, "com_m", 3, path)
            iv = _vec(cfg, section, "inertia_origin_kgm2", 6, path)
            I0 = np.zeros((3, 3))
            I0[np.triu_indices(3)] = iv
            I0 = I0 + np.triu(I0, 1).T
            links.append(InertialParameters(
                mass=mass, first_moment=tuple(mass * com),
                inertia_origin=tuple(map(tuple, I0))))
        links = tuple(links)

    friction = None
    if "friction.joint_1" in cfg:
        friction, level = _read_friction(cfg, n, path)
        if level != "torque":
            raise SchemaError(f"{path}: plant friction must be torque-level")

    gains = None
    if "gains" in cfg:
        gains = tuple(_vec(cfg, "gains", "K_NmA", n, path))

    return RobotModel(name=name, chain=chain, links=links,
                      friction=friction, gains=gains)


# ---------------------------------------------------------------------------
# payload file

def write_payload(spec: PayloadSpec, path) -> None:
    cfg = _new_parser()
    cfg["payload"] = {
        "mass_kg": _fmt(spec.mass),
        "com_l_m": _vecstr(spec.com),
        "inertia_l_kgm2": _vecstr(
            np.array(spec.inertia_com)[np.triu_indices(3)]),
        "R_l_n": _vecstr(np.array(spec.R_l_n).ravel()),
        "t_l_n_m": _vecstr(spec.t_l_n),
    }
    with open(path, "w") as fh:
        cfg.write(fh)


def read_payload(path) -> PayloadSpec:
    cfg = _new_parser()
    if not cfg.read(path):
        raise SchemaError(f"{path}: cannot read file")
    if "payload" not in cfg:
        raise SchemaError(f"{path}: missing [payload] section")
    mass = float(_vec(cfg, "payload", "mass_kg", 1, path)[0])
    com = _vec(cfg, "payload", "com_l_m", 3, path)
    # off-diagonal inertia entries may be omitted (pure diagonal payload)
    n_iv = len(cfg["payload"].get("inertia_l_kgm2", "").split())
    if n_iv == 3:
        iv_diag = _vec(cfg, "payload", "inertia_l_kgm2", 3, path)
        I = np.diag(iv_diag)
    else:
        iv = _vec(cfg, "payload", "inertia_l_kgm2", 6, path)
        I = np.zeros((3, 3))
        I[np.triu_indices(3)] = iv
        I = I + np.triu(I, 1).T
    R = _vec(cfg, "payload", "R_l_n", 9, path).reshape(3, 3)
    t = _vec(cfg, "payload", "t_l_n_m", 3, path)
    return PayloadSpec(mass=mass, com=tuple(com), inertia_com=tuple(map(tuple, I)),
                       R_l_n=tuple(map(tuple, R)), t_l_n=tuple(t))


# ---------------------------------------------------------------------------
# synthetic plant

def simulate(model: RobotModel, traj: FourierTrajectory | None = None, *,
             states: tuple | None = None, rate: float = RATE_DEFAULT,
             duration: float | None = None, noise_v: float = 0.0,
             noise_qd: float = 0.0, seed: int = 0,
             payload: PayloadSpec | None = None,
             qd_threshold: float = QD_THRESHOLD_DEFAULT) -> SampleSet:
    """Run the plant over a trajectory and log current-level samples.

    Torques are evaluated on the backward-difference acceleration of the
    clean velocities, exactly the signal identification later rebuilds, so
    noiseless runs are model-consistent with their own stored data.  Seeded
    Gaussian noise is then added to the velocity and current channels, and
    the stored acceleration is re-derived from the noisy velocities.

    Args:
        model: complete plant (links, friction, gains all present).
        traj: excitation trajectory; alternatively pass states=(t, q, qd).
        noise_v / noise_qd: noise standard deviations [A] and [rad/s].
        payload: optional payload attached to the flange (scenario 'b').
    """
    if not model.is_complete:
        raise ValueError("simulate needs a complete plant "
                         "(inertial, friction, and gain sections)")
    if (traj is None) == (states is None):
        raise ValueError("pass exactly one of traj or states")
    if traj is not None:
        t, q, qd, _ = sample_trajectory(traj, rate=rate, duration=duration)
    else:
        t, q, qd = (np.asarray(x, dtype=float) for x in states)
    period = float(t[1] - t[0])
    qdd = differentiate(qd, period)

    links = model.links
    if payload is not None:
        params = DynamicParameters(links=links,
                                   friction=((0.0, 0.0, 0.0),) * model.chain.n)
        links = apply_payload(params, payload_to_frame_n(payload)).links

    n = model.chain.n
    Y = regressor_stack(model.chain, q, qd, qdd)
    pi_in = np.concatenate([lk.to_vector() for lk in links])
    tau = Y[:, :, :N_INERTIAL * n] @ pi_in + friction_sigmoid(model.friction, qd)
    v = tau / np.asarray(model.gains)

    rng = np.random.default_rng(seed)
    if noise_qd > 0:
        qd = qd + rng.normal(0.0, noise_qd, qd.shape)
    if noise_v > 0:
        v = v + rng.normal(0.0, noise_v, v.shape)

    return SampleSet(t=t, q=q, qd=qd, qdd=differentiate(qd, period), v=v,
                     scenario="b" if payload is not None else "a",
                     source="simulated", qd_threshold=qd_threshold)


def ur10_default_model() -> RobotModel:
    """Complete UR10-class plant with representative dynamics.

    Inertial values are rounded workshop estimates for an arm of this size;
    friction and gain values are chosen at realistic magnitudes.  The model
    serves as the package's reference plant for synthetic experiments.
    """
    from .kinematics import ur10_chain

    com = [(0.021, 0.000, 0.027),
           (-0.306, 0.000, 0.160),
           (-0.286, 0.000, 0.068),
           (0.000, -0.002, 0.018),
           (0.000, 0.002, 0.018),
           (0.000, 0.000, -0.026)]
    mass = [7.10, 12.70, 4.27, 2.00, 2.00, 0.365]
    inertia_com = [
        (0.0341, 0.0353, 0.0216),
        (0.0778, 1.0700, 1.0900),
        (0.0311, 0.4450, 0.4520),
        (0.0040, 0.0041, 0.0034),
        (0.0040, 0.0041, 0.0034),
        (0.00031, 0.00031, 0.00041),
    ]
    links = tuple(
        InertialParameters.from_com(mass[i], com[i], np.diag(inertia_com[i]))
        for i in range(6)
    )
    friction = FrictionSet(
        f_o=(-1.40, 1.30, -0.90, -0.45, -0.40, -0.50),
        f_v=(14.80, 13.90, 9.50, 3.60, 2.60, 2.70),
        f_c=(2.90, -3.40, 2.30, 1.10, 1.05, 1.30),
        delta=(60.0, -85.0, 130.0, 150.0, 300.0, 420.0),
        nu=(-0.016, -0.002, -0.005, -0.019, -0.012, -0.013),
    )
    gains = (13.9557, 13.8669, 11.5049, 11.5438, 11.6143, 11.4149)
    return RobotModel(name="ur10-default", chain=ur10_chain(), links=links,
                      friction=friction, gains=gains)
