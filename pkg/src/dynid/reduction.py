"""Reduction of the full parameter set to an identifiable base set.

The full regressor has 13n columns but only a lower-dimensional column
space: some inertial parameters never influence joint torques and others
only act in fixed linear combinations.  Stacking the regressor over a
seeded batch of random probe states and rank-analyzing the inertial block
yields a basis of independent columns plus the recombination coefficients
of every remaining column.  Friction columns are structurally independent
per joint (each appears only in its own row) and are always kept, so the
sgn discontinuities never enter the rank decision.
"""

from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import N_FRICTION, N_INERTIAL, DynamicParameters, JointState, regressor_stack
from .kinematics import KinematicChain

PROBE_COUNT_DEFAULT = 200
SVD_TOL_DEFAULT = 1e-10
PROBE_Q_RANGE = np.pi
PROBE_QD_RANGE = 3.0
PROBE_QDD_RANGE = 10.0
# relative column-norm floor below which a column is structurally absent
# from a joint's regressor row
ACTIVE_COL_TOL = 1e-8


@dataclass(frozen=True)
class BaseParameterMap:
    """Projection from full dynamic parameters onto the identifiable base set.

    A single joint row sees only a subset of the base columns, and within a
    row some of those columns are mutually dependent even though the full
    stacked regressor separates them.  The map therefore also stores, per
    joint, the identifiable inertial columns together with regrouping
    coefficients that fold the remaining active columns onto them.

    Attributes:
        n: joint count.
        inertial_columns: indices (ascending) of the independent inertial
            columns within the 10n-column inertial block.
        recombination: (c_in, 10n - c_in) coefficients expressing every
            non-selected inertial column in the selected basis.
        joint_masks: (n, c) bool; True where a base column is present in
            the given joint's regressor row.
        joint_idcols: per joint, ascending indices (into 0..c_in-1) of the
            inertial base columns identifiable from that row alone.
        joint_depcols: per joint, the active but row-dependent columns.
        joint_regroup: per joint, (len(idcols), len(depcols)) coefficients
            expressing each dependent column in the identifiable ones.
        seed, n_probe, tolerance: probe metadata for reproducibility.
    """

    n: int
    inertial_columns: np.ndarray
    recombination: np.ndarray
    joint_masks: np.ndarray
    joint_idcols: tuple[np.ndarray, ...]
    joint_depcols: tuple[np.ndarray, ...]
    joint_regroup: tuple[np.ndarray, ...]
    seed: int
    n_probe: int
    tolerance: float

    @property
    def c_inertial(self) -> int:
        return len(self.inertial_columns)

    @property
    def c(self) -> int:
        """Total base parameter count including friction columns."""
        return self.c_inertial + N_FRICTION * self.n

    @property
    def excluded_columns(self) -> np.ndarray:
        """Inertial columns not selected, ascending; pairs with recombination."""
        all_cols = np.arange(N_INERTIAL * self.n)
        return np.setdiff1d(all_cols, self.inertial_columns)

    def friction_columns(self, j: int) -> np.ndarray:
        """Base-column indices of joint j's own friction triple."""
        return self.c_inertial + N_FRICTION * j + np.arange(N_FRICTION)

    def projection_matrix(self) -> np.ndarray:
        """(c, 13n) matrix P with base parameters = P @ full parameters."""
        n = self.n
        full = (N_INERTIAL + N_FRICTION) * n
        P = np.zeros((self.c, full))
        P[np.arange(self.c_inertial), self.inertial_columns] = 1.0
        P[:self.c_inertial, self.excluded_columns] = self.recombination
        fr0 = N_INERTIAL * n
        for k in range(N_FRICTION * n):
            P[self.c_inertial + k, fr0 + k] = 1.0
        return P

    def base_parameters(self, params: DynamicParameters) -> np.ndarray:
        if params.n != self.n:
            raise ValueError(f"map is for {self.n} joints, parameters have {params.n}")
        return self.projection_matrix() @ params.to_vector()

    def regroup_for_joint(self, j: int, coeffs: np.ndarray) -> np.ndarray:
        """Fold a full base-coefficient vector onto joint j's identifiable
        coordinates: entries on row-dependent columns move onto the
        identifiable ones, which is the only combination row j can see."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.c,):
            raise ValueError(f"expected coefficient vector of length {self.c}")
        out = np.zeros(self.c)
        ident = self.joint_idcols[j]
        dep = self.joint_depcols[j]
        out[ident] = coeffs[ident] + self.joint_regroup[j] @ coeffs[dep]
        fr = self.friction_columns(j)
        out[fr] = coeffs[fr]
        return out


def _check_chain(map_: BaseParameterMap, chain: KinematicChain):
    if chain.n != map_.n:
        raise ValueError(f"map is for {map_.n} joints, chain has {chain.n}")


def probe_states(n: int, n_probe: int, seed: int):
    """Seeded random probe states covering the identification envelope."""
    rng = np.random.default_rng(seed)
    Q = rng.uniform(-PROBE_Q_RANGE, PROBE_Q_RANGE, (n_probe, n))
    Qd = rng.uniform(-PROBE_QD_RANGE, PROBE_QD_RANGE, (n_probe, n))
    Qdd = rng.uniform(-PROBE_QDD_RANGE, PROBE_QDD_RANGE, (n_probe, n))
    return Q, Qd, Qdd


def compute_base_map(chain: KinematicChain, n_probe: int = PROBE_COUNT_DEFAULT,
                     seed: int = 0, tolerance: float = SVD_TOL_DEFAULT
                     ) -> BaseParameterMap:
    """Rank-analyze the stacked inertial regressor and build the base map.

    Rank comes from the singular spectrum (threshold tolerance * sigma_max);
    the independent columns are the first rank-many pivots of a
    column-pivoted QR, re-sorted ascending; recombination coefficients come
    from a least-squares solve against the selected basis.
    """
    n = chain.n
    Q, Qd, Qdd = probe_states(n, n_probe, seed)
    Y = regressor_stack(chain, Q, Qd, Qdd)
    stack = Y.reshape(n_probe * n, -1)
    A = stack[:, :N_INERTIAL * n]

    sing = scipy.linalg.svdvals(A)
    rank = int(np.sum(sing > tolerance * sing[0]))
    _, _, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    selected = np.sort(piv[:rank])
    rest = np.setdiff1d(np.arange(N_INERTIAL * n), selected)

    recomb, _, _, _ = np.linalg.lstsq(A[:, selected], A[:, rest], rcond=None)
    # structurally absent columns recombine to exactly nothing
    dead = np.linalg.norm(A[:, rest], axis=0) <= tolerance * sing[0]
    recomb[:, dead] = 0.0

    # per-joint presence of each base column, and the per-row identifiable
    # sub-basis with regrouping coefficients for the dependent columns
    c = rank + N_FRICTION * n
    masks = np.zeros((n, c), dtype=bool)
    idcols, depcols, regroups = [], [], []
    for j in range(n):
        rows = Y[:, j, :]
        b = rows[:, :N_INERTIAL * n][:, selected]
        norms = np.linalg.norm(b, axis=0)
        masks[j, :rank] = norms > ACTIVE_COL_TOL * max(norms.max(), 1e-300)
        fr = np.linalg.norm(rows[:, N_INERTIAL * n:], axis=0)
        masks[j, rank:] = fr > ACTIVE_COL_TOL * max(fr.max(), 1e-300)

        active = np.flatnonzero(masks[j, :rank])
        bj = b[:, active]
        sj = scipy.linalg.svdvals(bj)
        rj = int(np.sum(sj > tolerance * sj[0]))
        _, _, pj = scipy.linalg.qr(bj, mode="economic", pivoting=True)
        ident = np.sort(active[pj[:rj]])
        dep = np.setdiff1d(active, ident)
        G, _, _, _ = np.linalg.lstsq(b[:, ident], b[:, dep], rcond=None)
        idcols.append(ident)
        depcols.append(dep)
        regroups.append(G)

    return BaseParameterMap(
        n=n, inertial_columns=selected, recombination=recomb,
        joint_masks=masks, joint_idcols=tuple(idcols),
        joint_depcols=tuple(depcols), joint_regroup=tuple(regroups),
        seed=seed, n_probe=n_probe, tolerance=tolerance,
    )


def minimal_regressor_stack(map_: BaseParameterMap, chain: KinematicChain,
                            Q, Qd, Qdd, gravity=None) -> np.ndarray:
    """Minimal regressor for a batch of states, shape (M, n, c)."""
    _check_chain(map_, chain)
    Y = regressor_stack(chain, Q, Qd, Qdd, gravity=gravity)
    n = map_.n
    return np.concatenate(
        (Y[:, :, :N_INERTIAL * n][:, :, map_.inertial_columns],
         Y[:, :, N_INERTIAL * n:]), axis=2,
    )


def minimal_regressor(map_: BaseParameterMap, chain: KinematicChain,
                      state: JointState, gravity=None) -> np.ndarray:
    """Minimal regressor of one state, shape (n, c)."""
    q, qd, qdd = state.arrays()
    return minimal_regressor_stack(map_, chain, q[None, :], qd[None, :],
                                   qdd[None, :], gravity=gravity)[0]


def current_level_regressor(map_: BaseParameterMap, chain: KinematicChain,
                            state: JointState) -> np.ndarray:
    """Block-diagonal current-level regressor, shape (n, n*c).

    Row j holds joint j's minimal-regressor row in its own column block,
    matching a stacked per-joint coefficient vector chi.
    """
    Yb = minimal_regressor(map_, chain, state)
    n, c = Yb.shape
    U = np.zeros((n, n * c))
    for j in range(n):
        U[j, j * c:(j + 1) * c] = Yb[j]
    return U


def _write_npz(path, arrays: dict) -> None:
    # np.savez stamps zip entries with the current time; identical maps
    # must serialize to identical bytes, so write the archive by hand
    # with a fixed timestamp.
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr),
                                      allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy",
                                   date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def save_map(map_: BaseParameterMap, path) -> None:
    """Write the map to an npz file, numerically exact and byte-stable."""
    arrays = {
        "n": map_.n,
        "inertial_columns": map_.inertial_columns,
        "recombination": map_.recombination,
        "joint_masks": map_.joint_masks,
        "seed": map_.seed,
        "n_probe": map_.n_probe,
        "tolerance": map_.tolerance,
    }
    for j in range(map_.n):
        arrays[f"idcols_{j}"] = map_.joint_idcols[j]
        arrays[f"depcols_{j}"] = map_.joint_depcols[j]
        arrays[f"regroup_{j}"] = map_.joint_regroup[j]
    _write_npz(path, arrays)


def load_map(path) -> BaseParameterMap:
    with np.load(path) as z:
        n = int(z["n"])
        return BaseParameterMap(
            n=n,
            inertial_columns=z["inertial_columns"],
            recombination=z["recombination"],
            joint_masks=z["joint_masks"],
            joint_idcols=tuple(z[f"idcols_{j}"] for j in range(n)),
            joint_depcols=tuple(z[f"depcols_{j}"] for j in range(n)),
            joint_regroup=tuple(z[f"regroup_{j}"] for j in range(n)),
            seed=int(z["seed"]),
            n_probe=int(z["n_probe"]),
            tolerance=float(z["tolerance"]),
        )
