"""Three-stage identification at the motor-current level.

Stage 1 estimates the current-level dynamic coefficients (one block per
joint, since each joint divides the shared parameters by its own unknown
drive gain).  Stage 2 refines friction with a five-parameter sigmoid fitted
to low-velocity residual currents.  Stage 3 recovers the motor drive gains
by comparing data collected with and without a partially known payload,
falling back to a regrouped bounded solve where the per-joint systems lose
rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import N_INERTIAL, FrictionSet, friction_sigmoid, sigmoid
from .kinematics import KinematicChain
from .payload import PayloadSpec, payload_to_frame_n
from .reduction import BaseParameterMap, minimal_regressor_stack
from .dataio import SampleSet

BISQUARE_TUNING = 4.685
WEIGHT_TOL = 1e-6
WEIGHT_MAX_ITER = 50
CONDITION_LIMIT = 1e8
MIN_REGION_SAMPLES = 50
GAIN_LOWER_DEFAULT = 10.0
PIVOT_TOL_DEFAULT = 1e-10
MIXING_TOL = 1e-6


class EstimationError(RuntimeError):
    """An identification stage could not produce a trustworthy estimate."""


class ExcitationError(EstimationError):
    """The data does not excite the parameters well enough to solve."""


class IdentifiabilityError(EstimationError):
    """The requested parameters are structurally not identifiable."""


class ConvergenceError(EstimationError):
    """An iterative solve failed to converge from every starting point."""


# ---------------------------------------------------------------------------
# linear solvers

def _lstsq(stack: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    x, _, rank, _ = np.linalg.lstsq(stack, rhs, rcond=None)
    if rank < stack.shape[1]:
        # name the columns that a pivoted QR puts past the numerical rank
        _, _, piv = scipy.linalg.qr(stack, mode="economic", pivoting=True)
        dependent = sorted(int(k) for k in piv[rank:])
        raise IdentifiabilityError(
            f"rank-deficient stack (rank {rank} of {stack.shape[1]}); "
            f"dependent columns {dependent}")
    return x


def llse(stack: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Linear least squares via a rank-revealing factorization."""
    stack = np.asarray(stack, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if stack.ndim != 2 or stack.shape[0] < stack.shape[1]:
        raise ValueError("stack must be 2-D with at least as many rows "
                         "as columns")
    if not (np.all(np.isfinite(stack)) and np.all(np.isfinite(rhs))):
        raise ValueError("stack and rhs must be finite")
    return _lstsq(stack, rhs)


@dataclass(frozen=True)
class WeightMatrix:
    """Diagonal per-row weights, nonnegative and finite.

    Rows downweighted to exactly zero are dropped from the fit, which is
    how the bisquare function treats gross outliers.
    """

    w: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a 1-D nonnegative finite vector")
        object.__setattr__(self, "w", w)


def wlse(stack: np.ndarray, rhs: np.ndarray,
         weights: WeightMatrix | np.ndarray) -> np.ndarray:
    """Weighted least squares; unit weights reproduce llse exactly."""
    w = weights.w if isinstance(weights, WeightMatrix) else np.asarray(
        weights, dtype=float)
    stack = np.asarray(stack, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if w.shape != (stack.shape[0],):
        raise ValueError("one weight per stacked row required")
    sw = np.sqrt(w)
    return _lstsq(stack * sw[:, None], rhs * sw)


def _mad_scale(residual: np.ndarray) -> float:
    med = np.median(residual)
    return float(np.median(np.abs(residual - med)) / 0.6745)


def robust_weights(stack: np.ndarray, rhs: np.ndarray,
                   tuning: float = BISQUARE_TUNING, tol: float = WEIGHT_TOL,
                   max_iter: int = WEIGHT_MAX_ITER) -> WeightMatrix:
    """Bisquare IRLS weights for a linear model.

    Iterates weighted solves until the weights settle to within tol.  A
    degenerate residual scale (all residuals essentially zero) returns
    unit weights, since there is nothing to downweight.
    """
    stack = np.asarray(stack, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    floor = 1e-12 * max(1.0, float(np.sqrt(np.mean(rhs**2))))

    def solve(w):
        # residuals are insensitive to which minimizer is picked, so a
        # minimum-norm solve keeps IRLS usable on rank-deficient stacks
        sw = np.sqrt(w)
        x, _, _, _ = np.linalg.lstsq(stack * sw[:, None], rhs * sw,
                                     rcond=None)
        return x

    w = np.ones(stack.shape[0])
    x = solve(w)
    for it in range(1, max_iter + 1):
        r = rhs - stack @ x
        s = _mad_scale(r)
        if s <= floor:
            return WeightMatrix(np.ones_like(w), converged=True, iterations=it)
        u = r / (tuning * s)
        w_new = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)
        if np.max(np.abs(w_new - w)) < tol:
            return WeightMatrix(w_new, converged=True, iterations=it)
        w = w_new
        x = solve(w)
    return WeightMatrix(w, converged=False, iterations=max_iter)


# ---------------------------------------------------------------------------
# stage 1: current-level coefficients

@dataclass(frozen=True)
class CurrentCoefficients:
    """Per-joint current-level coefficient blocks.

    chi holds n blocks of length c; block j multiplies joint j's row of
    the minimal regressor.  Coordinates a joint's row cannot see (other
    joints' friction, its row-dependent columns) are stored as zero.
    """

    n: int
    chi: np.ndarray
    covariance_diag: np.ndarray | None = None
    conditions: tuple[float, ...] = ()
    sample_counts: tuple[int, ...] = ()

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float)
        if chi.ndim != 1 or chi.size % self.n:
            raise ValueError("chi must be a flat vector of n equal blocks")
        object.__setattr__(self, "chi", chi)

    @property
    def c(self) -> int:
        return self.chi.size // self.n

    def block(self, j: int) -> np.ndarray:
        return self.chi[j * self.c:(j + 1) * self.c]

    def as_matrix(self) -> np.ndarray:
        return self.chi.reshape(self.n, self.c)


def identify_coefficients(map_: BaseParameterMap, chain: KinematicChain,
                          samples: SampleSet) -> CurrentCoefficients:
    """Stage 1: robust weighted fit of each joint's coefficient block.

    Only samples in the joint's linearity region |qd_j| > threshold enter
    that joint's fit, where the three linear friction columns are valid.
    """
    n = map_.n
    U = minimal_regressor_stack(map_, chain, samples.q, samples.qd,
                                samples.qdd)
    mask = samples.mask
    chi = np.zeros((n, map_.c))
    covd = np.zeros((n, map_.c))
    conds = []
    counts = []
    for j in range(n):
        cols = np.concatenate([map_.joint_idcols[j], map_.friction_columns(j)])
        rows = mask[:, j]
        count = int(rows.sum())
        if count < cols.size + 10:
            raise ExcitationError(
                f"joint {j+1}: only {count} linearity-region samples for "
                f"{cols.size} coefficients; lengthen or enrich the trajectory")
        A = U[rows, j][:, cols]
        b = samples.v[rows, j]
        cond = float(np.linalg.cond(A))
        if cond > CONDITION_LIMIT:
            raise ExcitationError(
                f"joint {j+1}: regressor condition {cond:.3g} exceeds "
                f"{CONDITION_LIMIT:.0e}; the trajectory is not persistently "
                "exciting for this joint")
        wm = robust_weights(A, b)
        x = wlse(A, b, wm)
        chi[j, cols] = x
        # first-order variance estimate from the weighted residuals
        r = b - A @ x
        dof = max(count - cols.size, 1)
        sigma2 = float(np.sum(wm.w * r**2) / dof)
        Aw = A * np.sqrt(wm.w)[:, None]
        covd[j, cols] = sigma2 * np.diag(np.linalg.pinv(Aw.T @ Aw))
        conds.append(cond)
        counts.append(count)
    return CurrentCoefficients(n=n, chi=chi.ravel(),
                               covariance_diag=covd.ravel(),
                               conditions=tuple(conds),
                               sample_counts=tuple(counts))


def _chi_matrix(chi, n: int) -> np.ndarray:
    if isinstance(chi, CurrentCoefficients):
        return chi.as_matrix()
    chi = np.asarray(chi, dtype=float)
    return chi.reshape(n, -1)


def predict_currents(map_: BaseParameterMap, chain: KinematicChain, chi,
                     q, qd, qdd) -> np.ndarray:
    """Currents from the stage-1 model (linear friction included)."""
    single = np.asarray(q).ndim == 1
    q = np.atleast_2d(np.asarray(q, dtype=float))
    qd = np.atleast_2d(np.asarray(qd, dtype=float))
    qdd = np.atleast_2d(np.asarray(qdd, dtype=float))
    C = _chi_matrix(chi, map_.n)
    U = minimal_regressor_stack(map_, chain, q, qd, qdd)
    v = np.einsum("mjc,jc->mj", U, C)
    return v[0] if single else v


def friction_residual_currents(map_: BaseParameterMap, chain: KinematicChain,
                               chi, samples: SampleSet) -> np.ndarray:
    """Measured current minus the non-friction model part, all samples.

    The subtraction drops the three linear-friction columns per joint, so
    the result contains the joint's entire friction current plus noise.
    """
    C = _chi_matrix(chi, map_.n)
    c_in = map_.c_inertial
    U = minimal_regressor_stack(map_, chain, samples.q, samples.qd,
                                samples.qdd)
    inertial = np.einsum("mjc,jc->mj", U[:, :, :c_in], C[:, :c_in])
    return samples.v - inertial


def predict_currents_full(map_: BaseParameterMap, chain: KinematicChain, chi,
                          psi: FrictionSet, q, qd, qdd) -> np.ndarray:
    """Currents from the stage-2 model: inertial part plus sigmoid friction."""
    single = np.asarray(q).ndim == 1
    q = np.atleast_2d(np.asarray(q, dtype=float))
    qd = np.atleast_2d(np.asarray(qd, dtype=float))
    qdd = np.atleast_2d(np.asarray(qdd, dtype=float))
    C = _chi_matrix(chi, map_.n)
    c_in = map_.c_inertial
    U = minimal_regressor_stack(map_, chain, q, qd, qdd)
    v = np.einsum("mjc,jc->mj", U[:, :, :c_in], C[:, :c_in])
    v = v + friction_sigmoid(psi, qd)
    return v[0] if single else v


# ---------------------------------------------------------------------------
# stage 2: sigmoid friction fit

LM_MAX_ITER = 200
LM_FTOL = 1e-14
LM_GTOL = 1e-12


def _friction_model(p: np.ndarray, qd: np.ndarray):
    f_o, f_v, f_c, delta, nu = p
    s = sigmoid(delta * (nu + qd))
    return f_o + f_v * qd + f_c * s, s


def _friction_jacobian(p: np.ndarray, qd: np.ndarray,
                       s: np.ndarray) -> np.ndarray:
    f_c, delta, nu = p[2], p[3], p[4]
    ds = s * (1.0 - s)  # derivative of the sigmoid w.r.t. its argument
    J = np.empty((qd.size, 5))
    J[:, 0] = 1.0
    J[:, 1] = qd
    J[:, 2] = s
    J[:, 3] = f_c * ds * (nu + qd)
    J[:, 4] = f_c * ds * delta
    return J


def _lm_fit(qd: np.ndarray, y: np.ndarray, p0: np.ndarray,
            max_iter: int = LM_MAX_ITER):
    """Damped Gauss-Newton descent on the sigmoid friction residual.

    Only improving steps are accepted, so the objective history is
    non-increasing by construction.
    """
    p = np.asarray(p0, dtype=float).copy()
    f, s = _friction_model(p, qd)
    r = f - y
    obj = float(r @ r)
    history = [obj]
    lam = 1e-3
    for _ in range(max_iter):
        J = _friction_jacobian(p, qd, s)
        g = J.T @ r
        if np.max(np.abs(g)) < LM_GTOL * (1.0 + obj):
            break
        H = J.T @ J
        d = np.diag(H).copy()
        d[d < 1e-12] = 1e-12
        accepted = False
        for _boost in range(40):
            try:
                step = np.linalg.solve(H + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_try = p + step
            f_try, s_try = _friction_model(p_try, qd)
            r_try = f_try - y
            obj_try = float(r_try @ r_try)
            if np.isfinite(obj_try) and obj_try < obj:
                rel = (obj - obj_try) / max(obj, 1e-300)
                p, f, s, r, obj = p_try, f_try, s_try, r_try, obj_try
                history.append(obj)
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            break
        if rel < LM_FTOL:
            break
    return p, obj, history


def _mirror(p: np.ndarray) -> np.ndarray:
    # the sigmoid model is invariant under this reflection of parameters
    return np.array([p[0] + p[2], p[1], -p[2], -p[3], p[4]])


def _canonical(p: np.ndarray) -> np.ndarray:
    q = _mirror(p)
    return q if np.linalg.norm(q) < np.linalg.norm(p) else p


@dataclass(frozen=True)
class FrictionFit:
    """Stage-2 result: current-level sigmoid friction plus diagnostics."""

    friction: FrictionSet
    objectives: tuple[float, ...]
    iterations: tuple[int, ...]
    region_counts: tuple[int, ...]
    histories: tuple[tuple[float, ...], ...]


def fit_friction(qd: np.ndarray, residual_currents: np.ndarray,
                 threshold: float) -> FrictionFit:
    """Stage 2: per-joint sigmoid fit on low-velocity residual currents.

    Uses only samples with |qd_j| < threshold, where the sigmoid shape is
    distinguishable.  Eight deterministic starts cover the sign and scale
    ambiguity of (f_c, delta); the best objective wins, ties broken by the
    smaller parameter norm.  The model is invariant under a sign-reflection
    of (f_c, delta) with a compensating offset, so the winner is reported
    in the smaller-norm form of that pair.
    """
    qd = np.asarray(qd, dtype=float)
    vf = np.asarray(residual_currents, dtype=float)
    if qd.shape != vf.shape or qd.ndim != 2:
        raise ValueError("qd and residual currents must both be (M, n)")
    n = qd.shape[1]
    params = np.zeros((n, 5))
    objs, iters, counts, hists = [], [], [], []
    for j in range(n):
        region = np.abs(qd[:, j]) < threshold
        count = int(region.sum())
        if count < MIN_REGION_SAMPLES:
            raise ExcitationError(
                f"joint {j+1}: only {count} samples below {threshold} rad/s; "
                f"need at least {MIN_REGION_SAMPLES} for the friction fit")
        x = qd[region, j]
        y = vf[region, j]
        # affine prefit anchors the offset and viscous slope
        A = np.column_stack([np.ones_like(x), x])
        ab = _lstsq(A, y)
        resid0 = y - A @ ab
        fc_mag = max(2.0 * float(np.std(resid0)), 1e-3)
        starts = []
        for fc0 in (fc_mag, -fc_mag):
            for d0 in (15.0, 150.0, -15.0, -150.0):
                starts.append(np.array([ab[0] - 0.5 * fc0, ab[1],
                                        fc0, d0, 0.0]))
        candidates = []
        for p0 in starts:
            p_hat, obj, history = _lm_fit(x, y, p0)
            if np.isfinite(obj):
                candidates.append((obj, _canonical(p_hat), history))
        if not candidates:
            raise ConvergenceError(
                f"joint {j+1}: no friction fit start converged "
                f"(starts: {[list(np.round(s, 3)) for s in starts]})")
        best_obj = min(c[0] for c in candidates)
        tol = 1e-9 * (1.0 + best_obj)
        tied = [c for c in candidates if c[0] <= best_obj + tol]
        obj, p_hat, history = min(
            tied, key=lambda c: (c[0], float(np.linalg.norm(c[1]))))
        params[j] = p_hat
        objs.append(float(obj))
        iters.append(len(history) - 1)
        counts.append(count)
        hists.append(tuple(history))
    fs = FrictionSet(f_o=tuple(params[:, 0]), f_v=tuple(params[:, 1]),
                     f_c=tuple(params[:, 2]), delta=tuple(params[:, 3]),
                     nu=tuple(params[:, 4]))
    return FrictionFit(friction=fs, objectives=tuple(objs),
                       iterations=tuple(iters), region_counts=tuple(counts),
                       histories=tuple(hists))


# ---------------------------------------------------------------------------
# stage 3: motor drive gains

_KNOWN_COORDS = {"mass": (0,), "com": (1, 2, 3), "inertia": (4, 5, 6, 7, 8, 9)}


@dataclass(frozen=True)
class KnownPayload:
    """A payload whose listed parameter groups are trusted as exact.

    known lists any of 'mass', 'com', 'inertia'.  The center of mass only
    enters the linear model through the first moment, so knowing it
    requires knowing the mass; likewise the flange-frame inertia depends
    on both.
    """

    spec: PayloadSpec
    known: tuple[str, ...]

    def __post_init__(self):
        known = tuple(self.known)
        for k in known:
            if k not in _KNOWN_COORDS:
                raise ValueError(f"unknown payload parameter group {k!r}")
        if "com" in known and "mass" not in known:
            raise ValueError("knowing the payload com requires its mass")
        if "inertia" in known and not {"mass", "com"} <= set(known):
            raise ValueError("knowing the payload inertia requires mass "
                             "and com")
        object.__setattr__(self, "known", known)

    @property
    def coord_mask(self) -> np.ndarray:
        mask = np.zeros(N_INERTIAL, dtype=bool)
        for k in self.known:
            mask[list(_KNOWN_COORDS[k])] = True
        return mask


@dataclass(frozen=True)
class GainEstimate:
    """Per-joint drive gains with the solve structure that produced them.

    zeta holds each joint's solution [arm coefficients on that joint's
    active base columns; unknown payload parameters over the gain; gain
    reciprocal], with zeros on coordinates the solve regrouped away;
    identifiable_mask marks the surviving coordinates.
    """

    gains: np.ndarray
    zeta: tuple[np.ndarray, ...]
    identifiable_mask: tuple[np.ndarray, ...]
    columns: tuple[np.ndarray, ...]
    bounds: tuple[tuple[float, float], ...]
    full_rank: tuple[bool, ...]
    bounded: tuple[bool, ...]
    n_unknown: int


def _gain_solve(S, y, w, lam_bounds, pivot_tol, label, apply_bounds):
    sw = np.sqrt(w)
    Q, R, piv = scipy.linalg.qr(S * sw[:, None], mode="economic",
                                pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > pivot_tol * diag[0])) if diag[0] > 0 else 0
    p = S.shape[1]
    kidx = p - 1
    if rank == 0:
        raise ExcitationError(f"{label}: zero-rank gain system")
    ident = piv[:rank]
    if kidx not in ident:
        raise IdentifiabilityError(
            f"{label}: the drive gain is not identifiable; the known "
            "payload parameters do not separate it from the arm model")
    pos = int(np.flatnonzero(ident == kidx)[0])
    R1 = R[:rank, :rank]
    full_rank = rank == p
    if not full_rank:
        G = scipy.linalg.solve_triangular(R1, R[:rank, rank:])
        if np.max(np.abs(G[pos])) > MIXING_TOL:
            raise IdentifiabilityError(
                f"{label}: the gain coordinate regroups with unidentifiable "
                "payload directions; provide more payload knowledge")
    qy = (Q.T @ (y * sw))[:rank]
    lam = scipy.linalg.solve_triangular(R1, qy)
    bounded = False
    if apply_bounds and not full_rank:
        lo, hi = lam_bounds
        if not lo <= lam[pos] <= hi:
            clamped = float(np.clip(lam[pos], lo, hi))
            keep = np.arange(rank) != pos
            rest = _lstsq(R1[:, keep], qy - R1[:, pos] * clamped)
            lam = np.empty(rank)
            lam[pos] = clamped
            lam[keep] = rest
            bounded = True
    if lam[pos] <= 0:
        raise EstimationError(f"{label}: nonpositive gain coordinate; "
                              "the data contradicts a positive drive gain")
    zeta = np.zeros(p)
    zeta[ident] = lam
    mask = np.zeros(p, dtype=bool)
    mask[ident] = True
    return 1.0 / float(lam[pos]), zeta, mask, full_rank, bounded


def estimate_gains(samples_a: SampleSet, samples_b: SampleSet,
                   known_payload: KnownPayload, map_: BaseParameterMap,
                   chain: KinematicChain, chi, psi: FrictionSet,
                   bounds: tuple[float, float | None] = (GAIN_LOWER_DEFAULT,
                                                         None),
                   pivot_tol: float = PIVOT_TOL_DEFAULT) -> GainEstimate:
    """Stage 3: drive gains from paired runs without/with a payload.

    Per joint the friction-compensated currents of both runs are stacked
    against the joint's active base columns, the unknown payload parameters
    scaled by the gain reciprocal, and a single column carrying the known
    payload contribution times that reciprocal.  Joints whose rows carry
    internal column dependencies (on the UR10, the wrist joints do) come
    out rank-deficient and solve in regrouped coordinates with the gain
    reciprocal bounded; full-rank joints solve directly.  A missing upper
    bound defaults per joint to the largest gain already identified
    upstream.
    """
    n = map_.n
    kmask = known_payload.coord_mask
    if not kmask.any():
        raise IdentifiabilityError(
            "no payload parameters are marked known; the gain column of "
            "every joint's system is identically zero")
    pi_L = payload_to_frame_n(known_payload.spec)
    pi_k = pi_L[kmask]
    n_unknown = int((~kmask).sum())

    from .dynamics import regressor_stack as _full_stack

    U_a = minimal_regressor_stack(map_, chain, samples_a.q, samples_a.qd,
                                  samples_a.qdd)
    U_b = minimal_regressor_stack(map_, chain, samples_b.q, samples_b.qd,
                                  samples_b.qdd)
    Y_b = _full_stack(chain, samples_b.q, samples_b.qd, samples_b.qdd)
    P_b = Y_b[:, :, N_INERTIAL * (n - 1):N_INERTIAL * n]
    vf_a = friction_sigmoid(psi, samples_a.qd)
    vf_b = friction_sigmoid(psi, samples_b.qd)

    c_in = map_.c_inertial
    K = np.zeros(n)
    zeta, masks, cols_used, jbounds = [], [], [], []
    full_rank, bounded_flags = [], []
    for j in range(n):
        label = f"joint {j+1}"
        acols = np.flatnonzero(map_.joint_masks[j][:c_in])
        ra = samples_a.mask[:, j]
        rb = samples_b.mask[:, j]
        Aa = U_a[ra, j][:, acols]
        Ab = U_b[rb, j][:, acols]
        ya = samples_a.v[ra, j] - vf_a[ra, j]
        yb = samples_b.v[rb, j] - vf_b[rb, j]
        Pj = P_b[rb, j]
        Pu = Pj[:, ~kmask]
        kcol = Pj[:, kmask] @ pi_k
        scale = max(float(np.max(np.abs(kcol))), 1.0)
        if n_unknown and np.max(np.abs(Pu), initial=0.0) < 1e-9 * scale:
            raise IdentifiabilityError(
                f"{label}: the payload does not excite any unknown "
                "parameter; attach it eccentrically or mark more "
                "parameters known")
        p = acols.size + n_unknown + 1
        ma, mb = Aa.shape[0], Ab.shape[0]
        if ma + mb < p + 10:
            raise ExcitationError(
                f"{label}: {ma + mb} linearity-region samples for {p} "
                "unknowns; collect longer runs")
        S = np.zeros((ma + mb, p))
        S[:ma, :acols.size] = Aa
        S[ma:, :acols.size] = Ab
        S[ma:, acols.size:acols.size + n_unknown] = Pu
        S[ma:, -1] = kcol
        y = np.concatenate([ya, yb])

        k_lo = float(bounds[0])
        k_hi = bounds[1]
        if k_hi is None:
            k_hi = float(np.max(K[:j])) if j > 0 else np.inf
        else:
            k_hi = float(k_hi)
        if k_lo >= k_hi:
            raise EstimationError(
                f"{label}: infeasible gain bounds [{k_lo}, {k_hi}]")
        lam_bounds = (0.0 if np.isinf(k_hi) else 1.0 / k_hi, 1.0 / k_lo)

        wm = robust_weights(S, y)
        Kj, zj, mj, fr, bd = _gain_solve(S, y, wm.w, lam_bounds, pivot_tol,
                                         label, apply_bounds=True)
        K[j] = Kj
        zeta.append(zj)
        masks.append(mj)
        cols_used.append(acols)
        jbounds.append((k_lo, k_hi))
        full_rank.append(fr)
        bounded_flags.append(bd)
    return GainEstimate(gains=K, zeta=tuple(zeta),
                        identifiable_mask=tuple(masks),
                        columns=tuple(cols_used),
                        bounds=tuple(jbounds), full_rank=tuple(full_rank),
                        bounded=tuple(bounded_flags), n_unknown=n_unknown)


def ground_truth_gains(tau: np.ndarray, v: np.ndarray):
    """Reference gains as the mean torque/current ratio per joint.

    Samples with exactly zero current are rejected; the second return
    value counts the rejections per joint.
    """
    tau = np.atleast_2d(np.asarray(tau, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if tau.shape != v.shape:
        raise ValueError("torque and current arrays must match in shape")
    n = tau.shape[1]
    K = np.zeros(n)
    rejected = np.zeros(n, dtype=int)
    for j in range(n):
        ok = v[:, j] != 0.0
        rejected[j] = int((~ok).sum())
        if not ok.any():
            raise EstimationError(f"joint {j+1}: every sample has zero "
                                  "current; cannot form a ratio")
        K[j] = float(np.mean(tau[ok, j] / v[ok, j]))
    return K, rejected
