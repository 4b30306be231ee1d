"""Convex programs ``min f(x) + g(e)  s.t.  a x + e = y`` for l1/l2 norm pairs.

Every program runs through one linearized augmented-Lagrangian engine
(:func:`_alm`). With an identity coupling on ``e`` the e-block is updated by
its exact prox; the x-block always takes a single linearized proximal step
of length ``1 / (mu * rho(a.T a))``. The multiplier follows the usual
ascent step and the penalty ``mu`` grows geometrically up to a cap.

Programs whose optimum is an LP vertex (l1 on every block) are finished
exactly. Every ``POLISH_EVERY`` iterations, and once at the end, the iterate
is replaced by an exact fit on a guessed support, moved to a vertex without
raising the objective, and tested for optimality by repairing the multiplier
into a dual certificate. A certified vertex ends the solve early and counts
as converged. Small problems also get a few primal simplex pivots.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.linalg

from .numcore import shrink_l2, spectral_norm_sq

__all__ = [
    "Norm",
    "ComboProgram",
    "SolverConfig",
    "RPCA_CONFIG",
    "SparseSolution",
    "ProjectionVariant",
    "solve_combo",
    "solve_l1l1",
    "solve_basis_pursuit",
    "solve_projected",
    "solve_l2l2_closed",
    "lp_oracle_l1l1",
    "lp_oracle_basis_pursuit",
    "OracleSizeError",
]

log = logging.getLogger(__name__)


class Norm(str, Enum):
    L1 = "l1"
    L2 = "l2"


@dataclass(frozen=True)
class ComboProgram:
    x_norm: Norm = Norm.L1
    e_norm: Norm = Norm.L1

    def __post_init__(self):
        object.__setattr__(self, "x_norm", Norm(self.x_norm))
        object.__setattr__(self, "e_norm", Norm(self.e_norm))

    @property
    def name(self) -> str:
        return f"{self.x_norm.value}/{self.e_norm.value}"


@dataclass(frozen=True)
class SolverConfig:
    """Augmented-Lagrangian settings.

    ``mu0=None`` means ``1.25 / ||y||_2`` for the sparse programs (and
    ``1.25 / ||D||_2`` for RPCA), which keeps every solve scale-equivariant.
    The penalty is multiplied by ``mu_growth`` each iteration and capped at
    ``mu_max_factor * mu0``.
    """

    max_iters: int = 2000
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    mu0: float | None = None
    mu_growth: float = 1.02
    mu_max_factor: float = 10.0
    polish: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ValueError("tolerances must be positive")
        if self.mu0 is not None and self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.mu_growth < 1:
            raise ValueError("mu_growth must be >= 1")
        if self.mu_max_factor < 1:
            raise ValueError("mu_max_factor must be >= 1")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


# inexact-ALM schedule for principal component pursuit; growth 1.5 (the usual
# choice) can stall at a feasible but suboptimal split on thin matrices
RPCA_CONFIG = SolverConfig(max_iters=1000, mu_growth=1.1, mu_max_factor=1e7, polish=False)

# how often (in iterations) the l1 programs try to finish early by polishing
POLISH_EVERY = 200


@dataclass
class SparseSolution:
    x: np.ndarray
    e: np.ndarray
    iters: int
    primal_residual: float
    objective: float
    converged: bool
    history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    dual: np.ndarray | None = field(default=None, repr=False)
    polished: bool = False

    def nnz(self, tol: float = 1e-6) -> int:
        return int(np.count_nonzero(np.abs(self.x) > tol) + np.count_nonzero(np.abs(self.e) > tol))


class ProjectionVariant(str, Enum):
    SPARSE_E = "sparse_e"  # Phi y = Phi (A x + e), e in pixel space
    PROJECTED_E = "projected_e"  # Phi y = Phi A x + e', e' in feature space


# unchecked soft threshold for the inner loop: v - clip(v, -t, t)
_PROX = {"l1": lambda v, t: v - np.clip(v, -t, t), "l2": shrink_l2, "zero": lambda v, t: np.zeros_like(v)}
_NORM = {
    "l1": lambda v: float(np.abs(v).sum()),
    "l2": lambda v: float(np.linalg.norm(v)),
    "zero": lambda v: 0.0,
}


def _as_inputs(a, y):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if a.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: a is {a.shape[0]}x{a.shape[1]}, y has length {y.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    return a, y


def _alm(a, y, fx: str, ge: str, cfg: SolverConfig, coupling=None) -> SparseSolution:
    m, n = a.shape
    ne = m if coupling is None else coupling.shape[1]
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        return SparseSolution(np.zeros(n), np.zeros(ne), 0, 0.0, 0.0, True, np.zeros(0), np.zeros(m))

    prox_f, prox_g = _PROX[fx], _PROX[ge]
    norm_f, norm_g = _NORM[fx], _NORM[ge]
    tau_x = spectral_norm_sq(a)
    if tau_x == 0.0:
        tau_x = 1.0
    tau_e = 1.0 if coupling is None or coupling.shape[1] == 0 else spectral_norm_sq(coupling)

    mu = cfg.mu0 if cfg.mu0 is not None else 1.25 / ny
    mu_max = mu * cfg.mu_max_factor
    x = np.zeros(n)
    e = np.zeros(ne)
    lam = np.zeros(m)
    ce = np.zeros(m)
    history = np.empty(cfg.max_iters)
    can_polish = cfg.polish and fx == "l1" and ge in ("l1", "zero")
    with_e = ge == "l1"
    converged = False
    it = 0
    ax = np.zeros(m)

    for it in range(1, cfg.max_iters + 1):
        e_old, x_old = e, x
        shifted = y + lam / mu
        # e-block
        if coupling is None:
            e = prox_g(shifted - ax, 1.0 / mu)
            ce = e
        else:
            grad_e = coupling.T @ (ax + ce - shifted)
            e = prox_g(e - grad_e / tau_e, 1.0 / (mu * tau_e))
            ce = coupling @ e
        # x-block, one linearized step
        grad_x = a.T @ (ax + ce - shifted)
        x = prox_f(x - grad_x / tau_x, 1.0 / (mu * tau_x))
        ax = a @ x
        r = y - ax - ce
        lam = lam + mu * r
        history[it - 1] = norm_f(x) + norm_g(e)

        res = math.sqrt(r @ r)
        dx, de = x - x_old, e - e_old
        step = math.sqrt(dx @ dx + de @ de)
        if res <= cfg.tol_primal * ny and step <= cfg.tol_dual * ny:
            converged = True
            break
        if can_polish and it % POLISH_EVERY == 0 and res <= 1e-3 * ny:
            trial = _snapshot(x, e, it, y, ax, ce, ny, norm_f, norm_g, history, lam, False)
            if _polish(a, y, trial, coupling, with_e, cfg):
                return trial
        mu = min(mu * cfg.mu_growth, mu_max)

    sol = _snapshot(x, e, it, y, ax, ce, ny, norm_f, norm_g, history, lam, converged)
    if not converged:
        log.debug("ALM hit max_iters=%d with relative residual %.3g", cfg.max_iters, sol.primal_residual)
    if can_polish:
        _polish(a, y, sol, coupling, with_e, cfg)
    return sol


def _snapshot(x, e, it, y, ax, ce, ny, norm_f, norm_g, history, lam, converged) -> SparseSolution:
    return SparseSolution(
        x=x, e=e, iters=it,
        primal_residual=float(np.linalg.norm(y - ax - ce) / ny),
        objective=norm_f(x) + norm_g(e), converged=converged,
        history=history[:it].copy(), dual=lam,
    )


def _polish(a, y, sol: SparseSolution, coupling, with_e: bool, cfg: SolverConfig,
            max_pivots: int | None = None) -> bool:
    """Finish an l1 program exactly, keeping the result only if it is no worse.

    The iterate is made exactly feasible (or replaced by a better exact fit on
    a guessed support), moved to a vertex of the feasible polyhedron without
    increasing the objective, and improved by primal simplex pivots. Returns
    True when the final basis has no improving column, which proves optimality.
    """
    m, n = a.shape
    if with_e:
        big = np.hstack([a, np.eye(m) if coupling is None else coupling])
        z = np.concatenate([sol.x, sol.e])
    else:
        big = a
        z = sol.x.copy()
    identity = with_e and coupling is None
    ny = np.linalg.norm(y)
    feas_tol = 1e-10 * ny

    r = y - big @ z
    start = z.copy()
    if identity:
        start[n:] += r
    else:
        start += np.linalg.lstsq(big, r, rcond=None)[0]
    best = None
    score = big.T @ sol.dual
    for supp in _candidate_supports(z, score, m):
        cand = _fit_with_identity(a, y, supp) if identity else None
        if cand is None:
            zs, *_ = np.linalg.lstsq(big[:, supp], y, rcond=None)
            cand = np.zeros_like(z)
            cand[supp] = zs
        if np.linalg.norm(y - big @ cand) > feas_tol:
            continue
        if best is None or np.abs(cand).sum() < np.abs(best).sum():
            best = cand
    # the repaired iterate is dense, so a support fit is preferred unless
    # it is clearly worse
    if np.linalg.norm(y - big @ start) <= feas_tol and (
            best is None or np.abs(start).sum() < np.abs(best).sum() * (1 - 1e-9)):
        best = start
    if best is None:
        return False

    vertex = _purify(big, best, n if identity else None)
    cand = vertex if np.linalg.norm(y - big @ vertex) <= feas_tol else best
    # dropping entries from a vertex leaves independent columns: still a vertex
    at_vertex = cand is vertex
    cand = _drop_negligible(big, y, cand, n if identity else None, feas_tol)
    certified = _dual_certificate(big, y, cand, sol.dual, n if identity else None)
    if not certified and big.shape[0] <= SIMPLEX_MAX_ROWS and at_vertex:
        if identity:
            b, yb = big, y
        else:
            # simplex needs independent rows; project onto the range of big
            u, sv, _ = np.linalg.svd(big, full_matrices=False)
            rank = int(np.count_nonzero(sv > 1e-10 * sv[0])) if sv.size else 0
            b, yb = u[:, :rank].T @ big, u[:, :rank].T @ y
        limit = 2 * b.shape[0] + 20 if max_pivots is None else max_pivots
        simp, ok = _simplex(b, yb, cand, limit, n if identity else None)
        if simp is not None and np.linalg.norm(y - big @ simp) <= feas_tol:
            cand, certified = simp, ok
    obj = float(np.abs(cand).sum())
    sol.x = cand[:n]
    if with_e:
        sol.e = cand[n:]
    sol.objective = obj
    sol.primal_residual = float(np.linalg.norm(y - big @ cand) / ny)
    sol.polished = True
    sol.converged = sol.converged or certified
    return certified


# entries below this fraction of the largest are treated as structural zeros
SUPPORT_RTOL = 1e-12
# entries this small relative to the largest are rounding noise when certifying
NEGLIGIBLE_RTOL = 1e-9
# the dense simplex finish is only used on problems with at most this many rows
SIMPLEX_MAX_ROWS = 64
# slack allowed in the dual constraints |b_j . lambda| <= 1 of a certificate
CERT_TOL = 1e-9


def _drop_negligible(big, y, z, n_x, feas_tol) -> np.ndarray:
    """Refit ``z`` without entries that are zero up to rounding.

    Degenerate vertices carry basic variables at about 1e-15; left in, they
    would pin the dual multiplier on rows where it is actually free.
    """
    mags = np.abs(z)
    keep = mags > NEGLIGIBLE_RTOL * mags.max(initial=0.0)
    if keep.all() or not keep.any() or np.array_equal(keep, mags > 0):
        return z
    supp = np.flatnonzero(keep)
    fit = _fit_with_identity(big[:, :n_x], y, supp) if n_x is not None else None
    if fit is None:
        zs, *_ = np.linalg.lstsq(big[:, supp], y, rcond=None)
        fit = np.zeros_like(z)
        fit[supp] = zs
    if np.linalg.norm(y - big @ fit) > feas_tol or np.abs(fit).sum() > mags.sum() * (1 + 1e-12):
        return z
    return fit


def _dual_certificate(big, y, z, lam, n_x=None, rounds: int = 60, per_round: int = 5) -> bool:
    """Check optimality of a feasible ``z`` by repairing the multiplier ``lam``.

    Complementary slackness asks ``b_j . lambda = sign(z_j)`` on the support
    of ``z``. The smallest correction of ``lam`` meeting those equalities is
    computed; constraints it violates are then held at their bound (allowed
    for zero entries of ``z``) and the correction recomputed. Any multiplier
    found this way that satisfies every dual constraint proves
    ``y . lambda = ||z||_1`` is a matching lower bound. With ``n_x`` set,
    identity columns are handled by fixing entries of ``lambda`` directly.
    """
    if lam is None:
        return False
    lam0 = np.array(lam, dtype=float)
    supp = np.flatnonzero(z)
    sig = np.sign(z[supp])
    if n_x is None:
        cols, tgt, pins = list(supp), list(sig), {}
        n_cols = big.shape[1]
    else:
        sx = supp[supp < n_x]
        cols, tgt = list(sx), list(sig[:sx.size])
        pins = dict(zip((supp[sx.size:] - n_x).tolist(), sig[sx.size:].tolist()))
        n_cols = n_x
    m = big.shape[0]
    obj = float(np.abs(z).sum())
    for _ in range(rounds):
        lam = lam0.copy()
        fixed = np.fromiter(pins, dtype=int, count=len(pins))
        lam[fixed] = [pins[i] for i in fixed]
        free = np.ones(m, dtype=bool)
        free[fixed] = False
        c = np.asarray(cols, dtype=int)
        t = np.asarray(tgt, dtype=float)
        if c.size:
            rhs = t - big[:, c].T @ lam
            lam[free] += np.linalg.lstsq(big[np.ix_(free, c)].T, rhs, rcond=None)[0]
            if not np.all(np.isfinite(lam)) or np.abs(big[:, c].T @ lam - t).max() > CERT_TOL:
                return False  # the held constraints are inconsistent
        g = big[:, :n_cols].T @ lam
        viol = np.abs(g) - 1.0
        if n_x is not None:
            viol = np.concatenate([viol, np.where(free, np.abs(lam) - 1.0, -1.0)])
        if viol.max(initial=-1.0) <= CERT_TOL:
            return obj - float(y @ lam) <= 1e-9 * max(1.0, obj)
        for q in np.argsort(-viol, kind="stable")[:per_round]:
            if viol[q] <= CERT_TOL:
                break
            if q < n_cols:
                cols.append(int(q))
                tgt.append(float(np.sign(g[q])))
            else:
                i = int(q - n_cols)
                pins[i] = float(np.sign(lam[i]))
    return False


def _null_vector(b, supp, n_x, zs):
    """A unit null vector of ``b[:, supp]``, or None if the columns are independent.

    More columns than rows are always dependent, so only the ``rows + 1``
    smallest entries (by ``|zs|``) are factored. With ``n_x`` set, columns
    from ``n_x`` on are identity columns and only the coefficient block on
    the rows they do not own needs factoring.
    """
    if n_x is None:
        rows = b.shape[0]
        pick = np.arange(len(supp))
        if len(supp) > rows:
            pick = np.sort(np.argsort(np.abs(zs), kind="stable")[:rows + 1])
        _, sv, vt = np.linalg.svd(b[:, supp[pick]], full_matrices=True)
        rank = int(np.count_nonzero(sv > 1e-10 * max(sv[0], 1.0))) if sv.size else 0
        if rank == pick.size:
            return None
        d = np.zeros(len(supp))
        d[pick] = vt[rank]
        return d
    sx, se = supp[supp < n_x], supp[supp >= n_x] - n_x
    if sx.size == 0:
        return None
    free = np.ones(b.shape[0], dtype=bool)
    free[se] = False
    sub = b[np.ix_(free, sx)]
    _, sv, vt = np.linalg.svd(sub, full_matrices=True)
    rank = int(np.count_nonzero(sv > 1e-10 * max(sv[0], 1.0))) if sv.size else 0
    if rank == sx.size:
        return None
    u = vt[rank]
    d = np.zeros(len(supp))
    d[:sx.size] = u
    d[sx.size:] = -(b[np.ix_(se, sx)] @ u)
    return d / np.linalg.norm(d)


def _purify(b, z, n_x=None) -> np.ndarray:
    """Move a feasible ``z`` to a basic solution with no larger l1 norm.

    Along a null direction of the support columns the l1 norm is linear until
    an entry reaches zero, so stepping downhill to the first zero shrinks the
    support without raising the objective.
    """
    z = z.copy()
    zmax = np.abs(z).max(initial=0.0)
    z[np.abs(z) <= SUPPORT_RTOL * zmax] = 0.0
    for _ in range(z.size):
        supp = np.flatnonzero(z)
        if supp.size == 0:
            break
        if n_x is not None:
            supp = np.concatenate([supp[supp < n_x], supp[supp >= n_x]])
        d = _null_vector(b, supp, n_x, z[supp])
        if d is None:
            break
        zs = z[supp]
        if np.sign(zs) @ d > 0:
            d = -d
        shrink = zs * d < 0
        if not shrink.any():
            d, shrink = -d, zs * d > 0
        ratios = np.where(shrink, -zs / np.where(shrink, d, 1.0), np.inf)
        k = int(np.argmin(ratios))
        z[supp] = zs + ratios[k] * d
        z[supp[k]] = 0.0
    return z


def _simplex(b, y, z, max_pivots: int, n_x=None):
    """Primal simplex for ``min ||z||_1  s.t.  b z = y`` started at vertex ``z``.

    Each basic column carries the sign of its variable, so the basis matrix is
    ``b[:, basis] * signs`` and basic values are nonnegative. Entering columns
    follow the most violated dual constraint, switching to smallest-index
    choices after a run of degenerate pivots. Returns ``(z, optimal)``, or
    ``(None, False)`` when the start cannot be completed to a basis.
    """
    rows, cols = b.shape
    supp = np.flatnonzero(z)
    if supp.size > rows:
        return None, False
    basis = list(supp)
    signs = list(np.sign(z[supp]))
    if len(basis) < rows:
        pool = np.setdiff1d(np.arange(n_x, cols) if n_x is not None else np.arange(cols), supp)
        if supp.size:
            q, _ = np.linalg.qr(b[:, supp])
            rest = b[:, pool] - q @ (q.T @ b[:, pool])
        else:
            rest = b[:, pool]
        _, _, piv = scipy.linalg.qr(rest, mode="economic", pivoting=True)
        basis += list(pool[piv[:rows - len(basis)]])
        signs += [1.0] * (rows - len(signs))
    if len(basis) < rows:
        return None, False
    basis = np.array(basis)
    signs = np.array(signs)
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    degenerate = 0
    for pivot in range(max_pivots + 1):
        try:
            lu = scipy.linalg.lu_factor(b[:, basis] * signs, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            return None, False
        w = scipy.linalg.lu_solve(lu, y, check_finite=False)
        if not np.all(np.isfinite(w)) or w.min(initial=0.0) < -1e-9 * scale:
            return None, False
        w = np.maximum(w, 0.0)
        lam = scipy.linalg.lu_solve(lu, np.ones(rows), trans=1, check_finite=False)
        g = b.T @ lam
        viol = np.abs(g) - 1.0
        viol[basis] = -np.inf
        out = np.zeros(cols)
        out[basis] = signs * w
        if viol.max(initial=-np.inf) <= 1e-9:
            return out, True
        if pivot == max_pivots:
            return out, False
        j = int(np.flatnonzero(viol > 1e-9)[0]) if degenerate > 50 else int(np.argmax(viol))
        sj = float(np.sign(g[j]))
        dcol = scipy.linalg.lu_solve(lu, sj * b[:, j], check_finite=False)
        pos = dcol > 1e-12
        if not pos.any():
            return None, False
        ratios = np.where(pos, w / np.where(pos, dcol, 1.0), np.inf)
        tmin = ratios.min()
        ties = np.flatnonzero(ratios <= tmin + 1e-14 * max(1.0, tmin))
        k = int(ties[np.argmin(basis[ties])])
        degenerate = degenerate + 1 if tmin <= 1e-14 * scale else 0
        basis[k] = j
        signs[k] = sj
    return None, False


def _fit_with_identity(a, y, supp) -> np.ndarray | None:
    """Least-squares fit of ``y`` on the columns ``supp`` of ``[a | I]``.

    Rows owned by an identity column are matched exactly by ``e``, so only the
    remaining rows constrain ``x``; this avoids factoring an ``m``-row matrix.
    Returns None when those rows leave ``x`` underdetermined, where the
    generic minimum-norm fit is preferred.
    """
    m, n = a.shape
    supp = np.asarray(supp)
    sx, se = supp[supp < n], supp[supp >= n] - n
    free = np.ones(m, dtype=bool)
    free[se] = False
    if np.count_nonzero(free) < sx.size:
        return None
    out = np.zeros(n + m)
    if sx.size:
        xs, *_ = np.linalg.lstsq(a[np.ix_(free, sx)], y[free], rcond=None)
        out[sx] = xs
    ax = a[:, sx] @ out[sx]
    out[n + se] = y[se] - ax[se]
    return out


def _candidate_supports(z, score, max_size):
    """Supports to try when polishing, most plausible first.

    Primal candidates keep the largest entries of ``z``. Dual candidates use
    complementary slackness: an optimal support lies where ``|B^T lambda|``
    attains 1, so the most nearly active columns are tried as well.
    """
    seen = set()
    zabs = np.abs(z)
    zmax = zabs.max()
    by_z = np.argsort(-zabs, kind="stable")
    for thr in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8):
        k = min(int(np.count_nonzero(zabs > thr * zmax)), max_size)
        supp = tuple(sorted(by_z[:k]))
        if k and supp not in seen:
            seen.add(supp)
            yield list(supp)
    s = np.abs(score)
    smax = s.max(initial=0.0)
    if smax == 0.0:
        return
    by_s = np.argsort(-s, kind="stable")
    for tol in (1e-2, 1e-3, 1e-4, 1e-6):
        k = min(int(np.count_nonzero(s >= (1.0 - tol) * smax)), max_size)
        supp = tuple(sorted(by_s[:k]))
        if k and supp not in seen:
            seen.add(supp)
            yield list(supp)


def solve_combo(a, y, prog: ComboProgram = ComboProgram(), cfg: SolverConfig | None = None) -> SparseSolution:
    """Solve ``min ||x||_p + ||e||_q  s.t.  y = a x + e`` for ``p, q`` in {1, 2}.

    Norms are unsquared and equally weighted. Non-convergence is reported in
    ``converged``, never raised.
    """
    a, y = _as_inputs(a, y)
    cfg = cfg or SolverConfig()
    return _alm(a, y, Norm(prog.x_norm).value, Norm(prog.e_norm).value, cfg)


def solve_l1l1(a, y, cfg: SolverConfig | None = None) -> SparseSolution:
    """``min ||x||_1 + ||e||_1  s.t.  a x + e = y``.

    Equivalently basis pursuit over ``[a | I]``; the identity block is not
    normalized, so ``e`` is in the units of ``y``.
    """
    return solve_combo(a, y, ComboProgram(Norm.L1, Norm.L1), cfg)


def solve_basis_pursuit(b, y, cfg: SolverConfig | None = None) -> SparseSolution:
    """``min ||z||_1  s.t.  b z = y`` (returned as ``x``; ``e`` is empty)."""
    b, y = _as_inputs(b, y)
    return _alm(b, y, "l1", "zero", cfg or SolverConfig(), coupling=np.zeros((b.shape[0], 0)))


def _is_identity(phi) -> bool:
    return phi.shape[0] == phi.shape[1] and np.array_equal(phi, np.eye(phi.shape[0]))


def solve_projected(a, y, phi, variant: ProjectionVariant = ProjectionVariant.SPARSE_E,
                    cfg: SolverConfig | None = None) -> SparseSolution:
    """l1/l1 recovery from projected measurements ``phi @ y``.

    ``SPARSE_E`` keeps ``e`` in pixel space: ``phi y = phi a x + phi e``.
    ``PROJECTED_E`` puts the error in feature space:
    ``phi y = phi a x + e'`` with ``len(e') = phi.shape[0]``.
    """
    a, y = _as_inputs(a, y)
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if phi.shape[1] != a.shape[0]:
        raise ValueError(f"phi has {phi.shape[1]} columns, expected {a.shape[0]}")
    if phi.shape[0] > a.shape[0]:
        raise ValueError("projection must not increase dimension")
    cfg = cfg or SolverConfig()
    variant = ProjectionVariant(variant)
    if variant is ProjectionVariant.PROJECTED_E or _is_identity(phi):
        return solve_l1l1(phi @ a, phi @ y, cfg)
    return _alm(phi @ a, phi @ y, "l1", "l1", cfg, coupling=phi)


def solve_l2l2_closed(a, y, gamma: float) -> np.ndarray:
    """Minimizer of ``||x||^2 + gamma ||y - a x||^2`` by Cholesky."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a, y = _as_inputs(a, y)
    gram = a.T @ a + np.eye(a.shape[1]) / gamma
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), a.T @ y)


# ---------------------------------------------------------------------------
# exact LP oracle


class OracleSizeError(ValueError):
    pass


ORACLE_MAX_ROWS = 12
ORACLE_MAX_COLS = 6


def lp_oracle_basis_pursuit(b, y, rank_tol: float = 1e-10):
    """Exact ``min ||z||_1  s.t.  b z = y`` by enumerating basic solutions.

    An optimum of the split LP sits at a vertex, and every vertex is
    ``z_S = b_S^{-1} y`` for some set ``S`` of ``rank(b)`` independent
    columns. Exponential in the number of columns; for desk-sized checks.
    Returns ``(objective, z)``.
    """
    b, y = _as_inputs(b, y)
    m, n = b.shape
    if not np.any(y):
        return 0.0, np.zeros(n)
    # row-reduce to a full-row-rank system with the same solution set
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    r = int(np.count_nonzero(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    if r == 0:
        raise ValueError("infeasible: b is zero and y is not")
    bred = s[:r, None] * vt[:r]
    yred = u[:, :r].T @ y
    if np.linalg.norm(u[:, :r] @ yred - y) > 1e-9 * np.linalg.norm(y):
        raise ValueError("infeasible: y is not in the range of b")

    combos = np.array(list(itertools.combinations(range(n), r)))
    mats = np.transpose(bred[:, combos], (1, 0, 2))  # (K, r, r)
    sv = np.linalg.svd(mats, compute_uv=False)
    ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)
    combos, mats = combos[ok], mats[ok]
    sols = np.linalg.solve(mats, np.broadcast_to(yred, (len(mats), r))[..., None])[..., 0]
    objs = np.abs(sols).sum(axis=1)
    best = int(np.argmin(objs))
    z = np.zeros(n)
    z[combos[best]] = sols[best]
    return float(objs[best]), z


def lp_oracle_l1l1(a, y):
    """Exact optimum of the l1/l1 program for tiny instances: ``(objective, x, e)``."""
    a, y = _as_inputs(a, y)
    m, n = a.shape
    if m > ORACLE_MAX_ROWS or n > ORACLE_MAX_COLS:
        raise OracleSizeError(f"oracle is limited to {ORACLE_MAX_ROWS}x{ORACLE_MAX_COLS}, got {m}x{n}")
    obj, z = lp_oracle_basis_pursuit(np.hstack([a, np.eye(m)]), y)
    return obj, z[:n], z[n:]
