"""L1-regularized self-representation solver and dictionary coding.

Every coding problem in the pipeline has the form

    min_c ||c||_1 + (tau/2) ||x - A c||_2^2,    tau > 1,

with unit-norm dictionary columns. It is solved by cyclic coordinate
descent on the equivalent standard form (lambda = 1/tau) using cached
Gram/correlation vectors, stopping once both the duality gap and the KKT
residual fall below tolerance. Solves are deterministic: single-threaded
per column, fixed update order, no randomness, so repeated calls are
bit-identical. Coding a whole matrix parallelizes over columns without
affecting per-column results.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy import sparse

from .core import CoefficientMatrix, PixelMatrix
from .errors import InputError, NumericalError

__all__ = [
    "LassoSolution",
    "lasso",
    "self_rep_cost",
    "code_against_dictionary",
    "save_coefficients_csv",
    "load_coefficients_csv",
]

# Coefficients below this magnitude are dropped from sparse storage.
SPARSE_DROP_TOL = 1e-10

_MAX_EPOCHS = 10_000


@njit(cache=True)
def _face_line_search(G, b, c, h, lam, idx, gaa, ba, ca, d):
    """Exact minimization of the objective along direction d on the face.

    The restriction phi(t) = lam*||c + t d||_1 + quad(t) is convex and
    piecewise quadratic with breakpoints at the zero crossings of the
    active coordinates, so the minimum is either a crossing or the interior
    stationary point of one piece. Applies the best step when it strictly
    decreases the objective and refreshes h from scratch; returns True on
    an accepted move.
    """
    na = idx.shape[0]
    m = c.shape[0]
    dmax = 0.0
    scale = 0.0
    for a in range(na):
        if abs(d[a]) > dmax:
            dmax = abs(d[a])
        if abs(ca[a]) > scale:
            scale = abs(ca[a])
    if dmax <= 1e-15 * (1.0 + scale):
        return False

    gd = gaa @ d
    q2 = float(d @ gd)
    q1 = float(d @ (gaa @ ca)) - float(d @ ba)

    crossings = np.empty(na, dtype=np.float64)
    ncr = 0
    for a in range(na):
        if d[a] != 0.0:
            t_a = -ca[a] / d[a]
            if t_a > 0.0:
                crossings[ncr] = t_a
                ncr += 1
    cr = np.sort(crossings[:ncr])

    # walk the pieces; phi'(t) = q1 + q2*t + lam*sum_a sign(ca_a+t*d_a)*d_a
    cand = np.empty(2 * ncr + 2, dtype=np.float64)
    ncand = 0
    for a in range(ncr):
        cand[ncand] = cr[a]
        ncand += 1
    for piece in range(ncr + 1):
        tl = 0.0 if piece == 0 else cr[piece - 1]
        if piece < ncr:
            tr = cr[piece]
            tm = 0.5 * (tl + tr)
        else:
            tr = np.inf
            tm = tl + 1.0
        if tr <= tl:
            continue
        lin = q1
        for a in range(na):
            va = ca[a] + tm * d[a]
            if va > 0.0:
                lin += lam * d[a]
            elif va < 0.0:
                lin -= lam * d[a]
        if q2 > 0.0:
            t_star = -lin / q2
            if tl < t_star < tr:
                cand[ncand] = t_star
                ncand += 1
        elif lin >= 0.0:
            break  # flat quadratic, nondecreasing from here on

    l1_base = 0.0
    for a in range(na):
        l1_base += abs(ca[a])
    best_t = 0.0
    best_gain = 0.0
    for ci in range(ncand):
        t = cand[ci]
        l1 = 0.0
        for a in range(na):
            l1 += abs(ca[a] + t * d[a])
        gain = t * q1 + 0.5 * t * t * q2 + lam * (l1 - l1_base)
        if gain < best_gain or (gain == best_gain and 0.0 < t < best_t):
            best_gain = gain
            best_t = t
    if not best_gain < 0.0:
        return False

    for a in range(na):
        ia = idx[a]
        va = ca[a] + best_t * d[a]
        # a coordinate whose crossing equals the chosen step lands on zero
        if d[a] != 0.0 and -ca[a] / d[a] == best_t:
            va = 0.0
        c[ia] = va
    for i in range(m):
        h[i] = b[i]
    for i in range(m):
        vi = c[i]
        if vi != 0.0:
            for t in range(m):
                h[t] -= vi * G[i, t]
    return True


@njit(cache=True)
def _face_step(G, b, c, h, lam):
    """Accelerate coordinate descent with exact moves on the current face.

    First tries the direction toward the sign-fixed stationarity solution
    (SVD pseudo-inverse of G_AA, so exactly collinear atoms are fine).
    When that direction yields no descent (inconsistent system), falls
    back to the sign-fixed negative gradient, which descends whenever the
    face is not yet stationary. Plain cyclic descent crawls on
    rank-deficient dictionaries (duplicate pixels, low-rank data) without
    these moves.
    """
    m = c.shape[0]
    na = 0
    for i in range(m):
        if c[i] != 0.0:
            na += 1
    if na == 0:
        return False
    idx = np.empty(na, dtype=np.int64)
    p = 0
    for i in range(m):
        if c[i] != 0.0:
            idx[p] = i
            p += 1

    gaa = np.empty((na, na))
    ba = np.empty(na)
    ca = np.empty(na)
    theta = np.empty(na)
    rhs = np.empty(na)
    for a in range(na):
        ia = idx[a]
        ba[a] = b[ia]
        ca[a] = c[ia]
        theta[a] = 1.0 if c[ia] > 0.0 else -1.0
        rhs[a] = ba[a] - lam * theta[a]
        for t in range(na):
            gaa[a, t] = G[ia, idx[t]]

    u, s, vt = np.linalg.svd(gaa)
    cutoff = na * 2.220446049250313e-16 * s[0]
    utr = u.T @ rhs
    for a in range(na):
        utr[a] = utr[a] / s[a] if s[a] > cutoff else 0.0
    z = vt.T @ utr
    if _face_line_search(G, b, c, h, lam, idx, gaa, ba, ca, z - ca):
        return True

    grad = gaa @ ca - ba + lam * theta
    if _face_line_search(G, b, c, h, lam, idx, gaa, ba, ca, -grad):
        return True

    # Rank-deficient faces leave an L1 polytope over which the residual is
    # constant; descend it along the (near-)nullspace singular directions,
    # which carries surplus atoms exactly to zero.
    null_tol = max(cutoff, 1e-10 * s[0])
    moved = False
    for k in range(na):
        if s[k] > null_tol:
            continue
        v = vt[k, :].copy()
        if _face_line_search(G, b, c, h, lam, idx, gaa, ba, ca, v):
            moved = True
            break
        if _face_line_search(G, b, c, h, lam, idx, gaa, ba, ca, -v):
            moved = True
            break
    return moved


_FINISH_MAX_ATOMS = 12


@njit(cache=True)
def _exact_finish(G, b, xsq, lam, c, h, ban):
    """Finisher for crawl-prone degenerate problems: certify an exact optimum.

    Candidate active atoms are the ones closest to binding, filtered by the
    gap-safe sphere around the scaled-residual dual point (which every
    optimal support must respect) and capped at a small count. Candidate
    supports are enumerated smallest-first with signs read off the
    near-binding correlations; each sign-fixed KKT system is solved by SVD
    pseudo-inverse and a candidate is accepted only if its multipliers are
    nonnegative and every constraint holds, so an accepted answer is a
    certified global optimum no matter how the candidates were picked. On
    success c becomes that optimum and h is rebuilt; the caller's
    certificate pass then closes.
    """
    m = b.shape[0]
    # duality gap of the current iterate (same formula as the main loop)
    l1 = 0.0
    cbh = 0.0
    cb = 0.0
    dual_inf = 0.0
    for i in range(m):
        if i == ban:
            continue
        l1 += abs(c[i])
        cbh += c[i] * (b[i] + h[i])
        cb += c[i] * b[i]
        if abs(h[i]) > dual_inf:
            dual_inf = abs(h[i])
    rsq = xsq - cbh
    if rsq < 0.0:
        rsq = 0.0
    rx = xsq - cb
    const = lam / dual_inf if dual_inf > lam else 1.0
    gap_std = 0.5 * rsq * (1.0 + const * const) + lam * l1 - const * rx
    if gap_std < 0.0:
        gap_std = 0.0

    # candidate atoms: closest to binding, inside the gap-safe sphere
    radius = np.sqrt(2.0 * gap_std)
    score = np.empty(m)
    for i in range(m):
        score[i] = -const * abs(h[i]) if i != ban else np.inf
    order = np.argsort(score, kind="mergesort")  # stable: ties by index
    nk = 0
    for p in range(min(m, _FINISH_MAX_ATOMS)):
        i = order[p]
        if i == ban or const * abs(h[i]) < lam - radius:
            break
        nk += 1
    if nk == 0:
        return False
    K = np.empty(nk, dtype=np.int64)
    sigma = np.empty(nk)
    for p in range(nk):
        i = order[p]
        K[p] = i
        sigma[p] = 1.0 if h[i] > 0.0 else -1.0

    tol_sys = 1e-11
    total = 1 << nk
    members = np.empty(nk, dtype=np.int64)
    for size in range(nk + 1):
        for mask in range(total):
            bits = 0
            t = mask
            while t:
                bits += t & 1
                t >>= 1
            if bits != size:
                continue
            nb = 0
            for a in range(nk):
                if mask & (1 << a):
                    members[nb] = a
                    nb += 1
            if nb == 0:
                # zero solution: optimal iff all correlations are inside
                ok = True
                for i in range(m):
                    if i != ban and abs(b[i]) > lam + 1e-12:
                        ok = False
                        break
                if not ok:
                    continue
                for i in range(m):
                    c[i] = 0.0
                    h[i] = b[i]
                return True
            # sign-fixed stationarity in multiplier space u >= 0:
            # sum_t sigma_j G_jt sigma_t u_t = sigma_j b_j - lam
            Mm = np.empty((nb, nb))
            rhs = np.empty(nb)
            for aa in range(nb):
                j = K[members[aa]]
                sj = sigma[members[aa]]
                rhs[aa] = sj * b[j] - lam
                for tt in range(nb):
                    Mm[aa, tt] = sj * G[j, K[members[tt]]] * sigma[members[tt]]
            u, s, vt = np.linalg.svd(Mm)
            cutoff = nb * 2.220446049250313e-16 * s[0] if s[0] > 0 else 0.0
            utr = u.T @ rhs
            for aa in range(nb):
                utr[aa] = utr[aa] / s[aa] if s[aa] > cutoff else 0.0
            mu = vt.T @ utr
            feasible = True
            for aa in range(nb):
                if mu[aa] < -1e-12:
                    feasible = False
                    break
            if not feasible:
                continue
            resid = Mm @ mu - rhs
            for aa in range(nb):
                if abs(resid[aa]) > tol_sys:
                    feasible = False
                    break
            if not feasible:
                continue
            # full constraint check: |b - G (sigma mu)| <= lam everywhere
            cand = np.zeros(m)
            for aa in range(nb):
                val = mu[aa] if mu[aa] > 0.0 else 0.0
                cand[K[members[aa]]] = sigma[members[aa]] * val
            hc = b.copy()
            for i in range(m):
                vi = cand[i]
                if vi != 0.0:
                    for t2 in range(m):
                        hc[t2] -= vi * G[i, t2]
            ok = True
            for i in range(m):
                if i != ban and abs(hc[i]) > lam + 1e-10:
                    ok = False
                    break
            if not ok:
                continue
            for i in range(m):
                c[i] = cand[i]
                h[i] = hc[i]
            return True
    return False


@njit(cache=True)
def _cd_gram(G, b, xsq, lam, tol, max_epochs, ban):
    """Coordinate descent on min lam*||c||_1 + 0.5*||x - A c||^2.

    Works entirely from the Gram matrix G = A^T A, correlations b = A^T x
    and xsq = x^T x. `ban` freezes one coordinate at zero (-1 for none).
    Near-collinear atoms make plain cyclic descent crawl, so once the
    support is stable across an epoch the exact active-set solution is
    tried as a shortcut. Returns (c, epochs, gap, kkt) with the gap and
    KKT residual expressed on the tau-scaled objective (divided by lam).
    """
    m = b.shape[0]
    c = np.zeros(m)
    h = b.copy()  # h = b - G c = A^T (x - A c)
    gap = np.inf
    kkt = np.inf
    epoch = 0
    next_finish = 10  # doubling schedule keeps failed searches cheap
    for epoch in range(1, max_epochs + 1):
        # Degenerate optimal sets (rank-deficient dictionaries) can leave
        # cyclic descent zigzagging between near-optimal faces. If the
        # certified loop has not closed after a while, take a burst of
        # ridge-smoothed passes (strongly convex surrogate, eps -> 0) to
        # land on the optimal polytope, then continue exactly.
        eps = 0.0
        if 200 < epoch <= 240:
            eps = 1e-3
        elif 240 < epoch <= 280:
            eps = 1e-5
        elif 280 < epoch <= 320:
            eps = 1e-7
        for i in range(m):
            if i == ban:
                continue
            gii = G[i, i]
            u = h[i] + gii * c[i]
            if u > lam:
                cn = (u - lam) / (gii + eps)
            elif u < -lam:
                cn = (u + lam) / (gii + eps)
            else:
                cn = 0.0
            d = cn - c[i]
            if d != 0.0:
                for t in range(m):
                    h[t] -= d * G[i, t]
                c[i] = cn
        if eps != 0.0:
            continue

        l1 = 0.0
        cbh = 0.0
        cb = 0.0
        dual_inf = 0.0
        kkt = 0.0
        for i in range(m):
            if i == ban:
                continue
            ci = c[i]
            ahi = abs(h[i])
            l1 += abs(ci)
            cbh += ci * (b[i] + h[i])
            cb += ci * b[i]
            if ahi > dual_inf:
                dual_inf = ahi
            if ci > 0.0:
                v = abs(h[i] - lam)
            elif ci < 0.0:
                v = abs(h[i] + lam)
            else:
                v = ahi - lam
                if v < 0.0:
                    v = 0.0
            if v > kkt:
                kkt = v
        rsq = xsq - cbh  # ||x - A c||^2 without touching A
        if rsq < 0.0:
            rsq = 0.0
        rx = xsq - cb  # (x - A c)^T x
        if dual_inf > lam:
            const = lam / dual_inf
        else:
            const = 1.0
        gap_std = 0.5 * rsq * (1.0 + const * const) + lam * l1 - const * rx
        if gap_std < 0.0:
            gap_std = 0.0
        gap = gap_std / lam
        if gap <= tol and kkt <= tol:
            break

        _face_step(G, b, c, h, lam)
        if epoch >= next_finish:
            _exact_finish(G, b, xsq, lam, c, h, ban)
            next_finish *= 2
    return c, epoch, gap, kkt


@njit(cache=True, parallel=True)
def _cd_gram_batch(G, B, xsq, lam, tol, max_epochs, bans):
    """Run _cd_gram over every column of B; columns are fully independent."""
    m, n = B.shape
    C = np.zeros((m, n))
    epochs = np.zeros(n, dtype=np.int64)
    gaps = np.zeros(n)
    kkts = np.zeros(n)
    for j in prange(n):
        bj = B[:, j].copy()
        c, e, g, kk = _cd_gram(G, bj, xsq[j], lam, tol, max_epochs, bans[j])
        C[:, j] = c
        epochs[j] = e
        gaps[j] = g
        kkts[j] = kk
    return C, epochs, gaps, kkts


def warm_up_solver():
    """Trigger JIT compilation so timed runs do not pay for it."""
    G = np.eye(2)
    b = np.array([0.5, 0.0])
    _cd_gram(G, b, 1.0, 0.1, 1e-6, 10, -1)
    _cd_gram_batch(G, b.reshape(2, 1), np.array([1.0]), 0.1, 1e-6, 10,
                   np.array([-1], dtype=np.int64))


@dataclass(frozen=True)
class LassoSolution:
    """Solver output: coefficients plus convergence certificates."""

    coefficients: np.ndarray
    objective: float
    iterations: int
    duality_gap: float


def _check_problem(A: np.ndarray, x: np.ndarray, tau: float):
    if A.ndim != 2:
        raise InputError("dictionary must be a 2-D array")
    if A.shape[1] == 0:
        raise InputError("dictionary has no columns")
    if x.shape != (A.shape[0],):
        raise InputError(
            f"signal length {x.shape} does not match dictionary rows {A.shape[0]}"
        )
    if not (math.isfinite(tau) and tau > 1.0):
        raise InputError(
            f"tau must be a finite value > 1 (got {tau}); at tau <= 1 the zero "
            "solution is always optimal for unit-norm data"
        )
    norms = np.linalg.norm(A, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-8)
    if bad.size:
        raise InputError(
            f"dictionary column {int(bad[0])} is not unit-norm "
            f"(norm {norms[bad[0]]:.12g})"
        )


def lasso(dictionary: np.ndarray, x: np.ndarray, tau: float,
          tol: float = 1e-6, max_iter: int = _MAX_EPOCHS) -> LassoSolution:
    """Solve min ||c||_1 + (tau/2)||x - dictionary @ c||^2.

    Parameters
    ----------
    dictionary : (D, m) array with unit-norm columns.
    x : length-D signal.
    tau : fidelity weight, must exceed 1.
    tol : tolerance applied to both the duality gap and the KKT residual
        (|a_i^T r| compared against 1/tau).

    Returns a LassoSolution whose objective is recomputed from the final
    coefficients.
    """
    A = np.ascontiguousarray(dictionary, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_problem(A, x, tau)
    if tol <= 0:
        raise InputError("tol must be positive")

    G = np.ascontiguousarray(A.T @ A)
    b = A.T @ x
    xsq = float(x @ x)
    c, epochs, gap, kkt = _cd_gram(G, b, xsq, 1.0 / tau, tol, max_iter, -1)
    if gap > tol or kkt > tol:
        raise NumericalError(
            f"coordinate descent did not converge in {max_iter} epochs "
            f"(gap {gap:.3g}, kkt {kkt:.3g})"
        )
    residual = x - A @ c
    objective = float(np.abs(c).sum() + 0.5 * tau * (residual @ residual))
    return LassoSolution(c, objective, int(epochs), float(gap))


def self_rep_cost(x: np.ndarray, candidates: np.ndarray, tau: float,
                  tol: float = 1e-6) -> float:
    """Optimal objective of representing x with the candidate columns.

    This is the coverage metric used during exemplar selection; it never
    increases when columns are added to the candidate set.
    """
    return lasso(candidates, x, tau, tol).objective


def objective_from_gram(gram: np.ndarray, sel, k: int, tau: float,
                        tol: float = 1e-6):
    """Self-representation cost of column k against columns `sel`, computed
    purely from a precomputed Gram matrix of the segment's features.

    Returns (cost, coefficients). Used by exemplar selection so that lazy
    and exhaustive strategies evaluate byte-identical numbers.
    """
    sel = np.asarray(sel, dtype=np.int64)
    sub = np.ascontiguousarray(gram[np.ix_(sel, sel)])
    b = np.ascontiguousarray(gram[sel, k])
    xsq = float(gram[k, k])
    lam = 1.0 / tau
    c, _, gap, kkt = _cd_gram(sub, b, xsq, lam, tol, _MAX_EPOCHS, -1)
    if gap > tol or kkt > tol:
        raise NumericalError("selection subproblem did not converge")
    rsq = xsq - 2.0 * float(c @ b) + float(c @ sub @ c)
    if rsq < 0.0:
        rsq = 0.0
    return float(np.abs(c).sum() + 0.5 * tau * rsq), c


def code_against_dictionary(matrix: PixelMatrix, dictionary, tau: float,
                            tol: float = 1e-6,
                            exclude_self: bool = False) -> CoefficientMatrix:
    """Sparse-code every pixel against the exemplar dictionary.

    Column j of the result solves the tau-weighted L1 problem for pixel j
    over all M exemplars. Exemplar pixels may select their own dictionary
    column unless exclude_self is set. Entries below SPARSE_DROP_TOL are
    dropped and the matrix is stored column-compressed.
    """
    Xhat = np.ascontiguousarray(dictionary.features, dtype=np.float64)
    X = np.asarray(matrix.data, dtype=np.float64)
    _check_problem(Xhat, X[:, 0], tau)
    n = X.shape[1]

    bans = np.full(n, -1, dtype=np.int64)
    if exclude_self:
        for col, pix in enumerate(np.asarray(dictionary.indices)):
            bans[int(pix)] = col

    G = np.ascontiguousarray(Xhat.T @ Xhat)
    B = np.ascontiguousarray(Xhat.T @ X)
    xsq = np.einsum("ij,ij->j", X, X)
    C, _, gaps, kkts = _cd_gram_batch(G, B, xsq, 1.0 / tau, tol, _MAX_EPOCHS, bans)
    bad = np.flatnonzero((gaps > tol) | (kkts > tol))
    if bad.size:
        raise NumericalError(
            f"coding failed to converge for pixel {int(bad[0])} "
            f"({bad.size} pixels total)"
        )
    C[np.abs(C) < SPARSE_DROP_TOL] = 0.0
    return CoefficientMatrix(sparse.csc_matrix(C), "raw")


def save_coefficients_csv(coeff: CoefficientMatrix, path: str) -> None:
    """Dump a coefficient matrix as 'row,col,value' triplets (header line,
    coordinates 0-based, values in float repr for exact reload)."""
    values = coeff.values
    mat = sparse.coo_matrix(values)
    order = np.lexsort((mat.col, mat.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# shape,{mat.shape[0]},{mat.shape[1]}\n")
        fh.write("row,col,value\n")
        for r, c, v in zip(mat.row[order], mat.col[order], mat.data[order]):
            fh.write(f"{r},{c},{float(v)!r}\n")


def load_coefficients_csv(path: str) -> sparse.csc_matrix:
    """Inverse of save_coefficients_csv."""
    if not os.path.isfile(path):
        raise InputError(f"coefficient file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# shape,"):
            raise InputError(f"{path}: missing shape header")
        parts = header.split(",")
        shape = (int(parts[1]), int(parts[2]))
        fh.readline()  # column names
        r, c, v = [], [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b, val = line.split(",")
            r.append(int(a))
            c.append(int(b))
            v.append(float(val))
    return sparse.coo_matrix((v, (r, c)), shape=shape).tocsc()
