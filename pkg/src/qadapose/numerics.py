"""Small dense linear algebra and polynomial helpers used by the PnP solvers.

Symmetric eigenproblems and least squares run on cyclic Jacobi kernels
(compiled when available, see ``_backend``). The 3x3 SVD and the companion
matrix eigenvalues go through LAPACK via numpy.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ContractError, DegeneracyError


@dataclass(frozen=True)
class Tolerances:
    symmetry_rel: float = 1e-10
    jacobi_off_rel: float = 1e-15
    jacobi_max_sweeps: int = 60
    svd_orth: float = 1e-15
    lstsq_rcond: float = 1e-12
    root_imag_rel: float = 1e-6
    root_cluster_rel: float = 1e-3
    root_dedupe_rel: float = 1e-9
    root_residual_rel: float = 1e-8
    collinear_rel: float = 1e-9


TOL = Tolerances()


def _as_matrix(a, name="A"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} has non-finite entries")
    return a


def sym_eig(a):
    """Eigen-decomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ascending and orthonormal eigenvectors
    in the columns of ``V``.
    """
    a = _as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ContractError(f"sym_eig needs a square matrix, got {a.shape}")
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > TOL.symmetry_rel * scale:
        raise ContractError("sym_eig needs a symmetric matrix")
    w, v, _ = kernels.jacobi_eigh(0.5 * (a + a.T), TOL.jacobi_off_rel, TOL.jacobi_max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def svd(a):
    """Thin SVD ``A = U diag(s) V^T`` via one-sided Jacobi, s descending.

    Wide matrices are zero-padded to square so ``V`` is always n x n and its
    trailing columns span the null space.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m < n:
        a = np.vstack([a, np.zeros((n - m, n))])
    u, s, v, _ = kernels.jacobi_svd(a, TOL.svd_orth, TOL.jacobi_max_sweeps)
    order = np.argsort(-s, kind="stable")
    return u[:m, order], s[order], v[:, order]


def null_vector(a):
    """Unit vector minimising ``|A x|``."""
    _, _, v = svd(a)
    return v[:, -1]


def svd3(m):
    """SVD of a 3x3 matrix: ``M = U @ diag(S) @ V.T``, S non-negative descending."""
    m = _as_matrix(m, "M")
    if m.shape != (3, 3):
        raise ContractError(f"svd3 needs a 3x3 matrix, got {m.shape}")
    u, s, vt = np.linalg.svd(m)
    return u, s, vt.T


def lstsq(a, b):
    """Minimum-norm least-squares solution of ``A x = b``."""
    a = _as_matrix(a)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] < 1:
        raise ContractError("lstsq needs at least one row")
    if b.shape[0] != a.shape[0]:
        raise ContractError(f"row mismatch: A {a.shape} vs b {b.shape}")
    u, s, v = svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1],) + b.shape[1:])
    keep = s > TOL.lstsq_rcond * s[0]
    coef = u[:, keep].T @ b
    coef = coef / (s[keep] if coef.ndim == 1 else s[keep, None])
    return v[:, keep] @ coef


def procrustes(p, q):
    """Rigid transform ``(R, t)`` minimising ``sum |R p_i + t - q_i|^2``.

    ``p`` and ``q`` are (n, 3). ``p`` need not be centred. Reflections are
    suppressed by flipping the weakest singular direction.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 2 or p.shape[1] != 3:
        raise ContractError(f"procrustes needs matching (n, 3) arrays, got {p.shape}, {q.shape}")
    if p.shape[0] < 3:
        raise DegeneracyError("procrustes needs at least 3 points")
    pc = p.mean(axis=0)
    qc = q.mean(axis=0)
    dp = p - pc
    dq = q - qc
    cov = dp.T @ dq
    u, s, v = svd3(cov)
    spread = max(float(np.sum(dp * dp)), float(np.sum(dq * dq)))
    if spread == 0.0 or s[1] <= TOL.collinear_rel * spread:
        raise DegeneracyError("procrustes: points are collinear or coincident")
    d = 1.0 if np.linalg.det(v @ u.T) > 0 else -1.0
    r = v @ np.diag([1.0, 1.0, d]) @ u.T
    return r, qc - r @ pc


# -- polynomials (coefficients in ascending degree order) -------------------

def poly_trim(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:0]
    return c[: nz[-1] + 1]


def poly_eval(coeffs, x):
    return np.polynomial.polynomial.polyval(x, coeffs)


def poly_from_roots(roots):
    """Monic polynomial (ascending coefficients) with the given roots."""
    c = np.array([1.0])
    for r in roots:
        c = np.convolve(c, [-r, 1.0])
    return c


def _clusters(z, rel):
    """Connected groups of eigenvalues closer than ``rel (1 + |z|)``."""
    n = z.size
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= rel * (1.0 + max(abs(z[i]), abs(z[j]))):
                label[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _is_real(zi):
    return abs(zi.imag) < TOL.root_imag_rel * (1.0 + abs(zi.real))


def real_poly_roots(coeffs):
    """Distinct real roots of a polynomial given ascending coefficients.

    Roots are the eigenvalues of the companion matrix. An eigenvalue counts as
    real when ``|Im| < 1e-6 (1 + |Re|)``. A multiple root splits into a small
    ring of eigenvalues, so a tight cluster holding a non-real member yields
    at most one root: the best-fitting of its real members and its centroid.
    Each candidate gets one Newton step when that lowers ``|p|``.
    """
    c = poly_trim(coeffs)
    if c.size == 0:
        raise ContractError("real_poly_roots: zero polynomial")
    if not np.all(np.isfinite(c)):
        raise ContractError("real_poly_roots: non-finite coefficients")
    deg = c.size - 1
    if deg < 1:
        raise ContractError("real_poly_roots: degree must be >= 1")

    monic = c / c[-1]
    comp = np.zeros((deg, deg))
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -monic[:-1]
    z = np.linalg.eigvals(comp)

    dc = np.polynomial.polynomial.polyder(c)
    cmax = float(np.max(np.abs(c)))

    def polish(r):
        pr = poly_eval(c, r)
        dpr = poly_eval(dc, r)
        if dpr != 0.0:
            r_new = r - pr / dpr
            p_new = poly_eval(c, r_new)
            if abs(p_new) < abs(pr):
                r, pr = r_new, p_new
        return r, abs(pr)

    polished = []
    for group in _clusters(z, TOL.root_cluster_rel):
        members = z[group]
        if all(_is_real(zi) for zi in members):
            polished.extend(polish(zi.real) for zi in members)
            continue
        options = [zi.real for zi in members if _is_real(zi)]
        if len(group) > 1:
            options.append(members.mean().real)
        if options:
            polished.append(min((polish(r) for r in options), key=lambda rp: rp[1]))

    roots = []
    resid = []
    for r, pr in sorted(polished):
        if pr > TOL.root_residual_rel * cmax * max(1.0, abs(r)) ** deg:
            continue
        if roots and _same_root(c, roots[-1], r):
            # keep whichever representative fits the polynomial better
            if pr < resid[-1]:
                roots[-1], resid[-1] = r, pr
            continue
        roots.append(r)
        resid.append(pr)
    return np.array(roots)


def _same_root(c, a, b):
    """True when a and b are numerically one (multiple) root of c."""
    if abs(a - b) <= TOL.root_dedupe_rel * (1.0 + abs(a)):
        return True
    if abs(a - b) > TOL.root_cluster_rel * (1.0 + abs(a)):
        return False
    # distinct roots leave a bump in |p| between them that rises above the
    # rounding noise of evaluating p there
    mid = 0.5 * (a + b)
    noise = 1e3 * np.finfo(float).eps * poly_eval(np.abs(c), abs(mid))
    return abs(poly_eval(c, mid)) <= noise
