"""EPnP: world points as barycentric combinations of virtual control points.

Four control points (centroid plus principal axes) are used for general
clouds and three for planar ones. The camera-frame control points live in the
null space of a 2n x 3k system; the null-space weights are fitted to the
known control-point distances for one, two and three null vectors, polished
by Gauss-Newton, and the best reprojection wins.
"""

import itertools

import numpy as np

from ..errors import DegeneracyError
from ..numerics import lstsq, procrustes, sym_eig
from ._common import check_correspondences, make_solution, rank_solutions

PLANAR_TOL = 1e-9
GN_ITERS = 10


def control_points(world, planar_tol=PLANAR_TOL):
    """Control points (k, 3) and barycentric weights (n, k); k = 3 if planar."""
    c0 = world.mean(axis=0)
    d = world - c0
    w, v = sym_eig(d.T @ d / len(world))
    if w[2] <= 0.0 or w[1] <= planar_tol * w[2]:
        raise DegeneracyError("EPnP: world points are collinear")
    axes = [2, 1] if w[0] <= planar_tol * w[2] else [2, 1, 0]
    scale = np.sqrt(w[axes])
    dirs = v[:, axes]
    ctrl = np.vstack([c0, c0 + (dirs * scale).T])
    coef = (d @ dirs) / scale
    alphas = np.column_stack([1.0 - coef.sum(axis=1), coef])
    return ctrl, alphas


def _design(alphas, image):
    n, k = alphas.shape
    m = np.zeros((2 * n, 3 * k))
    m[0::2, 0::3] = alphas
    m[0::2, 2::3] = -alphas * image[:, 0:1]
    m[1::2, 1::3] = alphas
    m[1::2, 2::3] = -alphas * image[:, 1:2]
    return m


class _DistanceModel:
    """Squared control-point distances as quadratic forms in the weights."""

    def __init__(self, nullvecs, ctrl):
        k = len(ctrl)
        self.pairs = list(itertools.combinations(range(k), 2))
        nv = [v.reshape(k, 3) for v in nullvecs]
        # diffs[p, l] = null vector l's difference vector for pair p
        self.diffs = np.array([[v[a] - v[b] for v in nv] for a, b in self.pairs])
        self.rho = np.array([np.sum((ctrl[a] - ctrl[b]) ** 2) for a, b in self.pairs])
        gram = np.einsum("pli,pmi->plm", self.diffs, self.diffs)
        self.terms = [(l, m) for l in range(len(nv)) for m in range(l, len(nv))]
        self.lmat = np.array([[(1.0 if l == m else 2.0) * g[l, m] for l, m in self.terms] for g in gram])

    def columns(self, wanted):
        return self.lmat[:, [self.terms.index(t) for t in wanted]]

    def residual(self, beta):
        v = np.einsum("pli,l->pi", self.diffs, beta)
        return np.sum(v * v, axis=1) - self.rho, 2.0 * np.einsum("pi,pli->pl", v, self.diffs)

    def gauss_newton(self, beta, iters=GN_ITERS):
        for _ in range(iters):
            e, jac = self.residual(beta)
            step = lstsq(jac, -e)
            beta = beta + step
            if np.linalg.norm(step) <= 1e-13 * max(1.0, np.linalg.norm(beta)):
                break
        return beta


def _betas_1(dm, nvec):
    b = lstsq(dm.columns([(0, m) for m in range(nvec)]), dm.rho)
    beta = np.zeros(nvec)
    if b[0] < 0:
        beta[0] = np.sqrt(-b[0])
        beta[1:] = -b[1:] / beta[0]
    else:
        beta[0] = np.sqrt(b[0])
        beta[1:] = b[1:] / beta[0] if beta[0] > 0 else 0.0
    return beta


def _betas_2(dm, nvec):
    b = lstsq(dm.columns([(0, 0), (0, 1), (1, 1)]), dm.rho)
    beta = np.zeros(nvec)
    if b[0] < 0:
        beta[0] = np.sqrt(-b[0])
        beta[1] = np.sqrt(-b[2]) if b[2] < 0 else 0.0
    else:
        beta[0] = np.sqrt(b[0])
        beta[1] = np.sqrt(b[2]) if b[2] > 0 else 0.0
    if b[1] < 0:
        beta[0] = -beta[0]
    return beta


def _betas_3(dm, nvec):
    b = lstsq(dm.columns([(0, 0), (0, 1), (1, 1), (0, 2), (1, 2)]), dm.rho)
    beta = np.zeros(nvec)
    if b[0] < 0:
        beta[0] = np.sqrt(-b[0])
        beta[1] = np.sqrt(-b[2]) if b[2] < 0 else 0.0
    else:
        beta[0] = np.sqrt(b[0])
        beta[1] = np.sqrt(b[2]) if b[2] > 0 else 0.0
    if b[1] < 0:
        beta[0] = -beta[0]
    beta[2] = b[3] / beta[0] if beta[0] != 0 else 0.0
    return beta


def epnp(world, image, h_ap=1.0, beta_gn=True, planar_tol=PLANAR_TOL, prior_gamma=None):
    """EPnP pose from normalized image points; returns the best PnPSolution."""
    world, image = check_correspondences(world, image)
    ctrl, alphas = control_points(world, planar_tol)
    k = len(ctrl)
    m = _design(alphas, image)
    _, vecs = sym_eig(m.T @ m)
    nvec = min(k, 4)
    nullvecs = [vecs[:, i] for i in range(nvec)]
    dm = _DistanceModel(nullvecs, ctrl)

    sols = []
    for dim, init in ((1, _betas_1), (2, _betas_2), (3, _betas_3)):
        if dim > nvec:
            break
        beta = init(dm, nvec)
        if beta_gn:
            beta = dm.gauss_newton(beta)
        ccam = sum(b * v.reshape(k, 3) for b, v in zip(beta, nullvecs))
        pcam = alphas @ ccam
        if np.mean(pcam[:, 2]) < 0:
            pcam = -pcam
        try:
            r, t = procrustes(world, pcam)
        except DegeneracyError:
            continue
        sols.append(make_solution(r, t, world, image, "epnp", h_ap, null_dim=dim))
    if not sols:
        raise DegeneracyError("EPnP: no valid control-point solution")
    return rank_solutions(sols, prior_gamma)[0]
