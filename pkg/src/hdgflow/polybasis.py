"""Scalar Lagrange bases P_k on the reference triangle/interval and
quadrature rules of prescribed polynomial exactness.

Reference triangle: vertices (0,0), (1,0), (0,1), measure 1/2.
Reference interval: [0,1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

K_MIN, K_MAX = 1, 4


class UnsupportedDegreeError(ValueError):
    pass


def tri_dim(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def monomial_exponents(k: int) -> np.ndarray:
    """Exponent pairs (a, b) of the monomials spanning P_k on a triangle."""
    return np.array([(a, b) for tot in range(k + 1) for a in range(tot, -1, -1)
                     for b in [tot - a]], dtype=int)


def lagrange_nodes(element: str, k: int) -> np.ndarray:
    """Equispaced Lagrange nodes on the reference element."""
    if element == "interval":
        if k == 0:
            return np.array([[0.5]])
        return np.linspace(0.0, 1.0, k + 1).reshape(-1, 1)
    if element == "triangle":
        if k == 0:
            return np.array([[1 / 3, 1 / 3]])
        pts = [(i / k, j / k) for tot in range(k + 1)
               for i in range(tot, -1, -1) for j in [tot - i]]
        return np.array(pts)
    raise ValueError(f"unknown element {element!r}")


@dataclass(frozen=True)
class BasisSet:
    """Lagrange basis tables at a fixed set of evaluation points.

    values[q, i] is basis i at point q; grads[q, i, d] its reference
    gradient.  Nodal: basis i is 1 at node i and 0 at the other nodes.
    """

    element: str
    degree: int
    nodes: np.ndarray
    points: np.ndarray
    values: np.ndarray
    grads: np.ndarray


def _monomial_tables(element: str, k: int, points: np.ndarray):
    points = np.asarray(points, dtype=float)
    if element == "interval":
        pts = points.reshape(-1, 1)
        expo = np.arange(k + 1)
        vals = pts[:, 0:1] ** expo[None, :]
        grads = np.zeros((len(pts), k + 1, 1))
        for j, a in enumerate(expo):
            if a > 0:
                grads[:, j, 0] = a * pts[:, 0] ** (a - 1)
        return vals, grads
    expo = monomial_exponents(k)
    x, y = points[:, 0], points[:, 1]
    vals = np.empty((len(points), len(expo)))
    grads = np.zeros((len(points), len(expo), 2))
    for j, (a, b) in enumerate(expo):
        vals[:, j] = x**a * y**b
        if a > 0:
            grads[:, j, 0] = a * x ** (a - 1) * y**b
        if b > 0:
            grads[:, j, 1] = b * x**a * y ** (b - 1)
    return vals, grads


@lru_cache(maxsize=None)
def _nodal_coefficients(element: str, k: int) -> np.ndarray:
    nodes = lagrange_nodes(element, k)
    V, _ = _monomial_tables(element, k, nodes)
    return np.linalg.inv(V)


def basis_eval(element: str, k: int, points) -> BasisSet:
    """Evaluate all P_k Lagrange basis functions and gradients at `points`."""
    if not (K_MIN <= k <= K_MAX):
        raise UnsupportedDegreeError(f"degree k={k} outside supported range "
                                     f"[{K_MIN}, {K_MAX}]")
    return _basis_eval_unchecked(element, k, points)


def _basis_eval_unchecked(element: str, k: int, points) -> BasisSet:
    """Like basis_eval but also admits k=0 (constant pressure spaces)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    C = _nodal_coefficients(element, k)
    V, G = _monomial_tables(element, k, points)
    values = V @ C
    grads = np.einsum("qjd,ji->qid", G, C)
    return BasisSet(element=element, degree=k, nodes=lagrange_nodes(element, k),
                    points=points, values=values, grads=grads)


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray   # (nq, dim) reference coordinates
    weights: np.ndarray  # (nq,), all positive
    exactness: int


MAX_EXACTNESS = 3 * K_MAX + 3


def quadrature_rule(element: str, exactness: int) -> QuadRule:
    """Rule integrating all polynomials up to `exactness` exactly.

    Triangle rules come from the collapsed-coordinate (Duffy) construction
    with a Gauss-Jacobi rule absorbing the map's (1-eta) factor, so all
    weights are positive at any degree.
    """
    if exactness < 0 or exactness > MAX_EXACTNESS:
        raise UnsupportedDegreeError(f"exactness {exactness} outside [0, "
                                     f"{MAX_EXACTNESS}]")
    n = max(1, (exactness + 2) // 2)  # ceil((d+1)/2)
    if element == "interval":
        t, w = roots_legendre(n)
        return QuadRule(points=((t + 1) / 2).reshape(-1, 1),
                        weights=w / 2, exactness=exactness)
    if element == "triangle":
        xi, wx = roots_legendre(n)
        xi, wx = (xi + 1) / 2, wx / 2
        tj, wj = roots_jacobi(n, 1.0, 0.0)
        eta, we = (tj + 1) / 2, wj / 4
        pts = np.empty((n * n, 2))
        wts = np.empty(n * n)
        for a in range(n):
            for b in range(n):
                pts[a * n + b] = (xi[a] * (1 - eta[b]), eta[b])
                wts[a * n + b] = wx[a] * we[b]
        return QuadRule(points=pts, weights=wts, exactness=exactness)
    raise ValueError(f"unknown element {element!r}")


def default_exactness(k: int) -> int:
    """Assembly rule degree: exact for the degree-3k advective facet term."""
    return 3 * k + 1
