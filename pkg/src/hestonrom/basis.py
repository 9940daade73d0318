"""Reference-triangle Lagrange basis and quadrature rules.

The reference triangle is {(xi, eta): xi >= 0, eta >= 0, xi + eta <= 1}.
Volume rules are symmetric Gauss rules with positive weights; weights are
stored so that sum(w) = 1/2 (the reference area), hence an integral over a
physical triangle K is  |det B_K| * sum_q w_q f(F_K(xi_q)).
"""

from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

# Symmetric positive-weight rules (Dunavant). Each entry is a list of orbits:
#   ("c", w)        centroid, 1 point
#   ("s3", a, w)    barycentric (a, b, b) with b = (1-a)/2, 3 points
#   ("s6", a, b, w) barycentric (a, b, 1-a-b), all 6 permutations
# Weights are normalized so each full rule sums to 1 before the 1/2 scaling.
_RULES = {
    1: [("c", 1.0)],
    2: [("s3", 2.0 / 3.0, 1.0 / 3.0)],
    4: [
        ("s3", 0.816847572980459, 0.109951743655322),
        ("s3", 0.108103018168070, 0.223381589678011),
    ],
    5: [
        ("c", 0.225),
        ("s3", 0.797426985353087, 0.125939180544827),
        ("s3", 0.059715871789770, 0.132394152788506),
    ],
    6: [
        ("s3", 0.873821971016996, 0.050844906370207),
        ("s3", 0.501426509658179, 0.116786275726379),
        ("s6", 0.053145049844816, 0.310352451033785, 0.082851075618374),
    ],
}


def _expand_orbits(orbits):
    pts, wts = [], []
    for orbit in orbits:
        if orbit[0] == "c":
            pts.append((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
            wts.append(orbit[1])
        elif orbit[0] == "s3":
            a, w = orbit[1], orbit[2]
            b = 0.5 * (1.0 - a)
            for bary in ((a, b, b), (b, a, b), (b, b, a)):
                pts.append(bary)
                wts.append(w)
        else:
            a, b, w = orbit[1], orbit[2], orbit[3]
            c = 1.0 - a - b
            for bary in (
                (a, b, c),
                (a, c, b),
                (b, a, c),
                (b, c, a),
                (c, a, b),
                (c, b, a),
            ):
                pts.append(bary)
                wts.append(w)
    bary = np.asarray(pts)
    # map barycentric (l0, l1, l2) on vertices (0,0), (1,0), (0,1)
    xy = bary[:, 1:3]
    return xy, 0.5 * np.asarray(wts)


def _duffy_rule(n):
    """Collapsed n x n product rule, exact for total degree 2n - 1.

    The Duffy map (xi, eta) -> (xi, eta (1 - xi)) turns the triangle integral
    into a square integral with Jacobian (1 - xi), which Gauss-Jacobi(1, 0)
    nodes in xi absorb exactly; eta uses plain Gauss-Legendre.
    """
    from scipy.special import roots_jacobi

    xl, wl = np.polynomial.legendre.leggauss(n)
    eta, weta = 0.5 * (xl + 1.0), 0.5 * wl
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xi, wxi = 0.5 * (xj + 1.0), 0.25 * wj
    pts = np.column_stack(
        [
            np.repeat(xi, n),
            (eta[None, :] * (1.0 - xi[:, None])).ravel(),
        ]
    )
    return pts, np.outer(wxi, weta).ravel()


@lru_cache(maxsize=None)
def triangle_rule(order):
    """Points (n_q, 2) and weights (n_q,) exact for polynomials of `order`."""
    if order < 1:
        order = 1
    for deg in sorted(_RULES):
        if deg >= order:
            return _expand_orbits(_RULES[deg])
    return _duffy_rule((order + 2) // 2)


@lru_cache(maxsize=None)
def edge_rule(n_points):
    """Gauss-Legendre rule on [0, 1]: (points, weights), weights sum to 1."""
    if n_points < 1:
        raise ConfigurationError("edge rule needs at least one point")
    x, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


class ReferenceBasis:
    """Lagrange basis of degree k on the reference triangle.

    Nodes sit on the lattice (i/k, j/k), i + j <= k, ordered row by row from
    eta = 0 upward, so for k = 1 the nodes are exactly the three vertices.
    Node evaluation of an expansion returns its coefficient (Lagrange
    property), which makes coefficients directly interpretable.
    """

    def __init__(self, degree):
        if not 1 <= degree <= 3:
            raise ConfigurationError("polynomial degree must be 1, 2 or 3")
        self.degree = degree
        k = degree
        self.exponents = [(i, j) for j in range(k + 1) for i in range(k + 1 - j)]
        self.nodes = np.array(
            [(i / k, j / k) for j in range(k + 1) for i in range(k + 1 - j)]
        )
        self.n_basis = len(self.nodes)
        vand = self._monomials(self.nodes)
        self._coeffs = np.linalg.inv(vand)  # phi_i = sum_m coeffs[m, i] * mono_m

    def _monomials(self, points):
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        cols = [xi**a * eta**b for a, b in self.exponents]
        return np.stack(cols, axis=-1)

    def _monomial_grads(self, points):
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        dxi, deta = [], []
        for a, b in self.exponents:
            dxi.append(a * xi ** max(a - 1, 0) * eta**b if a else np.zeros_like(xi))
            deta.append(xi**a * b * eta ** max(b - 1, 0) if b else np.zeros_like(xi))
        return np.stack(dxi, axis=-1), np.stack(deta, axis=-1)

    def eval(self, points):
        """Basis values at reference points, shape (..., n_basis)."""
        return self._monomials(points) @ self._coeffs

    def eval_grad(self, points):
        """Reference-coordinate gradients, shape (..., n_basis, 2)."""
        dxi, deta = self._monomial_grads(points)
        return np.stack([dxi @ self._coeffs, deta @ self._coeffs], axis=-1)
