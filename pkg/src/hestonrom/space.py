"""Broken polynomial space on a triangulation, with cached element geometry."""

import numpy as np

from .basis import ReferenceBasis, edge_rule, triangle_rule
from .errors import DomainError


class DGSpace:
    """Discontinuous piecewise-polynomial space of degree k.

    Degrees of freedom are element-local Lagrange coefficients; element m
    owns the contiguous global range [m*n_k, (m+1)*n_k). Basis functions of
    distinct elements have disjoint support, so the mass matrix is block
    diagonal with n_k x n_k blocks.
    """

    def __init__(self, mesh, degree=1):
        self.mesh = mesh
        self.degree = degree
        self.ref = ReferenceBasis(degree)
        self.n_k = self.ref.n_basis
        self.n_e = mesh.n_elements
        self.total_dofs = self.n_k * self.n_e
        self.element_dofs = np.arange(self.total_dofs, dtype=np.int64).reshape(
            self.n_e, self.n_k
        )

        coords = mesh.triangle_coords()
        self.p0 = coords[:, 0]
        # affine map F(xi) = B xi + p0, columns of B are the edge vectors
        self.B = np.stack([coords[:, 1] - self.p0, coords[:, 2] - self.p0], axis=-1)
        self.detB = self.B[:, 0, 0] * self.B[:, 1, 1] - self.B[:, 0, 1] * self.B[:, 1, 0]
        if np.any(self.detB <= 0):
            raise DomainError("mesh contains degenerate or misoriented triangles")
        self.Binv = (
            np.stack(
                [
                    np.stack([self.B[:, 1, 1], -self.B[:, 0, 1]], axis=-1),
                    np.stack([-self.B[:, 1, 0], self.B[:, 0, 0]], axis=-1),
                ],
                axis=1,
            )
            / self.detB[:, None, None]
        )
        self.areas = 0.5 * self.detB

        # volume rule of order 2k+1 and (k+1)-point edge rule: exact for all
        # assembled polynomial integrands
        self.quad_points, self.quad_weights = triangle_rule(2 * degree + 1)
        self.edge_points, self.edge_weights = edge_rule(degree + 1)
        self.basis_at_quad = self.ref.eval(self.quad_points)
        self.grad_at_quad = self.ref.eval_grad(self.quad_points)
        # physical quadrature points, shape (n_e, n_q, 2)
        self.element_quad_points = (
            self.p0[:, None, :]
            + np.einsum("edc,qc->eqd", self.B, self.quad_points)
        )
        # physical gradients of all basis functions at the volume rule
        self.phys_grad_at_quad = np.einsum(
            "ecd,qic->eqid", self.Binv, self.grad_at_quad
        )

    def dof_map(self, element, local):
        return element * self.n_k + local

    def reference_coords(self, elements, points):
        """Pull physical points back to reference coordinates, batched.

        `elements` has shape (...,) and `points` (..., 2); the result matches
        `points`. No containment check is performed.
        """
        rel = points - self.p0[elements]
        return np.einsum("...dc,...c->...d", self.Binv[elements], rel)

    def trace_values(self, elements, points):
        """Basis values of each element at given physical points."""
        return self.ref.eval(self.reference_coords(elements, points))

    def trace_gradients(self, elements, points):
        """Physical basis gradients of each element at given physical points."""
        ref_grad = self.ref.eval_grad(self.reference_coords(elements, points))
        return np.einsum("...cd,...ic->...id", self.Binv[elements], ref_grad)

    def evaluate(self, coeffs, v, x):
        """Point value of the broken function with the given coefficients."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] != self.total_dofs:
            raise ValueError("coefficient vector does not match the space")
        e = self.mesh.locate(v, x)
        vals = self.ref.eval(self.reference_coords(np.array(e), np.array([v, x])))
        return float(vals @ coeffs[self.element_dofs[e]])

    def point_weights(self, v, x):
        """(element dofs, basis weights) so that value = weights @ coeffs[dofs]."""
        e = self.mesh.locate(v, x)
        vals = self.ref.eval(self.reference_coords(np.array(e), np.array([v, x])))
        return self.element_dofs[e], vals
