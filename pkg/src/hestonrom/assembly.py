"""Vectorized SIPG assembly of mass/stiffness matrices and load vectors.

The bilinear form combines four groups of terms: element integrals of
A grad(u) . grad(w) + (b . grad(u)) w + r u w; penalty and symmetric flux
terms on interior and Dirichlet edges; upwind coupling on element inflow
edges interior to the mesh; and an inflow term on Dirichlet inflow boundary
edges. Neumann edges contribute nothing to the stiffness; they only feed the
load. The penalty on an edge is sigma_e = C k(k+1) delta_e where delta_e is
the largest eigenvalue of the edge-averaged diffusion matrix, so pure
reaction problems (A = 0) automatically carry no penalty.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sparse

from .errors import ConfigurationError
from .mesh import DIRICHLET, INTERIOR, NEUMANN

DEFAULT_PENALTY = 3.0


@dataclass(frozen=True)
class BoundaryData:
    """Boundary value callables, each (side, t, v, x) -> array.

    `dirichlet` is queried on Dirichlet edges, `neumann` on Neumann edges
    (as the prescribed conormal flux A grad(u) . n).
    """

    dirichlet: Callable
    neumann: Callable

    @classmethod
    def homogeneous(cls):
        def zero(side, t, v, x):
            return np.zeros_like(np.asarray(v, dtype=float))

        return cls(dirichlet=zero, neumann=zero)


@dataclass(frozen=True)
class AssembledSystem:
    """Mass and stiffness matrices plus the time-dependent load map."""

    mass: sparse.csr_matrix
    stiffness: sparse.csr_matrix
    load: Callable  # t -> dense vector
    penalty_constant: float


def local_mass_blocks(space):
    """Element mass blocks, shape (n_e, n_k, n_k)."""
    phi = space.basis_at_quad
    w = space.quad_weights
    return np.einsum("q,qi,qj,e->eij", w, phi, phi, space.detB)


def assemble_mass(space):
    """Block-diagonal SPD mass matrix in CSR format."""
    blocks = local_mass_blocks(space)
    dofs = space.element_dofs
    rows = np.repeat(dofs, space.n_k, axis=1).ravel()
    cols = np.tile(dofs, (1, space.n_k)).ravel()
    mat = sparse.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(space.total_dofs, space.total_dofs)
    )
    out = mat.tocsr()
    out.sum_duplicates()
    return out


def _max_eig_2x2(mats):
    """Largest eigenvalue of symmetric 2x2 matrices, batched."""
    half_tr = 0.5 * (mats[..., 0, 0] + mats[..., 1, 1])
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    return half_tr + np.sqrt(np.maximum(half_tr**2 - det, 0.0))


class _EdgeGeometry:
    """Traces, gradients and coefficient samples on a set of edges."""

    def __init__(self, space, fld, edge_ids):
        mesh = space.mesh
        self.ids = edge_ids
        self.h = mesh.edge_lengths[edge_ids]
        self.normal = mesh.edge_normals[edge_ids]
        za = mesh.vertices[mesh.edge_vertices[edge_ids, 0]]
        zb = mesh.vertices[mesh.edge_vertices[edge_ids, 1]]
        s = space.edge_points
        # physical Gauss points along each edge, (n_E, n_g, 2)
        self.points = za[:, None, :] + s[None, :, None] * (zb - za)[:, None, :]
        # quadrature weights including arc length, (n_E, n_g)
        self.w = space.edge_weights[None, :] * self.h[:, None]
        v, x = self.points[..., 0], self.points[..., 1]
        self.A = np.asarray(fld.diffusion(v, x), dtype=float)
        self.b = np.asarray(fld.convection(v, x), dtype=float)
        # b . n at the quadrature points (n is constant per edge)
        self.bn = np.einsum("egd,ed->eg", self.b, self.normal)
        # edge-averaged diffusion -> penalty scale delta_e
        a_mean = np.einsum("g,egdc->edc", space.edge_weights, self.A)
        self.delta = _max_eig_2x2(a_mean)

    def traces(self, space, elements):
        """(phi, A grad(phi) . n) of `elements` at the edge points."""
        pts = self.points
        elems = np.broadcast_to(elements[:, None], pts.shape[:2])
        phi = space.trace_values(elems, pts)
        grad = space.trace_gradients(elems, pts)
        n_ca = np.einsum("ed,egdc->egc", self.normal, self.A)
        agn = np.einsum("egc,egic->egi", n_ca, grad)
        return phi, agn


def _scatter(rows_dofs, cols_dofs, blocks, acc):
    n_i, n_j = blocks.shape[1], blocks.shape[2]
    r = np.repeat(rows_dofs, n_j, axis=1).ravel()
    c = np.tile(cols_dofs, (1, n_i)).ravel()
    acc[0].append(r)
    acc[1].append(c)
    acc[2].append(blocks.ravel())


def assemble_stiffness(space, fld, penalty_constant=DEFAULT_PENALTY):
    """SIPG stiffness matrix; requires a mesh processed by `classify_edges`."""
    if penalty_constant <= 0:
        raise ConfigurationError("penalty constant must be positive")
    mesh = space.mesh
    if not mesh.is_classified:
        raise ConfigurationError("run classify_edges before assembling stiffness")
    n_k = space.n_k
    dofs = space.element_dofs
    acc = ([], [], [])

    # --- element integrals ---------------------------------------------
    pts = space.element_quad_points
    a_q = np.asarray(fld.diffusion(pts[..., 0], pts[..., 1]), dtype=float)
    b_q = np.asarray(fld.convection(pts[..., 0], pts[..., 1]), dtype=float)
    g = space.phys_grad_at_quad
    w = space.quad_weights
    phi = space.basis_at_quad
    blocks = np.einsum("q,eqid,eqdc,eqjc,e->eij", w, g, a_q, g, space.detB)
    blocks += np.einsum("q,qi,eqjd,eqd,e->eij", w, phi, g, b_q, space.detB)
    if fld.reaction != 0.0:
        blocks += fld.reaction * local_mass_blocks(space)
    _scatter(dofs, dofs, blocks, acc)

    sigma_scale = penalty_constant * space.degree * (space.degree + 1)

    # --- interior edges: penalty, symmetric fluxes, upwinding ----------
    int_ids = np.nonzero(mesh.edge_class == INTERIOR)[0]
    if int_ids.size:
        geo = _EdgeGeometry(space, fld, int_ids)
        e_l = mesh.edge_elems[int_ids, 0]
        e_r = mesh.edge_elems[int_ids, 1]
        phi_l, agn_l = geo.traces(space, e_l)
        phi_r, agn_r = geo.traces(space, e_r)
        pen = (sigma_scale * geo.delta / geo.h)[:, None] * geo.w

        def edge_block(wgt, fi, fj):
            return np.einsum("eg,egi,egj->eij", wgt, fi, fj)

        ll = edge_block(pen, phi_l, phi_l)
        lr = -edge_block(pen, phi_l, phi_r)
        rl = -edge_block(pen, phi_r, phi_l)
        rr = edge_block(pen, phi_r, phi_r)
        # -{A grad w} . [u] with jump [u] = u_l n - u_r n
        ll -= 0.5 * edge_block(geo.w, agn_l, phi_l)
        lr += 0.5 * edge_block(geo.w, agn_l, phi_r)
        rl -= 0.5 * edge_block(geo.w, agn_r, phi_l)
        rr += 0.5 * edge_block(geo.w, agn_r, phi_r)
        # -{A grad u} . [w]
        ll -= 0.5 * edge_block(geo.w, phi_l, agn_l)
        lr -= 0.5 * edge_block(geo.w, phi_l, agn_r)
        rl += 0.5 * edge_block(geo.w, phi_r, agn_l)
        rr += 0.5 * edge_block(geo.w, phi_r, agn_r)
        # upwind coupling on the inflow side (midpoint sign decides the set)
        mid_bn = mesh.edge_bn[int_ids]
        wbn = geo.w * geo.bn
        infl_l = mid_bn < 0.0
        if np.any(infl_l):
            sel = np.nonzero(infl_l)[0]
            ll[sel] -= edge_block(wbn[sel], phi_l[sel], phi_l[sel])
            lr[sel] += edge_block(wbn[sel], phi_l[sel], phi_r[sel])
        infl_r = mid_bn > 0.0
        if np.any(infl_r):
            sel = np.nonzero(infl_r)[0]
            rl[sel] -= edge_block(wbn[sel], phi_r[sel], phi_l[sel])
            rr[sel] += edge_block(wbn[sel], phi_r[sel], phi_r[sel])
        _scatter(dofs[e_l], dofs[e_l], ll, acc)
        _scatter(dofs[e_l], dofs[e_r], lr, acc)
        _scatter(dofs[e_r], dofs[e_l], rl, acc)
        _scatter(dofs[e_r], dofs[e_r], rr, acc)

    # --- Dirichlet boundary edges ---------------------------------------
    dir_ids = np.nonzero(mesh.edge_class == DIRICHLET)[0]
    if dir_ids.size:
        geo = _EdgeGeometry(space, fld, dir_ids)
        e0 = mesh.edge_elems[dir_ids, 0]
        phi0, agn0 = geo.traces(space, e0)
        pen = (sigma_scale * geo.delta / geo.h)[:, None] * geo.w
        blk = np.einsum("eg,egi,egj->eij", pen, phi0, phi0)
        blk -= np.einsum("eg,egi,egj->eij", geo.w, agn0, phi0)
        blk -= np.einsum("eg,egi,egj->eij", geo.w, phi0, agn0)
        infl = mesh.edge_bn[dir_ids] < 0.0
        if np.any(infl):
            sel = np.nonzero(infl)[0]
            wbn = geo.w[sel] * geo.bn[sel]
            blk[sel] -= np.einsum("eg,egi,egj->eij", wbn, phi0[sel], phi0[sel])
        _scatter(dofs[e0], dofs[e0], blk, acc)

    rows = np.concatenate(acc[0])
    cols = np.concatenate(acc[1])
    vals = np.concatenate(acc[2])
    mat = sparse.coo_matrix(
        (vals, (rows, cols)), shape=(space.total_dofs, space.total_dofs)
    ).tocsr()
    mat.sum_duplicates()
    return mat


def assemble_load(space, fld, bc_data, t, penalty_constant=DEFAULT_PENALTY):
    """Right-hand side vector l_h(t) collecting all boundary contributions."""
    mesh = space.mesh
    if not mesh.is_classified:
        raise ConfigurationError("run classify_edges before assembling loads")
    load = np.zeros(space.total_dofs)
    sigma_scale = penalty_constant * space.degree * (space.degree + 1)

    for side in range(4):
        side_ids = np.nonzero(mesh.edge_side == side)[0]
        if not side_ids.size:
            continue
        cls = mesh.edge_class[side_ids[0]]
        geo = _EdgeGeometry(space, fld, side_ids)
        e0 = mesh.edge_elems[side_ids, 0]
        v, x = geo.points[..., 0], geo.points[..., 1]
        if cls == NEUMANN:
            un = np.asarray(bc_data.neumann(side, t, v, x), dtype=float)
            phi0 = space.trace_values(
                np.broadcast_to(e0[:, None], v.shape), geo.points
            )
            vec = np.einsum("eg,eg,egi->ei", geo.w, un, phi0)
        else:
            ud = np.asarray(bc_data.dirichlet(side, t, v, x), dtype=float)
            phi0, agn0 = geo.traces(space, e0)
            pen = (sigma_scale * geo.delta / geo.h)[:, None] * geo.w
            vec = np.einsum("eg,eg,egi->ei", pen, ud, phi0)
            vec -= np.einsum("eg,eg,egi->ei", geo.w, ud, agn0)
            infl = mesh.edge_bn[side_ids] < 0.0
            if np.any(infl):
                sel = np.nonzero(infl)[0]
                wbn = geo.w[sel] * geo.bn[sel]
                vec[sel] -= np.einsum("eg,eg,egi->ei", wbn, ud[sel], phi0[sel])
        np.add.at(load, space.element_dofs[e0], vec)
    return load


def assemble_source(space, f):
    """Volume functional entries rhs_i = integral of f * phi_i."""
    pts = space.element_quad_points
    fq = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    return np.einsum(
        "q,eq,qi,e->ei", space.quad_weights, fq, space.basis_at_quad, space.detB
    ).ravel()


def l2_project(space, f):
    """Coefficients of the L2-orthogonal projection of f onto the space."""
    rhs = assemble_source(space, f).reshape(space.n_e, space.n_k)
    blocks = local_mass_blocks(space)
    return np.linalg.solve(blocks, rhs[..., None])[..., 0].ravel()


def evaluate_solution(space, coeffs, point):
    """Point evaluation of a coefficient vector; lowest element wins ties."""
    return space.evaluate(coeffs, point[0], point[1])


def assemble_system(space, fld, bc_data, penalty_constant=DEFAULT_PENALTY):
    """Bundle mass, stiffness and the load closure into an AssembledSystem."""
    mass = assemble_mass(space)
    stiffness = assemble_stiffness(space, fld, penalty_constant)

    def load(t):
        return assemble_load(space, fld, bc_data, t, penalty_constant)

    return AssembledSystem(
        mass=mass, stiffness=stiffness, load=load, penalty_constant=penalty_constant
    )
