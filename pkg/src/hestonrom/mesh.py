"""Structured triangulations of a rectangle and edge classification."""

from dataclasses import dataclass, replace, field

import numpy as np

from .errors import ConfigurationError, DomainError

# boundary side indices
SIDE_NAMES = ("v_min", "v_max", "x_min", "x_max")
V_MIN, V_MAX, X_MIN, X_MAX = range(4)

# edge classes
INTERIOR, DIRICHLET, NEUMANN = 0, 1, 2
_CLASS_BY_TAG = {"dirichlet": DIRICHLET, "neumann": NEUMANN}


@dataclass(frozen=True)
class RectDomain:
    """Localized computational rectangle [v_min, v_max] x [x_min, x_max]."""

    v_min: float
    v_max: float
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.v_min < 0.0:
            raise DomainError("v_min must be nonnegative")
        if not self.v_min < self.v_max:
            raise DomainError("require v_min < v_max")
        if not self.x_min < self.x_max:
            raise DomainError("require x_min < x_max")

    @property
    def area(self):
        return (self.v_max - self.v_min) * (self.x_max - self.x_min)

    def contains(self, v, x, tol=1e-12):
        sv = tol * max(1.0, abs(self.v_min), abs(self.v_max))
        sx = tol * max(1.0, abs(self.x_min), abs(self.x_max))
        return (
            self.v_min - sv <= v <= self.v_max + sv
            and self.x_min - sx <= x <= self.x_max + sx
        )


@dataclass(frozen=True)
class Mesh:
    """Triangulation produced by `build_structured_mesh`.

    Edge conventions: interior edge normals point outward from
    `edge_elems[:, 0]`; boundary edges have `edge_elems[:, 1] == -1` and
    outward (domain) normals. `edge_class` starts as interior/Dirichlet and
    is finalized by `classify_edges`, which also fills `edge_bn` with
    b . n at edge midpoints (the discrete inflow indicator).
    """

    domain: RectDomain
    n_v: int
    n_x: int
    vertices: np.ndarray  # (n_p, 2) as (v, x)
    triangles: np.ndarray  # (n_e, 3) counterclockwise
    edge_vertices: np.ndarray  # (n_E, 2)
    edge_elems: np.ndarray  # (n_E, 2), -1 for missing neighbor
    edge_normals: np.ndarray  # (n_E, 2) unit
    edge_lengths: np.ndarray  # (n_E,)
    edge_side: np.ndarray  # (n_E,) -1 interior else V_MIN..X_MAX
    edge_class: np.ndarray  # (n_E,) INTERIOR / DIRICHLET / NEUMANN
    edge_bn: np.ndarray | None = field(default=None)

    def __post_init__(self):
        for arr in (
            self.vertices,
            self.triangles,
            self.edge_vertices,
            self.edge_elems,
            self.edge_normals,
            self.edge_lengths,
            self.edge_side,
            self.edge_class,
        ):
            arr.flags.writeable = False
        if self.edge_bn is not None:
            self.edge_bn.flags.writeable = False

    @property
    def n_elements(self):
        return self.triangles.shape[0]

    @property
    def n_edges(self):
        return self.edge_vertices.shape[0]

    @property
    def is_classified(self):
        return self.edge_bn is not None

    def triangle_coords(self, indices=None):
        tri = self.triangles if indices is None else self.triangles[indices]
        return self.vertices[tri]

    def triangle_areas(self):
        coords = self.triangle_coords()
        d1 = coords[:, 1] - coords[:, 0]
        d2 = coords[:, 2] - coords[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def locate(self, v, x, tol=1e-12):
        """Element containing (v, x); ties go to the lowest element index."""
        dom = self.domain
        if not dom.contains(v, x, tol):
            raise DomainError(f"point ({v}, {x}) outside the domain")
        dv = (dom.v_max - dom.v_min) / self.n_v
        dx = (dom.x_max - dom.x_min) / self.n_x
        fv = (v - dom.v_min) / dv
        fx = (x - dom.x_min) / dx
        iv0 = min(max(int(np.floor(fv)), 0), self.n_v - 1)
        ix0 = min(max(int(np.floor(fx)), 0), self.n_x - 1)
        cand_v = {iv0}
        cand_x = {ix0}
        # a point sitting on a grid line also belongs to the previous cell
        if iv0 > 0 and abs(fv - iv0) < 1e-10:
            cand_v.add(iv0 - 1)
        if iv0 < self.n_v - 1 and abs(fv - (iv0 + 1)) < 1e-10:
            cand_v.add(iv0 + 1)
        if ix0 > 0 and abs(fx - ix0) < 1e-10:
            cand_x.add(ix0 - 1)
        if ix0 < self.n_x - 1 and abs(fx - (ix0 + 1)) < 1e-10:
            cand_x.add(ix0 + 1)
        elems = sorted(
            2 * (iv * self.n_x + ix) + t
            for iv in cand_v
            for ix in cand_x
            for t in (0, 1)
        )
        point = np.array([v, x])
        scale = max(dv, dx)
        for e in elems:
            lam = self.barycentric(e, point)
            if np.all(lam >= -1e-12 * max(1.0, scale)):
                return e
        raise DomainError(f"point ({v}, {x}) not located in any candidate element")

    def barycentric(self, element, point):
        p0, p1, p2 = self.vertices[self.triangles[element]]
        mat = np.column_stack([p1 - p0, p2 - p0])
        lam12 = np.linalg.solve(mat, np.asarray(point) - p0)
        return np.array([1.0 - lam12.sum(), lam12[0], lam12[1]])


def build_structured_mesh(domain, n_v, n_x):
    """Tensor-grid triangulation: each cell split along its lower-left to
    upper-right diagonal (fixed direction for reproducibility).

    Elements are numbered cell by cell (v-major, x-minor), two triangles per
    cell. Edge order follows the first traversal over triangles, which makes
    the whole construction deterministic.
    """
    if n_v < 1 or n_x < 1:
        raise ConfigurationError("cell counts must be at least 1")
    vv = np.linspace(domain.v_min, domain.v_max, n_v + 1)
    xx = np.linspace(domain.x_min, domain.x_max, n_x + 1)
    n_px = n_x + 1

    def vid(iv, ix):
        return iv * n_px + ix

    vertices = np.empty(((n_v + 1) * n_px, 2))
    for iv in range(n_v + 1):
        vertices[iv * n_px : (iv + 1) * n_px, 0] = vv[iv]
        vertices[iv * n_px : (iv + 1) * n_px, 1] = xx
    triangles = np.empty((2 * n_v * n_x, 3), dtype=np.int64)
    e = 0
    for iv in range(n_v):
        for ix in range(n_x):
            p00 = vid(iv, ix)
            p10 = vid(iv + 1, ix)
            p01 = vid(iv, ix + 1)
            p11 = vid(iv + 1, ix + 1)
            triangles[e] = (p00, p10, p11)
            triangles[e + 1] = (p00, p11, p01)
            e += 2

    edge_index = {}
    ev, elems, normals, lengths = [], [], [], []
    for t, tri in enumerate(triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in edge_index:
                elems[edge_index[key]][1] = t
            else:
                edge_index[key] = len(ev)
                ev.append((a, b))
                elems.append([t, -1])
                tang = vertices[b] - vertices[a]
                h = float(np.hypot(*tang))
                # CCW traversal => outward normal is the tangent rotated -90 deg
                normals.append((tang[1] / h, -tang[0] / h))
                lengths.append(h)
    edge_vertices = np.asarray(ev, dtype=np.int64)
    edge_elems = np.asarray(elems, dtype=np.int64)
    edge_normals = np.asarray(normals)
    edge_lengths = np.asarray(lengths)

    mids = 0.5 * (vertices[edge_vertices[:, 0]] + vertices[edge_vertices[:, 1]])
    edge_side = np.full(len(ev), -1, dtype=np.int8)
    boundary = edge_elems[:, 1] < 0
    tol_v = 1e-12 * max(1.0, abs(domain.v_min), abs(domain.v_max))
    tol_x = 1e-12 * max(1.0, abs(domain.x_min), abs(domain.x_max))
    edge_side[boundary & (np.abs(mids[:, 0] - domain.v_min) < tol_v)] = V_MIN
    edge_side[boundary & (np.abs(mids[:, 0] - domain.v_max) < tol_v)] = V_MAX
    edge_side[boundary & (np.abs(mids[:, 1] - domain.x_min) < tol_x)] = X_MIN
    edge_side[boundary & (np.abs(mids[:, 1] - domain.x_max) < tol_x)] = X_MAX
    if np.any(boundary & (edge_side < 0)):
        raise DomainError("boundary edge not matched to a rectangle side")

    edge_class = np.where(boundary, DIRICHLET, INTERIOR).astype(np.int8)
    return Mesh(
        domain=domain,
        n_v=n_v,
        n_x=n_x,
        vertices=vertices,
        triangles=triangles,
        edge_vertices=edge_vertices,
        edge_elems=edge_elems,
        edge_normals=edge_normals,
        edge_lengths=edge_lengths,
        edge_side=edge_side,
        edge_class=edge_class,
    )


def classify_edges(mesh, fld, bc_tags):
    """Attach boundary tags and the midpoint inflow indicator b . n.

    `bc_tags` maps each side name to "dirichlet" or "neumann". The sign of
    `edge_bn` at the edge midpoint decides the discrete inflow side: negative
    means `edge_elems[:, 0]` (or the domain, for boundary edges) sees inflow.
    """
    tags = dict(bc_tags)
    unknown = set(tags) - set(SIDE_NAMES)
    if unknown:
        raise ConfigurationError(f"unknown boundary sides: {sorted(unknown)}")
    missing = set(SIDE_NAMES) - set(tags)
    if missing:
        raise ConfigurationError(f"missing boundary tags: {sorted(missing)}")
    for side, tag in tags.items():
        if tag not in _CLASS_BY_TAG:
            raise ConfigurationError(f"bad tag {tag!r} for side {side}")

    mids = 0.5 * (
        mesh.vertices[mesh.edge_vertices[:, 0]]
        + mesh.vertices[mesh.edge_vertices[:, 1]]
    )
    b = np.asarray(fld.convection(mids[:, 0], mids[:, 1]), dtype=float)
    edge_bn = np.einsum("ed,ed->e", b, mesh.edge_normals)

    edge_class = np.full(mesh.n_edges, INTERIOR, dtype=np.int8)
    for side_idx, side in enumerate(SIDE_NAMES):
        on_side = mesh.edge_side == side_idx
        edge_class[on_side] = _CLASS_BY_TAG[tags[side]]
    return replace(mesh, edge_class=edge_class, edge_bn=edge_bn)
