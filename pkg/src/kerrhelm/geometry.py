"""Interface-fitted triangulations of a disk with two interior circles.

The computational domain is the disk of radius ``r_hat`` holding a Kerr
core (r < r0), an annulus (r0 < r < R) and an absorbing layer
(R < r < r_hat).  Meshes are built from concentric vertex rings whose
counts grow with the circumference, so the three radii are polygonal
vertex rings at every refinement level and no element straddles an
interface.  Elements are straight-edged with vertices snapped onto the
circles; the geometric error of that approximation is O(h^2), below the
O(h) discretization error of the P1 spaces built on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

_SNAP_TOL = 1e-12


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class Region(IntEnum):
    KERR = 0
    ANNULUS = 1
    PML = 2


@dataclass(frozen=True)
class RefinementLevel:
    """How many uniform refinements produced a mesh, and its resulting size."""
    level: int
    h_max: float


@dataclass
class Mesh:
    """Immutable triangulation data.

    Attributes
    ----------
    vertices : (nv, 2) float64
    triangles : (nt, 3) int32, counterclockwise
    tri_region : (nt,) int8, values from Region
    boundary_vertices : (nb,) int32, vertices on r = r_hat
    edge_vertices : (ne, 2) int32, endpoints of each interior edge
    edge_tris : (ne, 2) int32, the two triangles sharing each edge
    edge_in_omega : (ne,) bool, True iff both endpoints lie in |x| <= R
    h_max : float, largest element diameter
    radii : (r0, R, r_hat)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    tri_region: np.ndarray
    boundary_vertices: np.ndarray
    edge_vertices: np.ndarray
    edge_tris: np.ndarray
    edge_in_omega: np.ndarray
    h_max: float
    radii: tuple[float, float, float]
    _locator: "_Locator | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("vertices", "triangles", "tri_region", "boundary_vertices",
                     "edge_vertices", "edge_tris", "edge_in_omega"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def interior_edges(self):
        """Iterate ((a, b), left_tri, right_tri, in_omega) per interior edge."""
        for i in range(self.edge_vertices.shape[0]):
            yield (tuple(self.edge_vertices[i]), int(self.edge_tris[i, 0]),
                   int(self.edge_tris[i, 1]), bool(self.edge_in_omega[i]))


def signed_areas(mesh: Mesh) -> np.ndarray:
    v = mesh.vertices[mesh.triangles]
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _edge_lengths_max(vertices: np.ndarray, triangles: np.ndarray) -> float:
    v = vertices[triangles]
    e = np.concatenate([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]])
    return float(np.sqrt((e * e).sum(axis=1)).max())


def _build_edges(vertices, triangles, r_mid, r_hat):
    """Interior edge arrays plus a consistency check on boundary edges."""
    edges: dict[tuple[int, int], list[int]] = {}
    tris = triangles
    for t in range(tris.shape[0]):
        a, b, c = (int(tris[t, 0]), int(tris[t, 1]), int(tris[t, 2]))
        for u, w in ((a, b), (b, c), (c, a)):
            key = (u, w) if u < w else (w, u)
            edges.setdefault(key, []).append(t)
    ev, et = [], []
    radius = np.sqrt((vertices * vertices).sum(axis=1))
    for (u, w), owners in edges.items():
        if len(owners) == 2:
            ev.append((u, w))
            et.append(owners)
        elif len(owners) == 1:
            if abs(radius[u] - r_hat) > _SNAP_TOL or abs(radius[w] - r_hat) > _SNAP_TOL:
                raise ValueError("mesh has a boundary edge away from the outer circle")
        else:
            raise ValueError("edge shared by more than two triangles")
    ev = np.asarray(ev, dtype=np.int32).reshape(-1, 2)
    et = np.asarray(et, dtype=np.int32).reshape(-1, 2)
    in_omega = (radius[ev[:, 0]] <= r_mid + _SNAP_TOL) & (radius[ev[:, 1]] <= r_mid + _SNAP_TOL)
    return ev, et, in_omega


def _regions_from_barycenters(vertices, triangles, r0, r_mid) -> np.ndarray:
    bary = vertices[triangles].mean(axis=1)
    r = np.sqrt((bary * bary).sum(axis=1))
    out = np.full(triangles.shape[0], Region.PML, dtype=np.int8)
    out[r <= r_mid] = Region.ANNULUS
    out[r <= r0] = Region.KERR
    return out


def _finish_mesh(vertices, triangles, radii) -> Mesh:
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int32)
    areas = 0.5 * _cross2(vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
                          vertices[triangles[:, 2]] - vertices[triangles[:, 0]])
    if np.any(areas <= 0):
        raise ValueError("mesh construction produced a non-positive triangle")
    r0, r_mid, r_hat = radii
    region = _regions_from_barycenters(vertices, triangles, r0, r_mid)
    radius = np.sqrt((vertices * vertices).sum(axis=1))
    boundary = np.nonzero(np.abs(radius - r_hat) <= _SNAP_TOL)[0].astype(np.int32)
    ev, et, in_omega = _build_edges(vertices, triangles, r_mid, r_hat)
    h_max = _edge_lengths_max(vertices, triangles)
    return Mesh(vertices, triangles, region, boundary, ev, et, in_omega, h_max, radii)


def _ring_counts(ring_radii: np.ndarray, h_target: float) -> list[int]:
    return [max(6, int(round(2.0 * np.pi * rho / h_target))) for rho in ring_radii]


def _band_triangles(inner: np.ndarray, outer: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the band between two concentric vertex rings.

    Walks both rings by angle, always advancing the ring whose next vertex
    comes first; emits counterclockwise triangles and exactly
    len(inner) + len(outer) of them.
    """
    na, nb = len(inner), len(outer)
    tris = []
    i = j = 0
    while i < na or j < nb:
        adv_inner = i < na and (j >= nb or (i + 1) * nb <= (j + 1) * na)
        if adv_inner:
            tris.append((inner[i % na], outer[j % nb], inner[(i + 1) % na]))
            i += 1
        else:
            tris.append((inner[i % na], outer[j % nb], outer[(j + 1) % nb]))
            j += 1
    return tris


def build_disk_mesh(radii: tuple[float, float, float], h_target: float) -> Mesh:
    """Build a quasi-uniform ring mesh of the disk of radius radii[2].

    The circles at all three radii are resolved as vertex rings, so the
    produced triangulation is interface-fitted.  The largest element
    diameter lands in [0.25, 1.5] * h_target.
    """
    r0, r_mid, r_hat = (float(r) for r in radii)
    if not (0.0 < r0 < r_mid < r_hat):
        raise ValueError(f"radii must satisfy 0 < r0 < R < R_hat, got {radii!r}")
    if h_target <= 0.0:
        raise ValueError("h_target must be positive")
    if h_target > r0:
        raise ValueError(f"h_target {h_target!r} too large: must not exceed r0 = {r0!r}")

    spacing = 0.5 * np.sqrt(3.0) * h_target           # near-equilateral radial step
    ring_radii = [0.0]
    for lo, hi in ((0.0, r0), (r0, r_mid), (r_mid, r_hat)):
        n = max(1, int(round((hi - lo) / spacing)))
        ring_radii.extend(lo + (hi - lo) * (m + 1) / n for m in range(n))
    ring_radii = np.asarray(ring_radii)

    counts = _ring_counts(ring_radii[1:], h_target)
    vertices = [np.zeros((1, 2))]
    ring_ids: list[np.ndarray] = [np.array([0], dtype=np.int32)]
    start = 1
    for rho, n in zip(ring_radii[1:], counts):
        theta = 2.0 * np.pi * np.arange(n) / n
        vertices.append(np.column_stack([rho * np.cos(theta), rho * np.sin(theta)]))
        ring_ids.append(np.arange(start, start + n, dtype=np.int32))
        start += n
    vertices = np.vstack(vertices)
    # snap ring radii exactly (cos/sin keep |v| within a few ulp already)
    for rho, ids in zip(ring_radii[1:], ring_ids[1:]):
        norms = np.sqrt((vertices[ids] ** 2).sum(axis=1))
        vertices[ids] *= (rho / norms)[:, None]

    tris: list[tuple[int, int, int]] = []
    first = ring_ids[1]
    for i in range(len(first)):
        tris.append((0, first[i], first[(i + 1) % len(first)]))
    for inner, outer in zip(ring_ids[1:-1], ring_ids[2:]):
        tris.extend(_band_triangles(inner, outer))
    triangles = np.asarray(tris, dtype=np.int32)
    return _finish_mesh(vertices, triangles, (r0, r_mid, r_hat))


def refine(mesh: Mesh) -> Mesh:
    """Uniform 1-to-4 refinement with midpoints snapped back onto the circles.

    Edge midpoints whose endpoints both lie on one of the three tagged
    circles are projected radially onto that circle, so interface fitting
    survives refinement.
    """
    vertices = mesh.vertices
    tris = mesh.triangles
    radius = np.sqrt((vertices * vertices).sum(axis=1))
    new_vertices = [vertices]
    next_id = mesh.num_vertices
    midpoint_of: dict[tuple[int, int], int] = {}
    mids = []

    def midpoint(u: int, w: int) -> int:
        nonlocal next_id
        key = (u, w) if u < w else (w, u)
        got = midpoint_of.get(key)
        if got is not None:
            return got
        p = 0.5 * (vertices[u] + vertices[w])
        for rho in mesh.radii:
            if abs(radius[u] - rho) <= _SNAP_TOL and abs(radius[w] - rho) <= _SNAP_TOL:
                p = p * (rho / np.sqrt(p @ p))
                break
        mids.append(p)
        midpoint_of[key] = next_id
        next_id += 1
        return midpoint_of[key]

    child_tris = np.empty((4 * tris.shape[0], 3), dtype=np.int32)
    for t in range(tris.shape[0]):
        a, b, c = (int(tris[t, 0]), int(tris[t, 1]), int(tris[t, 2]))
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        child_tris[4 * t + 0] = (a, ab, ca)
        child_tris[4 * t + 1] = (b, bc, ab)
        child_tris[4 * t + 2] = (c, ca, bc)
        child_tris[4 * t + 3] = (ab, bc, ca)
    new_vertices.append(np.asarray(mids).reshape(-1, 2))
    return _finish_mesh(np.vstack(new_vertices), child_tris, mesh.radii)


# ----------------------------------------------------------------------
# point location
# ----------------------------------------------------------------------

class _Locator:
    """Uniform background grid of triangle bounding boxes."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        r_hat = mesh.radii[2]
        cell = max(mesh.h_max, r_hat / 128.0)
        self.n = max(1, int(np.ceil(2.0 * r_hat / cell)))
        self.cell = 2.0 * r_hat / self.n
        self.origin = -r_hat
        v = mesh.vertices[mesh.triangles]
        lo = ((v.min(axis=1) - self.origin) / self.cell).astype(int).clip(0, self.n - 1)
        hi = ((v.max(axis=1) - self.origin) / self.cell).astype(int).clip(0, self.n - 1)
        self.bins: dict[tuple[int, int], list[int]] = {}
        for t in range(mesh.num_triangles):
            for ix in range(lo[t, 0], hi[t, 0] + 1):
                for iy in range(lo[t, 1], hi[t, 1] + 1):
                    self.bins.setdefault((ix, iy), []).append(t)

    def candidates(self, point) -> list[int]:
        ix = int((point[0] - self.origin) / self.cell)
        iy = int((point[1] - self.origin) / self.cell)
        out: list[int] = []
        for dx in (0, -1, 1):
            for dy in (0, -1, 1):
                out.extend(self.bins.get((ix + dx, iy + dy), ()))
        return sorted(set(out))


def _barycentric(mesh: Mesh, tri: int, point: np.ndarray) -> np.ndarray:
    a, b, c = mesh.vertices[mesh.triangles[tri]]
    area2 = _cross2(b - a, c - a)
    la = _cross2(b - point, c - point) / area2
    lb = _cross2(c - point, a - point) / area2
    return np.array([la, lb, 1.0 - la - lb])


def locate(mesh: Mesh, point) -> tuple[int, np.ndarray]:
    """Containing triangle and barycentric coordinates of ``point``.

    Ties on shared edges resolve to the lowest triangle index.  Points in
    the O(h^2) sliver between the outer polygon and the circle r = r_hat
    are assigned the nearest boundary triangle with coordinates clipped
    to [0, 1].
    """
    point = np.asarray(point, dtype=float)
    r_hat = mesh.radii[2]
    if point @ point > (r_hat + 1e-10) ** 2:
        raise ValueError(f"point {point.tolist()} lies outside the disk of radius {r_hat}")
    if mesh._locator is None:
        mesh._locator = _Locator(mesh)
    best_tri, best_min = -1, -np.inf
    for t in mesh._locator.candidates(point):
        lam = _barycentric(mesh, t, point)
        m = lam.min()
        if m >= -1e-10:
            return t, lam
        if m > best_min:
            best_tri, best_min = t, m
    if best_tri >= 0 and best_min > -mesh.h_max:
        lam = np.clip(_barycentric(mesh, best_tri, point), 0.0, None)
        return best_tri, lam / lam.sum()
    raise ValueError(f"point {point.tolist()} not inside the meshed polygon")


# ----------------------------------------------------------------------
# text import/export
# ----------------------------------------------------------------------

def save_mesh(mesh: Mesh, node_path, ele_path) -> None:
    """Write 'index x y tag' and 'index v1 v2 v3 region' text files.

    Node tags mark the circle a vertex sits on: 0 free, 1 on r0, 2 on R,
    3 on r_hat.
    """
    radius = np.sqrt((mesh.vertices ** 2).sum(axis=1))
    with open(node_path, "w") as fh:
        for i, (x, y) in enumerate(mesh.vertices):
            tag = 0
            for t, rho in enumerate(mesh.radii, start=1):
                if abs(radius[i] - rho) <= _SNAP_TOL:
                    tag = t
            fh.write(f"{i} {x:.17g} {y:.17g} {tag}\n")
    with open(ele_path, "w") as fh:
        for i, (tri, reg) in enumerate(zip(mesh.triangles, mesh.tri_region)):
            fh.write(f"{i} {tri[0]} {tri[1]} {tri[2]} {int(reg)}\n")


def load_mesh(node_path, ele_path) -> Mesh:
    """Rebuild a Mesh from files written by save_mesh."""
    coords, tags = [], []
    with open(node_path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            coords.append((float(parts[1]), float(parts[2])))
            tags.append(int(parts[3]))
    vertices = np.asarray(coords)
    tags = np.asarray(tags)
    tris = []
    with open(ele_path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
    triangles = np.asarray(tris, dtype=np.int32)
    radius = np.sqrt((vertices ** 2).sum(axis=1))
    radii = []
    for t in (1, 2, 3):
        on = tags == t
        if not np.any(on):
            raise ValueError(f"node file lacks tag-{t} vertices; cannot recover the circle radii")
        radii.append(float(np.median(radius[on])))
    return _finish_mesh(vertices, triangles, tuple(radii))
