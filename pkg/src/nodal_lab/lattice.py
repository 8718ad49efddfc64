"""Periodic planar lattices, their duals, and compatible polygonal subdomains.

Three families: hexagonal (pointy-top, vertex degree 3), square, and
triangular.  A lattice window is materialised over a bounding box with dense
integer ids in row-major period order: O(1) adjacency arrays, no hash maps.

Geometry conventions (mesh eps, hexagon side h = side_factor * eps):

* hexagonal: face centres c(i,j) = origin + (sqrt3*h*(i + j/2), 1.5*h*j);
  vertex sublattices T(i,j) = c + (0,h), B(i,j) = c - (0,h); every edge has
  exactly one T endpoint, giving the edge index (i,j,d) with d in {0,1,2}.
* square: vertices at origin + h*(i,j).
* triangular: vertices at origin + h*(i + j/2, sqrt3/2*j); faces split into
  up/down triangles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

SQRT3 = np.sqrt(3.0)
Family = Literal["hexagonal", "square", "triangular"]

# side = PAIR_RESCALE * mesh puts two adjacent hexagons exactly inside the
# unit-mesh circle about their shared edge midpoint (circumradius h*sqrt13/2)
PAIR_RESCALE = 2.0 / np.sqrt(13.0)


@dataclass(frozen=True)
class LatticeSpec:
    family: Family
    mesh: float
    origin: tuple = (0.0, 0.0)
    rescale_hex_pair: bool = False

    def __post_init__(self):
        if self.mesh <= 0:
            raise ValueError("mesh must be positive")
        if self.rescale_hex_pair and self.family != "hexagonal":
            raise ValueError("pair rescale flag applies to the hexagonal family only")

    @property
    def side(self) -> float:
        if self.family == "hexagonal" and self.rescale_hex_pair:
            return self.mesh * PAIR_RESCALE
        return self.mesh

    @property
    def d_lattice(self) -> float:
        """Largest face diameter d(L) in absolute units."""
        h = self.side
        return {"hexagonal": 2.0 * h, "square": np.sqrt(2.0) * h, "triangular": h}[self.family]


class Lattice:
    """Materialised window of a periodic lattice.

    Arrays:
      vertices   (nV,2) positions
      edges      (nE,2) vertex ids, canonical orientation
      edge_dir   (nE,)  direction class
      edge_faces (nE,2) adjacent face ids, -1 outside window
      faces      (nF,k) vertex ids, counter-clockwise
      face_edges (nF,k) edge ids aligned with the vertex cycle
      face_centers (nF,2)
    """

    strictly_convex = True  # all three families: interior angles < pi

    def __init__(self, spec: LatticeSpec, bbox):
        x0, x1, y0, y1 = bbox
        if not (x1 > x0 and y1 > y0):
            raise ValueError("bbox degenerate")
        self.spec = spec
        self.bbox = tuple(float(v) for v in bbox)
        self._dual: Optional[Lattice] = None
        h = spec.side
        ox, oy = spec.origin
        build = {"hexagonal": self._build_hexagonal,
                 "square": self._build_square,
                 "triangular": self._build_triangular}[spec.family]
        build(h, ox, oy, x0, x1, y0, y1)
        self.n_vertices = len(self.vertices)
        self.n_edges = len(self.edges)
        self.n_faces = len(self.faces)
        if np.any(self.edges < 0):
            raise AssertionError("lattice build error: edge references padded-out vertex")
        self.edge_lengths = np.linalg.norm(
            self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1)

    # ------------------------------------------------------------------ hex
    def _build_hexagonal(self, h, ox, oy, x0, x1, y0, y1):
        # face index ranges covering the bbox (+1 cell margin)
        ux, uy = SQRT3 * h, 1.5 * h
        j_lo = int(np.floor((y0 - oy) / uy)) - 2
        j_hi = int(np.ceil((y1 - oy) / uy)) + 2
        i_lo = int(np.floor((x0 - ox) / ux - 0.5 * j_hi)) - 2
        i_hi = int(np.ceil((x1 - ox) / ux - 0.5 * j_lo)) + 2
        ni, nj = i_hi - i_lo, j_hi - j_lo
        # padded grids: vertices (T,B) must cover every materialised edge
        pv = 3
        niv, njv = ni + 2 * pv, nj + 2 * pv
        self._hex = dict(i_lo=i_lo, j_lo=j_lo, ni=ni, nj=nj, pv=pv, niv=niv, njv=njv, h=h)

        iv = np.arange(i_lo - pv, i_hi + pv)
        jv = np.arange(j_lo - pv, j_hi + pv)
        II, JJ = np.meshgrid(iv, jv, indexing="ij")      # (niv, njv)
        cx = ox + ux * (II + 0.5 * JJ)
        cy = oy + uy * JJ
        # vertex ids: ((i_rel*njv + j_rel)*2 + s), s=0 top / 1 bottom
        vx = np.stack([cx, cx], axis=-1).reshape(-1)
        vy = np.stack([cy + h, cy - h], axis=-1).reshape(-1)
        self.vertices = np.column_stack([vx, vy])

        def vid(i, j, s):
            ir, jr = i - (i_lo - pv), j - (j_lo - pv)
            ok = (ir >= 0) & (ir < niv) & (jr >= 0) & (jr < njv)
            out = np.where(ok, (ir * njv + jr) * 2 + s, -1)
            return out

        # edges indexed by T-vertex (i,j) and d in {0: up, 1: down-right, 2: down-left}
        # materialise edges over the padded-1 grid
        pe = 1
        ie = np.arange(i_lo - pe, i_hi + pe)
        je = np.arange(j_lo - pe, j_hi + pe)
        nie, nje = len(ie), len(je)
        self._hex.update(i_e0=i_lo - pe, j_e0=j_lo - pe, nie=nie, nje=nje)
        IE, JE = np.meshgrid(ie, je, indexing="ij")
        IE, JE = IE.ravel(), JE.ravel()
        tv = vid(IE, JE, 0)
        ends = np.stack([vid(IE - 1, JE + 2, 1), vid(IE, JE + 1, 1), vid(IE - 1, JE + 1, 1)],
                        axis=1)  # d = 0,1,2
        e_v = np.stack([np.repeat(tv, 3).reshape(-1, 3), ends], axis=-1).reshape(-1, 2)
        self.edges = e_v
        self.edge_dir = np.tile(np.array([0, 1, 2]), nie * nje)

        def eid(i, j, d):
            ir, jr = i - (i_lo - pe), j - (j_lo - pe)
            ok = (ir >= 0) & (ir < nie) & (jr >= 0) & (jr < nje)
            return np.where(ok, (ir * nje + jr) * 3 + d, -1)

        # faces over [i_lo,i_hi) x [j_lo,j_hi)
        IF, JF = np.meshgrid(np.arange(i_lo, i_hi), np.arange(j_lo, j_hi), indexing="ij")
        IF, JF = IF.ravel(), JF.ravel()
        self.face_centers = np.column_stack([ox + ux * (IF + 0.5 * JF), oy + uy * JF])
        self.faces = np.stack([
            vid(IF, JF, 0), vid(IF - 1, JF + 1, 1), vid(IF, JF - 1, 0),
            vid(IF, JF, 1), vid(IF + 1, JF - 1, 0), vid(IF, JF + 1, 1)], axis=1)
        self.face_edges = np.stack([
            eid(IF, JF, 2), eid(IF, JF - 1, 0), eid(IF, JF - 1, 1),
            eid(IF + 1, JF - 1, 2), eid(IF + 1, JF - 1, 0), eid(IF, JF, 1)], axis=1)

        def fid(i, j):
            ir, jr = i - i_lo, j - j_lo
            ok = (ir >= 0) & (ir < ni) & (jr >= 0) & (jr < nj)
            return np.where(ok, ir * nj + jr, -1)

        self.edge_faces = np.stack([
            np.stack([fid(IE - 1, JE + 1), fid(IE, JE + 1)], axis=1),   # d=0: left,right
            np.stack([fid(IE, JE), fid(IE, JE + 1)], axis=1),           # d=1
            np.stack([fid(IE, JE), fid(IE - 1, JE + 1)], axis=1),       # d=2
        ], axis=1).reshape(-1, 2)
        self.face_area = 1.5 * SQRT3 * h * h
        self._face_grid = (IF, JF)

    # --------------------------------------------------------------- square
    def _build_square(self, h, ox, oy, x0, x1, y0, y1):
        i_lo, i_hi = int(np.floor((x0 - ox) / h)) - 2, int(np.ceil((x1 - ox) / h)) + 2
        j_lo, j_hi = int(np.floor((y0 - oy) / h)) - 2, int(np.ceil((y1 - oy) / h)) + 2
        ni, nj = i_hi - i_lo, j_hi - j_lo
        pv = 1
        niv, njv = ni + 1 + 2 * pv, nj + 1 + 2 * pv
        iv = np.arange(i_lo - pv, i_hi + 1 + pv)
        jv = np.arange(j_lo - pv, j_hi + 1 + pv)
        II, JJ = np.meshgrid(iv, jv, indexing="ij")
        self.vertices = np.column_stack([(ox + h * II).ravel(), (oy + h * JJ).ravel()])
        self._sq = dict(i_lo=i_lo, j_lo=j_lo, ni=ni, nj=nj, pv=pv, niv=niv, njv=njv, h=h)

        def vid(i, j):
            ir, jr = i - (i_lo - pv), j - (j_lo - pv)
            ok = (ir >= 0) & (ir < niv) & (jr >= 0) & (jr < njv)
            return np.where(ok, ir * njv + jr, -1)

        nie, nje = ni + 1, nj + 1
        IE, JE = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing="ij")
        IE, JE = IE.ravel(), JE.ravel()
        e_v = np.stack([
            np.stack([vid(IE, JE), vid(IE + 1, JE)], axis=1),   # d=0 horizontal
            np.stack([vid(IE, JE), vid(IE, JE + 1)], axis=1),   # d=1 vertical
        ], axis=1).reshape(-1, 2)
        self.edges = e_v
        self.edge_dir = np.tile(np.array([0, 1]), nie * nje)
        self._sq.update(i_e0=i_lo, j_e0=j_lo, nie=nie, nje=nje)

        def eid(i, j, d):
            ir, jr = i - i_lo, j - j_lo
            ok = (ir >= 0) & (ir < nie) & (jr >= 0) & (jr < nje)
            return np.where(ok, (ir * nje + jr) * 2 + d, -1)

        def fid(i, j):
            ir, jr = i - i_lo, j - j_lo
            ok = (ir >= 0) & (ir < ni) & (jr >= 0) & (jr < nj)
            return np.where(ok, ir * nj + jr, -1)

        IF, JF = np.meshgrid(np.arange(i_lo, i_hi), np.arange(j_lo, j_hi), indexing="ij")
        IF, JF = IF.ravel(), JF.ravel()
        self.faces = np.stack([vid(IF, JF), vid(IF + 1, JF), vid(IF + 1, JF + 1), vid(IF, JF + 1)],
                              axis=1)
        self.face_edges = np.stack([eid(IF, JF, 0), eid(IF + 1, JF, 1),
                                    eid(IF, JF + 1, 0), eid(IF, JF, 1)], axis=1)
        self.face_centers = np.column_stack([ox + h * (IF + 0.5), oy + h * (JF + 0.5)])
        self.edge_faces = np.stack([
            np.stack([fid(IE, JE - 1), fid(IE, JE)], axis=1),
            np.stack([fid(IE - 1, JE), fid(IE, JE)], axis=1),
        ], axis=1).reshape(-1, 2)
        self.face_area = h * h
        self._face_grid = (IF, JF)

    # ----------------------------------------------------------- triangular
    def _build_triangular(self, h, ox, oy, x0, x1, y0, y1):
        uy = 0.5 * SQRT3 * h
        j_lo, j_hi = int(np.floor((y0 - oy) / uy)) - 2, int(np.ceil((y1 - oy) / uy)) + 2
        i_lo = int(np.floor((x0 - ox) / h - 0.5 * j_hi)) - 2
        i_hi = int(np.ceil((x1 - ox) / h - 0.5 * j_lo)) + 2
        ni, nj = i_hi - i_lo, j_hi - j_lo
        pv = 1
        niv, njv = ni + 1 + 2 * pv, nj + 1 + 2 * pv
        iv = np.arange(i_lo - pv, i_hi + 1 + pv)
        jv = np.arange(j_lo - pv, j_hi + 1 + pv)
        II, JJ = np.meshgrid(iv, jv, indexing="ij")
        self.vertices = np.column_stack([(ox + h * (II + 0.5 * JJ)).ravel(),
                                         (oy + uy * JJ).ravel()])
        self._tri = dict(i_lo=i_lo, j_lo=j_lo, ni=ni, nj=nj, pv=pv, niv=niv, njv=njv, h=h)

        def vid(i, j):
            ir, jr = i - (i_lo - pv), j - (j_lo - pv)
            ok = (ir >= 0) & (ir < niv) & (jr >= 0) & (jr < njv)
            return np.where(ok, ir * njv + jr, -1)

        nie, nje = ni + 1, nj + 1
        IE, JE = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing="ij")
        IE, JE = IE.ravel(), JE.ravel()
        e_v = np.stack([
            np.stack([vid(IE, JE), vid(IE + 1, JE)], axis=1),       # d=0 at 0 deg
            np.stack([vid(IE, JE), vid(IE, JE + 1)], axis=1),       # d=1 at 60 deg
            np.stack([vid(IE + 1, JE), vid(IE, JE + 1)], axis=1),   # d=2 at 120 deg
        ], axis=1).reshape(-1, 2)
        self.edges = e_v
        self.edge_dir = np.tile(np.array([0, 1, 2]), nie * nje)
        self._tri.update(i_e0=i_lo, j_e0=j_lo, nie=nie, nje=nje)

        def eid(i, j, d):
            ir, jr = i - i_lo, j - j_lo
            ok = (ir >= 0) & (ir < nie) & (jr >= 0) & (jr < nje)
            return np.where(ok, (ir * nje + jr) * 3 + d, -1)

        def fid(i, j, t):
            ir, jr = i - i_lo, j - j_lo
            ok = (ir >= 0) & (ir < ni) & (jr >= 0) & (jr < nj)
            return np.where(ok, (ir * nj + jr) * 2 + t, -1)

        IF, JF = np.meshgrid(np.arange(i_lo, i_hi), np.arange(j_lo, j_hi), indexing="ij")
        IF, JF = IF.ravel(), JF.ravel()
        up = np.stack([vid(IF, JF), vid(IF + 1, JF), vid(IF, JF + 1)], axis=1)
        dn = np.stack([vid(IF + 1, JF), vid(IF + 1, JF + 1), vid(IF, JF + 1)], axis=1)
        self.faces = np.stack([up, dn], axis=1).reshape(-1, 3)
        fe_up = np.stack([eid(IF, JF, 0), eid(IF, JF, 2), eid(IF, JF, 1)], axis=1)
        fe_dn = np.stack([eid(IF + 1, JF, 1), eid(IF, JF + 1, 0), eid(IF, JF, 2)], axis=1)
        self.face_edges = np.stack([fe_up, fe_dn], axis=1).reshape(-1, 3)
        cx_up = ox + h * (IF + 0.5 * JF) + h * 0.5
        cy_up = oy + uy * JF + uy / 3.0
        cx_dn = ox + h * (IF + 0.5 * JF) + h
        cy_dn = oy + uy * JF + 2.0 * uy / 3.0
        self.face_centers = np.stack(
            [np.column_stack([cx_up, cy_up]), np.column_stack([cx_dn, cy_dn])],
            axis=1).reshape(-1, 2)
        self.edge_faces = np.stack([
            np.stack([fid(IE, JE - 1, 1), fid(IE, JE, 0)], axis=1),
            np.stack([fid(IE - 1, JE, 1), fid(IE, JE, 0)], axis=1),
            np.stack([fid(IE, JE, 0), fid(IE, JE, 1)], axis=1),
        ], axis=1).reshape(-1, 2)
        self.face_area = 0.25 * SQRT3 * h * h
        cx = 0.5 * (IF.reshape(-1, 1) * 0 + 1)  # unused placeholder keeps shapes explicit
        self._face_grid = (IF, JF)

    # ------------------------------------------------------------- services
    @property
    def family(self) -> Family:
        return self.spec.family

    @property
    def d_lattice(self) -> float:
        return self.spec.d_lattice

    def face_circumradius(self) -> float:
        h = self.spec.side
        return {"hexagonal": h, "square": h / np.sqrt(2.0), "triangular": h / SQRT3}[self.family]

    def dual(self) -> "Lattice":
        """Dual lattice: vertices at the primal face centres (lazy)."""
        if self._dual is not None:
            return self._dual
        h = self.spec.side
        ox, oy = self.spec.origin
        if self.family == "hexagonal":
            dual_spec = LatticeSpec("triangular", mesh=SQRT3 * h, origin=(ox, oy))
        elif self.family == "square":
            dual_spec = LatticeSpec("square", mesh=h, origin=(ox + 0.5 * h, oy + 0.5 * h))
        else:
            # triangle centroids form a honeycomb of side h/sqrt3; its face
            # centres sit on the primal vertices
            dual_spec = LatticeSpec("hexagonal", mesh=h / SQRT3, origin=(ox, oy))
        self._dual = Lattice(dual_spec, self.bbox)
        return self._dual

    def edge_midpoints(self, edge_ids=None) -> np.ndarray:
        e = self.edges if edge_ids is None else self.edges[edge_ids]
        return 0.5 * (self.vertices[e[:, 0]] + self.vertices[e[:, 1]])

    def edge_points(self, edge_ids, t) -> np.ndarray:
        """Points start + t*(end-start) for each edge and each t, shape (nE, nT, 2)."""
        e = self.edges[edge_ids]
        a = self.vertices[e[:, 0]][:, None, :]
        b = self.vertices[e[:, 1]][:, None, :]
        t = np.asarray(t)[None, :, None]
        return a + t * (b - a)

    def face_adjacency_pairs(self) -> np.ndarray:
        """(n,2) pairs of face ids sharing an interior edge."""
        ef = self.edge_faces
        ok = (ef[:, 0] >= 0) & (ef[:, 1] >= 0)
        return ef[ok]


def build_lattice(spec: LatticeSpec, bbox) -> Lattice:
    """Materialise all cells of the periodic lattice intersecting bbox."""
    return Lattice(spec, bbox)


# ---------------------------------------------------------------- domains

@dataclass(frozen=True)
class Disc:
    center: tuple
    radius: float

    def contains(self, pts, strict=True) -> np.ndarray:
        d2 = ((np.atleast_2d(pts) - np.array(self.center)) ** 2).sum(axis=1)
        return d2 < self.radius**2 if strict else d2 <= self.radius**2

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    def area(self) -> float:
        return np.pi * self.radius**2


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, pts, strict=True) -> np.ndarray:
        p = np.atleast_2d(pts)
        if strict:
            return (p[:, 0] > self.x0) & (p[:, 0] < self.x1) & \
                   (p[:, 1] > self.y0) & (p[:, 1] < self.y1)
        return (p[:, 0] >= self.x0) & (p[:, 0] <= self.x1) & \
               (p[:, 1] >= self.y0) & (p[:, 1] <= self.y1)

    def bbox(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass
class CompatibleSubdomain:
    """Union of whole lattice faces: P^eps(D) or its containing counterpart."""

    lattice: Lattice
    face_mask: np.ndarray          # bool over lattice faces
    mode: str

    def __post_init__(self):
        self.face_ids = np.flatnonzero(self.face_mask)
        self.area = len(self.face_ids) * self.lattice.face_area
        fe = self.lattice.face_edges[self.face_ids]
        counts = np.bincount(fe.ravel()[fe.ravel() >= 0], minlength=self.lattice.n_edges)
        self.boundary_edges = np.flatnonzero(counts == 1)
        self.interior_edges = np.flatnonzero(counts == 2)
        vs = self.lattice.faces[self.face_ids]
        self.vertex_mask = np.zeros(self.lattice.n_vertices, dtype=bool)
        self.vertex_mask[vs.ravel()[vs.ravel() >= 0]] = True
        self.vertex_ids = np.flatnonzero(self.vertex_mask)

    @property
    def n_faces(self) -> int:
        return len(self.face_ids)

    def boundary_cycles(self):
        """Boundary as directed vertex cycles with the interior on the left.

        Returns a list of (edge_id array, orientation array); orientation +1
        means the edge's canonical direction agrees with the walk.
        """
        cached = getattr(self, "_boundary_cycles_cache", None)
        if cached is not None:
            return cached
        lat = self.lattice
        inside = self.face_mask
        starts, ends, eids = [], [], []
        for eid in self.boundary_edges:
            f0, f1 = lat.edge_faces[eid]
            fin = f0 if (f0 >= 0 and inside[f0]) else f1
            cyc = lat.face_edges[fin]
            pos = int(np.where(cyc == eid)[0][0])
            a = lat.faces[fin][pos]
            b = lat.faces[fin][(pos + 1) % lat.faces.shape[1]]
            starts.append(a)
            ends.append(b)
            eids.append(eid)
        starts = np.array(starts, dtype=int)
        ends = np.array(ends, dtype=int)
        eids = np.array(eids, dtype=int)
        order = {}
        for idx, a in enumerate(starts):
            order.setdefault(int(a), []).append(idx)
        used = np.zeros(len(eids), dtype=bool)
        cycles = []
        for seed in range(len(eids)):
            if used[seed]:
                continue
            walk = []
            cur = seed
            while not used[cur]:
                used[cur] = True
                walk.append(cur)
                nxts = [t for t in order.get(int(ends[cur]), []) if not used[t]]
                if not nxts:
                    break
                if len(nxts) == 1:
                    cur = nxts[0]
                else:
                    # pinch vertex: tightest left turn keeps the interior left
                    vin = self.lattice.vertices[ends[cur]] - self.lattice.vertices[starts[cur]]
                    best, besta = None, None
                    for t in nxts:
                        vout = self.lattice.vertices[ends[t]] - self.lattice.vertices[starts[t]]
                        ang = np.arctan2(vin[0] * vout[1] - vin[1] * vout[0], np.dot(vin, vout))
                        if best is None or ang > besta:
                            best, besta = t, ang
                    cur = best
            ori = np.where(lat.edges[eids[walk], 0] == starts[walk], 1, -1)
            cycles.append((eids[walk], ori))
        self._boundary_cycles_cache = cycles
        return cycles


def compatible_subdomain(lattice: Lattice, domain, mode: str = "largest-inside") -> CompatibleSubdomain:
    """Largest compatible P^eps(D) inside D, or smallest containing D.

    Vertices exactly on the boundary resolve toward exclusion for
    largest-inside (half-open convention).  Supported domains are convex
    (Disc, Rect); faces are convex, so all-vertices-inside iff face inside.
    """
    if mode not in ("largest-inside", "smallest-containing"):
        raise ValueError("mode must be largest-inside or smallest-containing")
    vs = lattice.faces
    if np.any(vs < 0):
        raise ValueError("lattice window too small: faces reference padded vertices")
    pts = lattice.vertices[vs.ravel()].reshape(vs.shape[0], vs.shape[1], 2)
    if mode == "largest-inside":
        ok = domain.contains(pts.reshape(-1, 2), strict=True).reshape(vs.shape[0], vs.shape[1])
        mask = ok.all(axis=1)
    else:
        if isinstance(domain, Disc):
            mask = _polygon_disc_intersects(pts, np.array(domain.center), domain.radius)
        elif isinstance(domain, Rect):
            mins = pts.min(axis=1)
            maxs = pts.max(axis=1)
            mask = (mins[:, 0] <= domain.x1) & (maxs[:, 0] >= domain.x0) & \
                   (mins[:, 1] <= domain.y1) & (maxs[:, 1] >= domain.y0)
        else:
            raise ValueError("unsupported domain type")
    return CompatibleSubdomain(lattice, mask, mode)


def _polygon_disc_intersects(pts, c, r) -> np.ndarray:
    """Convex polygon vs disc overlap, vectorised over polygons (nF,k,2)."""
    inside_any = (((pts - c) ** 2).sum(axis=2) <= r * r).any(axis=1)
    # distance from c to each polygon edge segment
    a = pts
    b = np.roll(pts, -1, axis=1)
    ab = b - a
    t = np.einsum("fka,fka->fk", c - a, ab) / np.maximum((ab ** 2).sum(axis=2), 1e-300)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, :, None] * ab
    edge_hit = (((proj - c) ** 2).sum(axis=2) <= r * r).any(axis=1)
    # disc centre inside polygon (CCW: all cross products >= 0)
    ca = c - a
    cross = ab[:, :, 0] * ca[:, :, 1] - ab[:, :, 1] * ca[:, :, 0]
    centre_in = (cross >= 0).all(axis=1)
    return inside_any | edge_hit | centre_in
