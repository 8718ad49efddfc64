"""Percolation process, dual-edge discretised level set, error patterns.

The percolation process assigns +1/-1 to lattice vertices by the sign of
Psi - level; the discretised level set consists of the dual edges whose
primal edges have endpoints of opposite sign.  Type 1 / Type 2 vertex-sign
patterns flag faces where the discretisation may misrepresent the topology;
their connected unions are the visible ambiguities, and a resolution rewires
the level set inside one ambiguity as a non-crossing matching of its
boundary points plus optional closed loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple

import numpy as np

from .lattice import Lattice


class TieError(ValueError):
    """Psi hit the level exactly at a vertex (probability zero; resample)."""


@dataclass
class SignField:
    """Vertex signs of the percolation process at one level."""

    lattice: Lattice
    signs: np.ndarray          # int8 in {-1, +1} per lattice vertex
    level: float
    mesh: float

    def flipped(self) -> "SignField":
        return SignField(self.lattice, -self.signs, self.level, self.mesh)


def sign_process(values: np.ndarray, lattice: Lattice, level: float, mesh: float = None) -> SignField:
    """Signs of (values - level); exact ties raise TieError for a resample."""
    values = np.asarray(values, dtype=float)
    if values.shape != (lattice.n_vertices,):
        raise ValueError("values must cover every lattice vertex")
    diff = values - level
    if np.any(diff == 0.0):
        raise TieError("field value equals the level exactly at a vertex")
    signs = np.where(diff > 0, 1, -1).astype(np.int8)
    return SignField(lattice, signs, level, mesh if mesh is not None else lattice.spec.mesh)


@dataclass
class DiscreteLevelSet:
    """Dual edges of opposite-sign primal edges (stored by primal edge id)."""

    lattice: Lattice
    crossed: np.ndarray        # bool per primal edge

    @property
    def edge_ids(self) -> np.ndarray:
        return np.flatnonzero(self.crossed)

    def dual_edge_count(self) -> int:
        return int(self.crossed.sum())


def dual_level_set(signs: SignField, lattice: Lattice) -> DiscreteLevelSet:
    s = signs.signs
    crossed = s[lattice.edges[:, 0]] != s[lattice.edges[:, 1]]
    return DiscreteLevelSet(lattice, crossed)


def _cyclic_sign_changes(signs_cycle: np.ndarray) -> np.ndarray:
    """Count of sign changes around each cyclic row of signs (nF, k)."""
    return (signs_cycle != np.roll(signs_cycle, -1, axis=1)).sum(axis=1)


def detect_type1(face_id: int, signs: SignField) -> bool:
    """Face vertex signs change more than twice around the cycle."""
    cyc = signs.signs[signs.lattice.faces[face_id]]
    return int((cyc != np.roll(cyc, -1)).sum()) > 2


def type1_faces(signs: SignField) -> np.ndarray:
    """Vectorised Type-1 scan over all faces."""
    sc = _cyclic_sign_changes(signs.signs[signs.lattice.faces])
    return sc > 2


def detect_type2(edge_id: int, signs: SignField, lattice: Lattice,
                 variant: str = "hexagonal") -> bool:
    """Type-2 error pattern at an edge.

    hexagonal: the edge endpoints share a sign and both adjacent hexagons
    contain a vertex of the opposite sign.

    square-remark: four faces adjacent in the edge-normal row; the common
    f2/f3 edge endpoints share a sign and both f1+f2 and f3+f4 contain the
    opposite sign.
    """
    f0, f1 = lattice.edge_faces[edge_id]
    if f0 < 0 or f1 < 0:
        raise ValueError("type-2 pattern needs an interior edge")
    s = signs.signs
    a, b = lattice.edges[edge_id]
    if variant == "hexagonal":
        if lattice.family != "hexagonal":
            raise ValueError("variant 'hexagonal' requires a hexagonal lattice")
        if s[a] != s[b]:
            return False
        sgn = s[a]
        for f in (f0, f1):
            if not np.any(s[lattice.faces[f]] == -sgn):
                return False
        return True
    if variant == "square-remark":
        if lattice.family != "square":
            raise ValueError("variant 'square-remark' requires a square lattice")
        if s[a] != s[b]:
            return False
        sgn = s[a]
        # extend the face row away from the shared edge on both sides
        far0 = _next_face_across(lattice, f0, edge_id)
        far1 = _next_face_across(lattice, f1, edge_id)
        if far0 < 0 or far1 < 0:
            raise ValueError("square-remark pattern needs two faces on each side")
        wing0 = np.concatenate([lattice.faces[f0], lattice.faces[far0]])
        wing1 = np.concatenate([lattice.faces[f1], lattice.faces[far1]])
        return bool(np.any(s[wing0] == -sgn) and np.any(s[wing1] == -sgn))
    if variant == "triangular":
        raise NotImplementedError(
            "triangular Type-2 grouping is specified only loosely; not implemented")
    raise ValueError(f"unknown type-2 variant: {variant}")


def _next_face_across(lattice: Lattice, face: int, shared_edge: int) -> int:
    """Face adjacent to `face` through the edge opposite `shared_edge`."""
    fe = lattice.face_edges[face]
    pos = int(np.where(fe == shared_edge)[0][0])
    opp = fe[(pos + len(fe) // 2) % len(fe)]
    g0, g1 = lattice.edge_faces[opp]
    return g1 if g0 == face else g0


def type2_edges(signs: SignField) -> np.ndarray:
    """Vectorised hexagonal Type-2 scan; bool per edge (False on boundary)."""
    lat = signs.lattice
    s = signs.signs
    ef = lat.edge_faces
    interior = (ef >= 0).all(axis=1)
    a, b = lat.edges[:, 0], lat.edges[:, 1]
    same = s[a] == s[b]
    out = np.zeros(lat.n_edges, dtype=bool)
    cand = np.flatnonzero(interior & same)
    if len(cand) == 0:
        return out
    sgn = s[a[cand]]
    f0 = lat.faces[ef[cand, 0]]
    f1 = lat.faces[ef[cand, 1]]
    opp0 = (s[f0] == -sgn[:, None]).any(axis=1)
    opp1 = (s[f1] == -sgn[:, None]).any(axis=1)
    out[cand] = opp0 & opp1
    return out


@dataclass
class AmbiguityComponent:
    """Connected union of error-pattern faces with its rewiring interface."""

    face_ids: np.ndarray
    type1_faces: np.ndarray
    type2_pairs: List[Tuple[int, int]]
    boundary_edges: np.ndarray          # component-boundary edges, cyclic order
    boundary_crossed: np.ndarray        # bool: N^eps crosses that boundary edge

    @property
    def boundary_points(self) -> np.ndarray:
        """Crossed boundary edges in cyclic order (the matching endpoints)."""
        return self.boundary_edges[self.boundary_crossed]

    def __post_init__(self):
        if len(self.boundary_points) % 2 != 0:
            raise AssertionError("odd boundary crossing count on an ambiguity component")


def ambiguity_components(signs: SignField, lattice: Lattice) -> List[AmbiguityComponent]:
    """Visible ambiguities: components of Type-1 faces and Type-2 face pairs."""
    if lattice.family != "hexagonal":
        raise ValueError("visible ambiguities are defined on the hexagonal lattice")
    t1 = type1_faces(signs)
    t2e = type2_edges(signs)
    in_amb = t1.copy()
    pairs = []
    for e in np.flatnonzero(t2e):
        f0, f1 = lattice.edge_faces[e]
        in_amb[f0] = in_amb[f1] = True
        pairs.append((int(f0), int(f1)))
    amb_faces = np.flatnonzero(in_amb)
    if len(amb_faces) == 0:
        return []
    # face connectivity through shared edges, restricted to ambiguous faces
    import scipy.sparse as sp
    import scipy.sparse.csgraph as csgraph
    idx = -np.ones(lattice.n_faces, dtype=int)
    idx[amb_faces] = np.arange(len(amb_faces))
    fp = lattice.face_adjacency_pairs()
    keep = in_amb[fp[:, 0]] & in_amb[fp[:, 1]]
    fp = fp[keep]
    g = sp.coo_matrix((np.ones(len(fp)), (idx[fp[:, 0]], idx[fp[:, 1]])),
                      shape=(len(amb_faces), len(amb_faces)))
    ncomp, labels = csgraph.connected_components(g, directed=False)
    s = signs.signs
    crossed_all = s[lattice.edges[:, 0]] != s[lattice.edges[:, 1]]
    comps = []
    for c in range(ncomp):
        fids = amb_faces[labels == c]
        mask = np.zeros(lattice.n_faces, dtype=bool)
        mask[fids] = True
        from .lattice import CompatibleSubdomain
        sub = CompatibleSubdomain(lattice, mask, "component")
        cyc = sub.boundary_cycles()
        bedges = np.concatenate([c0 for c0, _ in cyc]) if cyc else np.array([], dtype=int)
        comps.append(AmbiguityComponent(
            face_ids=fids,
            type1_faces=fids[t1[fids]],
            type2_pairs=[p for p in pairs if mask[p[0]]],
            boundary_edges=bedges,
            boundary_crossed=crossed_all[bedges],
        ))
    return comps


@dataclass(frozen=True)
class Resolution:
    """Non-crossing matching of an ambiguity's boundary points + loops."""

    matching: Tuple[Tuple[int, int], ...]   # index pairs into boundary_points
    interior_loops: int = 0


def _noncrossing_matchings(n_points: int):
    """All non-crossing perfect matchings of points 0..n-1 in cyclic order."""
    if n_points % 2 != 0:
        raise ValueError("odd boundary point count (upstream bug)")

    def rec(points):
        if not points:
            return [()]
        out = []
        first = points[0]
        for t in range(1, len(points), 2):
            left = points[1:t]
            right = points[t + 1:]
            for ml in rec(left):
                for mr in rec(right):
                    out.append(((first, points[t]),) + ml + mr)
        return out

    return rec(list(range(n_points)))


def enumerate_resolutions(component: AmbiguityComponent,
                          max_interior_loops: int = 1) -> List[Resolution]:
    """All resolutions: Catalan(n) matchings times 0..max loops."""
    pts = component.boundary_points
    matchings = _noncrossing_matchings(len(pts))
    return [Resolution(m, loops)
            for m in matchings for loops in range(max_interior_loops + 1)]
