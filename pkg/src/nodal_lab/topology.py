"""Component counting, topology signatures, and homeomorphism verdicts.

A curve system restricted to the compatible subdomain P is summarised by a
combinatorial signature: per-face boundary-crossing counts with a
non-crossing pairing and interior loop count, and per-domain the cyclic
boundary-crossing sequence on dP, the partition of boundary points into
curve components, the closed-component count, and the partition of lattice
vertices by the regions of P minus the curves.  A self-homeomorphism of P
fixing all lattice vertices preserves each of these, and for generic
configurations signature equality is equivalent to the existence of such a
homeomorphism; comparisons run in three modes (local, global,
up-to-visible-ambiguities).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .discretise import AmbiguityComponent, SignField, dual_level_set
from .events import OracleScan
from .lattice import CompatibleSubdomain, Lattice

Point = Tuple[int, int]           # (edge id, crossing index)


@dataclass
class CurveTopology:
    """Signature-bearing summary of one curve system inside P."""

    subdomain: CompatibleSubdomain
    edge_counts: np.ndarray                  # crossings per lattice edge
    face_pairings: Dict[int, Optional[List[Tuple[Point, Point]]]]
    face_loops: Dict[int, int]
    boundary_sequence: List[Point]           # cyclic along the dP walk
    point_curve: Dict[Point, int]            # curve component of each point
    closed_count: int
    vertex_regions: np.ndarray               # region id per vertex, -1 outside
    x_faces: Set[int] = dc_field(default_factory=set)
    flagged_faces: Set[int] = dc_field(default_factory=set)

    def face_signature(self, face_id: int):
        lat = self.subdomain.lattice
        edges = lat.face_edges[face_id]
        counts = tuple(int(self.edge_counts[e]) for e in edges)
        pairing = self.face_pairings.get(face_id)
        pair_key = None if pairing is None else frozenset(
            frozenset(p) for p in pairing)
        return counts, pair_key, self.face_loops.get(face_id, 0)

    def domain_signature(self):
        counts = tuple(int(self.edge_counts[e]) for e, _ in self.boundary_sequence)
        canon: Dict[int, int] = {}
        seq = []
        for p in self.boundary_sequence:
            c = self.point_curve.get(p, -1)
            seq.append(canon.setdefault(c, len(canon)))
        return counts, tuple(seq), self.closed_count


@dataclass(frozen=True)
class TopologySignature:
    """Canonical combinatorial stand-in for the epsilon-homeomorphism class."""

    scope: str
    payload: tuple


def signature(topo: CurveTopology, scope: str = "domain", face_id: int = None) -> TopologySignature:
    if scope == "face":
        return TopologySignature("face", topo.face_signature(int(face_id)))
    if scope == "domain":
        return TopologySignature("domain", topo.domain_signature())
    raise ValueError("scope must be 'face' or 'domain'")


# ------------------------------------------------------------ construction

def _boundary_sequence(sub: CompatibleSubdomain, edge_counts, edge_orient_t):
    """Boundary points in cyclic walk order; orientation decides t-order."""
    seq: List[Point] = []
    for eids, ori in sub.boundary_cycles():
        for e, o in zip(eids, ori):
            m = int(edge_counts[e])
            ks = range(m) if o == 1 else range(m - 1, -1, -1)
            seq.extend((int(e), k) for k in ks)
    return seq


def discrete_topology(signs: SignField, sub: CompatibleSubdomain) -> CurveTopology:
    """Curve system of the dual-edge discretised level set inside P."""
    lat = signs.lattice
    lvl = dual_level_set(signs, lat)
    crossed = lvl.crossed.copy()
    in_face = sub.face_mask
    # count only edges of P faces
    edge_of_p = np.zeros(lat.n_edges, dtype=bool)
    fe = lat.face_edges[sub.face_ids]
    edge_of_p[fe.ravel()[fe.ravel() >= 0]] = True
    counts = np.where(edge_of_p & crossed, 1, 0)

    face_pairings: Dict[int, Optional[List[Tuple[Point, Point]]]] = {}
    face_loops: Dict[int, int] = {}
    x_faces: Set[int] = set()
    crossed_in_face = crossed[lat.face_edges[sub.face_ids]]
    n_crossed = crossed_in_face.sum(axis=1)
    two = np.flatnonzero(n_crossed == 2)
    pair_edges = lat.face_edges[sub.face_ids[two]][crossed_in_face[two]].reshape(-1, 2)
    arcs_a = list(pair_edges[:, 0])
    arcs_b = list(pair_edges[:, 1])
    for f, (e0, e1) in zip(sub.face_ids[two], pair_edges):
        face_pairings[int(f)] = [((int(e0), 0), (int(e1), 0))]
    for idx in np.flatnonzero(n_crossed > 2):
        f = int(sub.face_ids[idx])
        es = [int(e) for e in lat.face_edges[f] if crossed[e]]
        face_pairings[f] = None
        x_faces.add(f)
        for e in es[1:]:
            arcs_a.append(es[0])
            arcs_b.append(e)
    g = sp.coo_matrix((np.ones(len(arcs_a)), (arcs_a, arcs_b)),
                      shape=(lat.n_edges, lat.n_edges))
    _, edge_comp = csgraph.connected_components(g, directed=False)
    point_curve = {}
    boundary_seq = _boundary_sequence(sub, counts, None)
    for e, kx in boundary_seq:
        point_curve[(e, kx)] = int(edge_comp[e])
    # closed components: crossed-edge components of P with no boundary point
    crossed_ids = np.flatnonzero(counts > 0)
    comp_ids = np.unique(edge_comp[crossed_ids])
    bnd_comps = np.unique([edge_comp[e] for e, _ in boundary_seq]) if boundary_seq else []
    closed = len(np.setdiff1d(comp_ids, bnd_comps))

    # vertex partition: same-sign adjacency within P
    vr = _discrete_vertex_regions(signs, sub)
    return CurveTopology(sub, counts, face_pairings, face_loops, boundary_seq,
                         point_curve, closed, vr, x_faces, set())


def _discrete_vertex_regions(signs: SignField, sub: CompatibleSubdomain) -> np.ndarray:
    lat = signs.lattice
    s = signs.signs
    fe = lat.face_edges[sub.face_ids]
    eids = np.unique(fe.ravel()[fe.ravel() >= 0])
    e = lat.edges[eids]
    same = s[e[:, 0]] == s[e[:, 1]]
    a, b = e[same, 0], e[same, 1]
    g = sp.coo_matrix((np.ones(len(a)), (a, b)),
                      shape=(lat.n_vertices, lat.n_vertices))
    _, comp = csgraph.connected_components(g, directed=False)
    out = np.where(sub.vertex_mask, comp, -1)
    return out


def count_discrete_domains(signs: SignField, sub: CompatibleSubdomain) -> int:
    """Components of P \\ N^eps: classes of same-sign vertex adjacency."""
    vr = _discrete_vertex_regions(signs, sub)
    return len(np.unique(vr[vr >= 0]))


def oracle_topology(scan: OracleScan, sub: CompatibleSubdomain) -> CurveTopology:
    """Curve system of the continuum level set inside P, at oracle resolution."""
    lat = scan.lattice
    counts = np.where(_edges_of(sub, lat), scan.edge_counts, 0)
    face_pairings: Dict[int, Optional[List[Tuple[Point, Point]]]] = {}
    face_loops: Dict[int, int] = {}
    flagged: Set[int] = set()
    arcs: List[Tuple[Point, Point]] = []
    for f, st in scan.faces.items():
        if not sub.face_mask[f]:
            continue
        if st.flag:
            flagged.add(f)
        if st.loops:
            face_loops[f] = st.loops
        if st.crossings:
            pair_pts = [(st.crossings[i], st.crossings[j]) for i, j in st.pairing]
            face_pairings[f] = pair_pts
            arcs.extend(pair_pts)

    # glue arcs at shared crossing points
    idx: Dict[Point, int] = {}

    def pid(p: Point) -> int:
        return idx.setdefault(p, len(idx))

    ga, gb = [], []
    for p, q in arcs:
        ga.append(pid(p))
        gb.append(pid(q))
    n = max(len(idx), 1)
    g = sp.coo_matrix((np.ones(len(ga)), (ga, gb)), shape=(n, n))
    _, comp = csgraph.connected_components(g, directed=False)
    point_curve = {p: int(comp[i]) for p, i in idx.items()}
    boundary_seq = _boundary_sequence(sub, counts, None)
    bnd_comps = set(point_curve.get(p, -1) for p in boundary_seq)
    all_comps = set(point_curve.values())
    closed = len(all_comps - bnd_comps)
    closed += sum(face_loops.values())

    _, roots = scan.domain_region_count(sub.face_mask)
    vr = scan.vertex_regions(sub.face_mask, roots)
    return CurveTopology(sub, counts, face_pairings, face_loops, boundary_seq,
                         point_curve, closed, vr, set(), flagged)


def _edges_of(sub: CompatibleSubdomain, lat: Lattice) -> np.ndarray:
    cached = getattr(sub, "_edges_mask_cache", None)
    if cached is not None:
        return cached
    out = np.zeros(lat.n_edges, dtype=bool)
    fe = lat.face_edges[sub.face_ids]
    out[fe.ravel()[fe.ravel() >= 0]] = True
    sub._edges_mask_cache = out
    return out


# ------------------------------------------------------------- comparisons

def _partitions_equal(a: np.ndarray, b: np.ndarray, ids: np.ndarray) -> bool:
    """Equality of two partitions restricted to the given element ids.

    Equal iff the map between class labels is a bijection: the number of
    distinct (a, b) pairs must match the class counts on both sides.
    """
    xa, xb = a[ids], b[ids]
    if np.any(xa < 0) or np.any(xb < 0):
        return False
    na = len(np.unique(xa))
    nb = len(np.unique(xb))
    if na != nb:
        return False
    key = xa.astype(np.int64) * (xb.max() + 1) + xb
    return len(np.unique(key)) == na


@dataclass(frozen=True)
class HomeoVerdict:
    value: Optional[bool]            # None = indeterminate
    reason: str = ""


def local_verdict(oracle: CurveTopology, discrete: CurveTopology) -> HomeoVerdict:
    """Face-wise signature equality across P."""
    sub = oracle.subdomain
    if oracle.flagged_faces:
        return HomeoVerdict(None, "indeterminate oracle cells")
    lat = sub.lattice
    oc, dc = oracle.edge_counts, discrete.edge_counts
    fe = lat.face_edges[sub.face_ids]
    if np.any(oc[fe] != dc[fe]):
        return HomeoVerdict(False, "edge crossing counts differ")
    for f in set(list(oracle.face_pairings) + list(discrete.face_pairings)):
        if not sub.face_mask[f]:
            continue
        if oracle.face_signature(f) != discrete.face_signature(f):
            return HomeoVerdict(False, f"face {f} signature differs")
    loops_o = {f: n for f, n in oracle.face_loops.items() if sub.face_mask[f] and n}
    loops_d = {f: n for f, n in discrete.face_loops.items() if sub.face_mask[f] and n}
    if loops_o != loops_d:
        return HomeoVerdict(False, "interior loop counts differ")
    return HomeoVerdict(True)


def global_verdict(oracle: CurveTopology, discrete: CurveTopology) -> HomeoVerdict:
    """Domain signature equality: boundary counts, matching, loops, regions."""
    if oracle.flagged_faces:
        return HomeoVerdict(None, "indeterminate oracle cells")
    if discrete.x_faces:
        return HomeoVerdict(False, "discrete level set self-intersects")
    if oracle.domain_signature()[0] != discrete.domain_signature()[0]:
        return HomeoVerdict(False, "boundary crossing counts differ")
    if oracle.domain_signature()[1] != discrete.domain_signature()[1]:
        return HomeoVerdict(False, "boundary matchings differ")
    if oracle.closed_count != discrete.closed_count:
        return HomeoVerdict(False, "closed component counts differ")
    sub = oracle.subdomain
    if not _partitions_equal(oracle.vertex_regions, discrete.vertex_regions,
                             sub.vertex_ids):
        return HomeoVerdict(False, "vertex partitions differ")
    return HomeoVerdict(True)


def uta_verdict(oracle: CurveTopology, discrete: CurveTopology,
                scan: OracleScan, signs: SignField,
                components: List[AmbiguityComponent],
                max_interior_loops: int = 1) -> HomeoVerdict:
    """Global verdict after resolving visible ambiguities.

    The candidate resolution inside each ambiguity component is the
    oracle's own restriction; the hybrid (discrete outside, oracle inside)
    is compared against the full oracle signature.
    """
    if oracle.flagged_faces:
        return HomeoVerdict(None, "indeterminate oracle cells")
    # the identity rewiring is itself a resolution: a clean global match wins
    base = global_verdict(oracle, discrete)
    if base.value:
        return base
    sub = oracle.subdomain
    lat = sub.lattice
    # only components fully inside P and clear of dP can be rewired
    on_boundary = np.zeros(lat.n_edges, dtype=bool)
    on_boundary[sub.boundary_edges] = True

    def rewirable(c):
        if not sub.face_mask[c.face_ids].all():
            return False
        fe = lat.face_edges[c.face_ids]
        return not on_boundary[fe.ravel()[fe.ravel() >= 0]].any()

    components = [c for c in components if rewirable(c)]
    in_comp_face = np.zeros(lat.n_faces, dtype=bool)
    for comp in components:
        in_comp_face[comp.face_ids] = True
    if any(not in_comp_face[f] for f in discrete.x_faces):
        return HomeoVerdict(False, "self-intersection outside ambiguities")

    # per-component loop budget: the oracle's closed content must be a
    # legal resolution decoration
    for comp in components:
        loops_in = sum(oracle.face_loops.get(int(f), 0) for f in comp.face_ids)
        loops_in += _closed_curves_inside(oracle, comp)
        if loops_in > max_interior_loops:
            return HomeoVerdict(False, "resolution loop cap exceeded")

    if oracle.domain_signature()[0] != discrete.domain_signature()[0]:
        return HomeoVerdict(False, "boundary crossing counts differ")

    hybrid = _hybrid_topology(oracle, discrete, scan, signs, components, in_comp_face)
    if hybrid is None:
        return HomeoVerdict(False, "component interface mismatch")
    if oracle.domain_signature() != hybrid.domain_signature():
        return HomeoVerdict(False, "hybrid domain signature differs")
    if oracle.closed_count != hybrid.closed_count:
        return HomeoVerdict(False, "closed component counts differ")
    if not _partitions_equal(oracle.vertex_regions, hybrid.vertex_regions,
                             sub.vertex_ids):
        return HomeoVerdict(False, "vertex partitions differ")
    return HomeoVerdict(True)


def _closed_curves_inside(oracle: CurveTopology, comp: AmbiguityComponent) -> int:
    faces = set(int(f) for f in comp.face_ids)
    arc_pts: Dict[int, Set[Point]] = {}
    # curves whose every point lies on edges of the component's faces
    lat = oracle.subdomain.lattice
    comp_edges = set(int(e) for f in faces for e in lat.face_edges[f])
    for p, cid in oracle.point_curve.items():
        arc_pts.setdefault(cid, set()).add(p)
    closed = 0
    bset = set(oracle.boundary_sequence)
    for cid, pts in arc_pts.items():
        if all(e in comp_edges for e, _ in pts):
            boundary = any(p in bset for p in pts)
            interface = any(not _edge_interior_to(lat, e, faces) for e, _ in pts)
            if not boundary and not interface:
                closed += 1
    return closed


def _edge_interior_to(lat: Lattice, e: int, faces: Set[int]) -> bool:
    f0, f1 = lat.edge_faces[e]
    return f0 in faces and f1 in faces


def _hybrid_topology(oracle: CurveTopology, discrete: CurveTopology,
                     scan: OracleScan, signs: SignField,
                     components: List[AmbiguityComponent],
                     in_comp_face: np.ndarray) -> Optional[CurveTopology]:
    sub = oracle.subdomain
    lat = sub.lattice

    # edges strictly interior to some component
    comp_interior_edge = np.zeros(lat.n_edges, dtype=bool)
    for comp in components:
        faces = set(int(f) for f in comp.face_ids)
        for f in faces:
            for e in lat.face_edges[f]:
                comp_interior_edge[e] = _edge_interior_to(lat, int(e), faces)

    # --- vertex partition: discrete adjacency outside, oracle inside
    s = signs.signs
    fe = lat.face_edges[sub.face_ids]
    eids = np.unique(fe.ravel()[fe.ravel() >= 0])
    e = lat.edges[eids]
    same = (s[e[:, 0]] == s[e[:, 1]]) & ~comp_interior_edge[eids]
    a = list(e[same, 0])
    b = list(e[same, 1])
    # oracle in-component relations
    comp_mask = in_comp_face & sub.face_mask
    if comp_mask.any():
        _, roots_local = scan.domain_region_count(comp_mask)
        vr_local = scan.vertex_regions(comp_mask, roots_local)
        for comp in components:
            vs = np.unique(lat.faces[comp.face_ids].ravel())
            vs = vs[vr_local[vs] >= 0]
            byroot: Dict[int, int] = {}
            for v in vs:
                r = int(vr_local[v])
                if r in byroot:
                    a.append(byroot[r])
                    b.append(int(v))
                else:
                    byroot[r] = int(v)
    g = sp.coo_matrix((np.ones(len(a)), (a, b)), shape=(lat.n_vertices, lat.n_vertices))
    _, comp_v = csgraph.connected_components(g, directed=False)
    vr = np.where(sub.vertex_mask, comp_v, -1)

    # --- curve matching: discrete arcs outside + oracle connectivity inside
    arcs_a: List[int] = []
    arcs_b: List[int] = []
    crossed = discrete.edge_counts > 0
    for f in sub.face_ids:
        f = int(f)
        if in_comp_face[f]:
            continue
        es = [int(eid) for eid in lat.face_edges[f] if crossed[eid]]
        if len(es) == 2:
            arcs_a.append(es[0])
            arcs_b.append(es[1])
        elif len(es) > 2:
            return None
    # inside: connect discrete boundary points of each component per oracle
    for comp in components:
        pts = [int(eid) for eid in comp.boundary_points]
        # oracle counts on interface edges must match the discrete points
        o_ok = all(scan.edge_counts[eid] == 1 for eid in pts)
        others = [int(eid) for eid in comp.boundary_edges
                  if not discrete.edge_counts[eid] and scan.edge_counts[eid] % 2]
        if not o_ok or others:
            return None
        # oracle in-component connectivity between the interface points
        faces = set(int(f) for f in comp.face_ids)
        parent: Dict[Point, Point] = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for f in faces:
            st = scan.faces.get(f)
            if st is None:
                continue
            for i, j in st.pairing:
                pi, pj = st.crossings[i], st.crossings[j]
                parent[find(pi)] = find(pj)
        rep: Dict[Point, int] = {}
        for eid in pts:
            r = find((eid, 0))
            if r in rep:
                arcs_a.append(rep[r])
                arcs_b.append(eid)
            else:
                rep[r] = eid
    g = sp.coo_matrix((np.ones(len(arcs_a)), (arcs_a, arcs_b)),
                      shape=(lat.n_edges, lat.n_edges))
    _, edge_comp = csgraph.connected_components(g, directed=False)

    counts = discrete.edge_counts.copy()
    boundary_seq = _boundary_sequence(sub, counts, None)
    point_curve = {(e_, k_): int(edge_comp[e_]) for e_, k_ in boundary_seq}
    # discrete crossings strictly inside components are replaced by the
    # oracle content; drop them from the curve universe
    crossed_ids = np.flatnonzero((counts > 0) & ~comp_interior_edge)
    comp_ids = np.unique(edge_comp[crossed_ids]) if len(crossed_ids) else []
    bnd = np.unique([edge_comp[e_] for e_, _ in boundary_seq]) if boundary_seq else []
    closed = len(np.setdiff1d(comp_ids, bnd))
    closed += sum(n for f, n in oracle.face_loops.items() if in_comp_face[f])
    for comp in components:
        closed += _closed_curves_inside(oracle, comp)

    return CurveTopology(sub, counts, {}, {}, boundary_seq, point_curve,
                         closed, vr, set(), set())


def homeomorphic_check(oracle: CurveTopology, discrete: CurveTopology,
                       mode: str, scan: OracleScan = None,
                       signs: SignField = None,
                       ambiguities: List[AmbiguityComponent] = None,
                       max_interior_loops: int = 1) -> HomeoVerdict:
    """Signature comparison in one of the three modes."""
    if mode == "local":
        return local_verdict(oracle, discrete)
    if mode == "global":
        return global_verdict(oracle, discrete)
    if mode == "up-to-ambiguities":
        return uta_verdict(oracle, discrete, scan, signs, ambiguities or [],
                           max_interior_loops)
    raise ValueError("mode must be local, global or up-to-ambiguities")


# --------------------------------------------------------- domain counting

@dataclass
class DomainCount:
    """Discrete and oracle excursion-domain counts with the error budget."""

    n_discrete: int
    n_oracle: Optional[int]
    area: float
    a_term: float        # boundary double-crossing multiplicity
    b_term: float        # four-crossing multiplicity
    c_term: float        # tubular-crossing multiplicity
    d_term: float        # small excursions
    determinate: bool

    @property
    def budget(self) -> float:
        return self.a_term + self.b_term + 2.0 * self.c_term + self.d_term

    def within_budget(self) -> Optional[bool]:
        if not self.determinate or self.n_oracle is None:
            return None
        return abs(self.n_oracle - self.n_discrete) <= self.budget + 1e-9


def domain_count(scan: OracleScan, signs: SignField, sub: CompatibleSubdomain,
                 sub_bar: CompatibleSubdomain) -> DomainCount:
    """Count N and N^eps over P with the A/B/C/D decomposition over P-bar."""
    lat = scan.lattice
    n_disc = count_discrete_domains(signs, sub)
    n_orac, _ = scan.domain_region_count(sub.face_mask)
    dtil = scan.dtilde()
    a_term = float(dtil[sub.boundary_edges].sum())
    ftil = scan.ftilde()
    b_term = float(ftil[sub_bar.face_ids].sum())
    c_term = 0.0
    ef = lat.edge_faces
    for e in np.flatnonzero(dtil > 0):
        if ef[e, 0] >= 0 and ef[e, 1] >= 0 and \
                sub_bar.face_mask[ef[e, 0]] and sub_bar.face_mask[ef[e, 1]]:
            c_term += scan.ttilde(int(e))
    d_term = float(scan.stilde())
    determinate = len(scan.indeterminate_faces()) == 0 and \
        not scan.edge_flags[_edges_of(sub_bar, lat)].any()
    return DomainCount(n_disc, n_orac, sub.area, a_term, b_term, c_term,
                       d_term, determinate)


# --------------------------------------------------------- crossing events

def crossing_event(signs: SignField, sub: CompatibleSubdomain,
                   arc_a: str, arc_b: str, sign: int) -> bool:
    """Is there a sign-component of P joining the two boundary arcs?

    Arcs name sides of the bounding box of P ('left', 'right', 'top',
    'bottom'); a boundary vertex belongs to an arc when it lies within half
    a mesh of that side.
    """
    if arc_a == arc_b:
        raise ValueError("arcs must be disjoint")
    lat = signs.lattice
    vr = _discrete_vertex_regions(signs, sub)
    vs = sub.vertex_ids
    pos = lat.vertices[vs]
    x0, x1 = pos[:, 0].min(), pos[:, 0].max()
    y0, y1 = pos[:, 1].min(), pos[:, 1].max()
    tol = 0.51 * lat.spec.side

    def arc_vertices(name):
        if name == "left":
            m = pos[:, 0] < x0 + tol
        elif name == "right":
            m = pos[:, 0] > x1 - tol
        elif name == "bottom":
            m = pos[:, 1] < y0 + tol
        elif name == "top":
            m = pos[:, 1] > y1 - tol
        else:
            raise ValueError(f"unknown arc {name}")
        return vs[m]

    va = arc_vertices(arc_a)
    vb = arc_vertices(arc_b)
    sgn = signs.signs
    ra = set(vr[v] for v in va if sgn[v] == sign and vr[v] >= 0)
    rb = set(vr[v] for v in vb if sgn[v] == sign and vr[v] >= 0)
    return len(ra & rb) > 0
