import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lab.lattice import (Disc, LatticeSpec, Rect, build_lattice,
                               compatible_subdomain)

from conftest import rng_for

FAMILIES = ["hexagonal", "square", "triangular"]


@pytest.mark.parametrize("family", FAMILIES)
def test_structure_consistency(family):
    lat = build_lattice(LatticeSpec(family, 0.8, origin=(0.11, -0.07)), (-5, 5, -5, 5))
    k = lat.faces.shape[1]
    assert (lat.faces >= 0).all()
    assert (lat.face_edges >= 0).all()
    # face-edge cycle alignment and edge-face backreferences
    for f in range(0, lat.n_faces, max(1, lat.n_faces // 60)):
        for i in range(k):
            e = lat.face_edges[f, i]
            assert {lat.faces[f, i], lat.faces[f, (i + 1) % k]} == set(lat.edges[e])
            assert f in set(lat.edge_faces[e])
    # uniform edge lengths
    assert np.allclose(lat.edge_lengths, lat.spec.side)
    # counter-clockwise faces with the right area
    pts = lat.vertices[lat.faces[0]]
    area2 = sum(pts[i, 0] * pts[(i + 1) % k, 1] - pts[(i + 1) % k, 0] * pts[i, 1]
                for i in range(k))
    assert abs(area2 / 2 - lat.face_area) < 1e-9


def test_hexagonal_face_shape():
    lat = build_lattice(LatticeSpec("hexagonal", 1.0), (-4, 4, -4, 4))
    assert lat.faces.shape[1] == 6
    assert lat.face_edges.shape[1] == 6


def test_dual_families():
    lat = build_lattice(LatticeSpec("hexagonal", 1.0), (-4, 4, -4, 4))
    assert lat.dual().family == "triangular"
    assert lat.dual().dual().family == "hexagonal"
    sq = build_lattice(LatticeSpec("square", 1.0), (-4, 4, -4, 4))
    assert sq.dual().family == "square"


def test_dual_vertices_at_face_centres():
    lat = build_lattice(LatticeSpec("hexagonal", 0.9, origin=(0.2, 0.1)), (-4, 4, -4, 4))
    dual = lat.dual()
    d2 = ((lat.face_centers[:, None, :] - dual.vertices[None, :, :]) ** 2).sum(axis=2)
    assert np.sqrt(d2.min(axis=1)).max() < 1e-9


def test_dual_edges_cross_primal_edges():
    # each interior dual edge crosses exactly one primal edge and vice versa
    lat = build_lattice(LatticeSpec("hexagonal", 1.0), (-4, 4, -4, 4))
    dual = lat.dual()

    def segs(l):
        return l.vertices[l.edges[:, 0]], l.vertices[l.edges[:, 1]]

    a1, b1 = segs(lat)
    a2, b2 = segs(dual)

    def crossings(a, b, c, d):
        # proper segment intersection counts, vectorised one-vs-many
        r = b - a
        s = d - c
        denom = r[0] * s[:, 1] - r[1] * s[:, 0]
        ok = np.abs(denom) > 1e-12
        t = ((c[:, 0] - a[0]) * s[:, 1] - (c[:, 1] - a[1]) * s[:, 0]) / np.where(ok, denom, 1.0)
        u = ((c[:, 0] - a[0]) * r[1] - (c[:, 1] - a[1]) * r[0]) / np.where(ok, denom, 1.0)
        return ok & (t > 1e-9) & (t < 1 - 1e-9) & (u > 1e-9) & (u < 1 - 1e-9)

    interior = np.flatnonzero((lat.edge_faces >= 0).all(axis=1))
    rng = rng_for("dual-cross")
    for e in rng.choice(interior, size=40, replace=False):
        hits = crossings(a1[e], b1[e], a2, b2)
        assert hits.sum() == 1


def test_compatible_subdomain_exact_union():
    lat = build_lattice(LatticeSpec("hexagonal", 1.0), (-6, 6, -6, 6))
    base = compatible_subdomain(lat, Disc((0.0, 0.0), 3.0))
    # D equal to the union of P's faces is already compatible: P^eps(D) = D
    verts = lat.vertices[np.unique(lat.faces[base.face_ids])]
    hull_r = np.linalg.norm(verts, axis=1).max()
    again = compatible_subdomain(lat, Disc((0.0, 0.0), hull_r + 1e-6))
    assert set(base.face_ids) <= set(again.face_ids)


def test_compatible_subdomain_sandwich_and_monotone():
    lat = build_lattice(LatticeSpec("hexagonal", 0.7), (-8, 8, -8, 8))
    rng = rng_for("sandwich")
    for _ in range(10):
        c = rng.uniform(-1, 1, 2)
        r = rng.uniform(2.0, 5.0)
        D = Disc(tuple(c), r)
        p = compatible_subdomain(lat, D, "largest-inside")
        pbar = compatible_subdomain(lat, D, "smallest-containing")
        # P subset of D
        assert D.contains(lat.vertices[p.vertex_ids], strict=False).all()
        # P subset of P-bar
        assert not p.face_mask[~pbar.face_mask].any()
        # monotone in D
        p2 = compatible_subdomain(lat, Disc(tuple(c), r + 0.9))
        assert not p.face_mask[~p2.face_mask].any()


def test_boundary_fringe_area_bound():
    # area(D) - area(P) <= c eps s for discs of radius s (enumeration oracle)
    for eps in (0.5, 0.25):
        lat = build_lattice(LatticeSpec("hexagonal", eps), (-8, 8, -8, 8))
        s = 5.0
        D = Disc((0.0, 0.0), s)
        p = compatible_subdomain(lat, D)
        assert D.area() - p.area < 12.0 * eps * s


def test_empty_largest_inside():
    lat = build_lattice(LatticeSpec("hexagonal", 1.0), (-4, 4, -4, 4))
    p = compatible_subdomain(lat, Disc((0.3, 0.2), 0.4))
    assert p.n_faces == 0


def test_translation_periodicity():
    spec = LatticeSpec("hexagonal", 1.0)
    lat1 = build_lattice(spec, (-3, 3, -3, 3))
    period = np.array([np.sqrt(3.0), 0.0])
    lat2 = build_lattice(spec, (-3 + period[0], 3 + period[0], -3, 3))
    # shifted window contains vertices at exactly translated positions
    v1 = lat1.vertices + period
    d2 = ((v1[:, None, :] - lat2.vertices[None, :, :]) ** 2).sum(axis=2)
    assert np.sqrt(d2.min(axis=1)).max() < 1e-9


def test_face_count_matches_density():
    eps = 0.5
    lat = build_lattice(LatticeSpec("hexagonal", eps), (-6, 6, -6, 6))
    s = 4.0
    p = compatible_subdomain(lat, Rect(-s / 2, s / 2, -s / 2, s / 2))
    expect = s * s / lat.face_area
    boundary_layer = 4 * s / (np.sqrt(3) * eps)
    assert abs(p.n_faces - expect) < boundary_layer + 4


def test_hex_pair_rescale_geometry():
    spec = LatticeSpec("hexagonal", 1.0, rescale_hex_pair=True)
    lat = build_lattice(spec, (-4, 4, -4, 4))
    interior = np.flatnonzero((lat.edge_faces >= 0).all(axis=1))
    e = int(interior[len(interior) // 2])
    m = lat.edge_midpoints([e])[0]
    f0, f1 = lat.edge_faces[e]
    pair = np.unique(np.concatenate([lat.faces[f0], lat.faces[f1]]))
    # unit circle about the shared-edge midpoint circumscribes the pair
    assert abs(np.linalg.norm(lat.vertices[pair] - m, axis=1).max() - 1.0) < 1e-9
    others = np.setdiff1d(np.arange(lat.n_vertices), pair)
    nearest_out = np.linalg.norm(lat.vertices[others] - m, axis=1).min()
    assert nearest_out > 1.0   # an admissible ball ratio a > 1 exists
    with pytest.raises(ValueError):
        LatticeSpec("square", 1.0, rescale_hex_pair=True)


def test_strict_convexity_flag():
    for family in FAMILIES:
        lat = build_lattice(LatticeSpec(family, 1.0), (-3, 3, -3, 3))
        assert lat.strictly_convex


@given(st.floats(0.3, 2.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
@settings(max_examples=20, deadline=None)
def test_subdomain_inside_property(mesh, cx, cy):
    lat = build_lattice(LatticeSpec("hexagonal", mesh), (-7, 7, -7, 7))
    D = Disc((cx, cy), 3.0)
    p = compatible_subdomain(lat, D)
    if p.n_faces:
        assert D.contains(lat.vertices[p.vertex_ids], strict=False).all()


def test_degenerate_bbox_rejected():
    with pytest.raises(ValueError):
        build_lattice(LatticeSpec("square", 1.0), (0, 0, 0, 1))
