import numpy as np
import pytest

from nodal_lab.events import (OracleScan, check_conic_conditions, cone_visibility,
                              detect_double_crossing, detect_four_crossing,
                              detect_invisible_error, detect_small_excursions,
                              detect_tubular_crossing, hex_pair_ball_ratio,
                              local_sup_norms, scan_edges, triple_witness)
from nodal_lab.field import DerivativeJet, sample_rpw
from nodal_lab.lattice import Disc, LatticeSpec, build_lattice, compatible_subdomain
from nodal_lab.scan import DirectField

from conftest import PolyField, rng_for


def hex_setup(mesh=0.4, radius=5.0, span=7.0):
    lat = build_lattice(LatticeSpec("hexagonal", mesh), (-span, span, -span, span))
    sub = compatible_subdomain(lat, Disc((0.0, 0.0), radius))
    return lat, sub


def test_edge_scan_linear_field():
    lat, sub = hex_setup()
    f = PolyField(lambda x, y: y - 0.17,
                  lambda x, y: np.stack([0 * x, 1 + 0 * x], -1), 1.0, 1e-9)
    scan = OracleScan(f, lat, 0.0, sub.face_ids)
    assert scan.dtilde().max() == 0
    assert scan.stilde() == 0
    assert len(scan.indeterminate_faces()) == 0


def test_edge_scan_quadratic_double_crossing():
    lat, sub = hex_setup()
    e = int(sub.interior_edges[3])
    a = lat.vertices[lat.edges[e, 0]]
    b = lat.vertices[lat.edges[e, 1]]
    L = np.linalg.norm(b - a)
    u = (b - a) / L

    def q(x, y):
        t = ((np.stack([x, y], -1) - a) @ u) / L
        return (t - 0.5) ** 2 - 0.01

    def gq(x, y):
        t = ((np.stack([x, y], -1) - a) @ u) / L
        return (2 * (t - 0.5) / L)[:, None] * u[None, :]

    fq = PolyField(q, gq, 2.0 / L, 2.0 / L**2)
    es = scan_edges(DirectField(fq, lat), np.array([e]), 0.0)
    assert es.counts[e] == 2
    assert np.allclose(sorted(es.crossings_of(e)), [0.4, 0.6], atol=5e-3)


def test_small_excursion_synthetic_bump():
    lat, sub = hex_setup(mesh=1.0, radius=4.0, span=6.0)
    fc = lat.face_centers[sub.face_ids[len(sub.face_ids) // 2]]

    def bump(x, y):
        r2 = (x - fc[0]) ** 2 + (y - fc[1]) ** 2
        return 1.0 - 2.0 * np.exp(-r2 / 0.08)

    def gbump(x, y):
        r2 = (x - fc[0]) ** 2 + (y - fc[1]) ** 2
        g = 2.0 * np.exp(-r2 / 0.08) * 2.0 / 0.08
        return np.stack([g * (x - fc[0]), g * (y - fc[1])], -1)

    fb = PolyField(bump, gbump, 25.0, 120.0)
    scan = OracleScan(fb, lat, 0.0, sub.face_ids)
    assert detect_small_excursions(scan) == 1


def test_detectors_on_rpw_trials():
    lat, sub = hex_setup(mesh=0.45, radius=5.0)
    t_implies_d = True
    any_double = 0
    for i in range(60):
        s = sample_rpw(1.0, 48, rng_for("det", i))
        scan = OracleScan(s, lat, 0.0, sub.face_ids)
        dt = scan.dtilde()
        for e in np.flatnonzero(dt > 0):
            if (lat.edge_faces[e] >= 0).all():
                any_double += 1
                t = detect_tubular_crossing(scan, int(e))
                t_implies_d &= (t == 0) or (dt[e] >= 1)
        # four-crossing definition agrees with the per-face helper
        ft = scan.ftilde()
        f = int(sub.face_ids[0])
        assert detect_four_crossing(scan, f) == ft[f]
    assert t_implies_d


def test_sign_flip_invariance_of_detectors():
    lat, sub = hex_setup(mesh=0.5, radius=4.0)
    for i in range(10):
        s = sample_rpw(1.0, 48, rng_for("flip-det", i))
        neg = PolyField(lambda x, y, s=s: -s.evaluate(np.stack([x, y], -1)),
                        lambda x, y, s=s: -s.gradient(np.stack([x, y], -1)),
                        s.grad_bound(), s.hess_bound())
        s1 = OracleScan(s, lat, 0.0, sub.face_ids)
        s2 = OracleScan(neg, lat, 0.0, sub.face_ids)
        assert np.array_equal(s1.edge_counts, s2.edge_counts)
        assert s1.stilde() == s2.stilde()


def test_oracle_stability_under_refinement():
    # doubling the starting resolution changes no reported multiplicity
    lat, sub = hex_setup(mesh=0.5, radius=4.0)
    unstable = 0
    cells = 0
    for i in range(20):
        s = sample_rpw(1.0, 48, rng_for("stab", i))
        a = OracleScan(s, lat, 0.0, sub.face_ids, r0=32)
        b = OracleScan(s, lat, 0.0, sub.face_ids, r0=64)
        cells += lat.n_edges
        unstable += int((a.edge_counts != b.edge_counts).sum())
        assert a.stilde() == b.stilde()
    assert unstable / cells < 1e-3


def test_conic_classifier_branches():
    saddle = DerivativeJet(0.0, np.zeros(2), np.array([[2.0, 0.0], [0.0, -2.0]]))
    v = check_conic_conditions(saddle, c2_norm=2.0, c3_norm=2.0, eps=0.1, c=1.0)
    assert v.branch == "hyperbolic-regular"
    linear = DerivativeJet(0.0, np.array([1.0, 0.0]), 1e-3 * np.eye(2))
    v = check_conic_conditions(linear, c2_norm=1.0, c3_norm=1.0, eps=0.05, c=1.0)
    assert v.branch == "gradient-dominant"
    flat = DerivativeJet(0.0, 1e-6 * np.ones(2), 1e-6 * np.array([[1.0, 0.0], [0.0, -1.0]]))
    v = check_conic_conditions(flat, c2_norm=1.0, c3_norm=1.0, eps=0.1, c=1.0)
    assert v.branch == "potentially-invisible"
    with pytest.raises(ValueError):
        check_conic_conditions(saddle, 0.0, 1.0, 0.1)


def test_conic_classifier_couples_with_rpw_jets():
    # on plane-wave samples the classifier runs off analytic jets and local
    # sup norms; near-zero saddle-free points are never potentially-invisible
    s = sample_rpw(1.0, 48, rng_for("conic"))
    rng = rng_for("conic-pts")
    for p in rng.uniform(-3, 3, size=(20, 2)):
        J = s.jet(p, order=2)
        c2, c3 = local_sup_norms(s, p, 0.2)
        v = check_conic_conditions(J, c2, c3, eps=0.1, c=1.0)
        assert v.branch in ("gradient-dominant", "hyperbolic-regular",
                            "potentially-invisible")
        if np.linalg.norm(J.grad) > 0.1 * c2:
            assert v.branch == "gradient-dominant"


def test_cone_visibility_hexagon():
    lat, sub = hex_setup(mesh=1.0, radius=4.0)
    e = int(sub.interior_edges[len(sub.interior_edges) // 2])
    m = lat.edge_midpoints([e])[0]
    a, b = lat.vertices[lat.edges[e]]
    axis = np.arctan2((b - a)[1], (b - a)[0]) + np.pi / 2.0
    delta = 0.05
    # exact right-angle cone at the midpoint, endpoints in opposite exteriors
    assert cone_visibility(m, axis, np.pi / 2, lat, e, delta)
    rng = rng_for("cone")
    hits = 0
    for _ in range(400):
        apex = m + 0.1 * rng.uniform(-1, 1, 2)
        opening = np.pi / 2 + delta * rng.uniform(-1, 1)
        ax = axis + 0.2 * rng.uniform(-1, 1)
        try:
            ok = cone_visibility(apex, ax, opening, lat, e, delta)
        except ValueError:
            continue
        hits += 1
        assert ok
    assert hits > 100


def test_cone_visibility_square_counterexample():
    # cone centred at the exact centre of a square face with a lattice-
    # aligned axis and slightly acute opening: the corners sit in the wide
    # exterior sectors, so neither adjacent face sees the cone
    sq = build_lattice(LatticeSpec("square", 1.0), (-5, 5, -5, 5))
    sub = compatible_subdomain(sq, Disc((0.0, 0.0), 3.5))
    found_false = False
    for e in sub.interior_edges:
        if sq.edge_dir[e] != 0:     # horizontal edges only
            continue
        f0, f1 = sq.edge_faces[e]
        for f in (f0, f1):
            c = sq.face_centers[f]
            try:
                ok = cone_visibility(c, np.pi / 2, np.pi / 2 - 0.04, sq, e, 0.05)
            except ValueError:
                continue
            if not ok:
                found_false = True
        if found_false:
            break
    assert found_false


def test_invisible_error_requires_rescaled_lattice():
    lat, sub = hex_setup(mesh=0.4, radius=4.0)
    s = sample_rpw(1.0, 48, rng_for("ie"))
    scan = OracleScan(s, lat, 0.0, sub.face_ids)
    with pytest.raises(ValueError):
        hex_pair_ball_ratio(lat)
    spec = LatticeSpec("hexagonal", 0.4, rescale_hex_pair=True)
    lat2 = build_lattice(spec, (-7, 7, -7, 7))
    sub2 = compatible_subdomain(lat2, Disc((0.0, 0.0), 4.0))
    a = hex_pair_ball_ratio(lat2)
    assert 1.0 < a < 1.21
    scan2 = OracleScan(s, lat2, 0.0, sub2.face_ids)
    # type 2 pattern displayed -> false regardless of geometry
    from nodal_lab.discretise import SignField, type2_edges, sign_process
    for i in range(40):
        smp = sample_rpw(1.0, 48, rng_for("ie2", i))
        sc = OracleScan(smp, lat2, 0.0, sub2.face_ids)
        signs = sign_process(sc.vertex_values, lat2, 0.0)
        t2 = type2_edges(signs)
        interior = (lat2.edge_faces >= 0).all(axis=1)
        cand = np.flatnonzero(t2 & interior)
        if len(cand):
            rep = detect_invisible_error(sc, int(cand[0]))
            assert rep.value is False and rep.type2
            break
    else:
        pytest.skip("no type-2 pattern drawn in 40 trials")


def test_triple_witness_on_four_crossings():
    # every observed four-/tubular-crossing admits a witness triple
    lat, sub = hex_setup(mesh=0.6, radius=5.0)
    found = 0
    for i in range(120):
        s = sample_rpw(1.0, 48, rng_for("wit", i))
        scan = OracleScan(s, lat, 0.0, sub.face_ids)
        ft = scan.ftilde()
        for f in np.flatnonzero(ft >= 1):
            delta = lat.spec.mesh ** 1.5
            w = triple_witness(scan, "face", int(f), delta)
            assert w is not None
            found += 1
        dt = scan.dtilde()
        for e in np.flatnonzero(dt > 0):
            if (lat.edge_faces[e] >= 0).all() and scan.ttilde(int(e)) >= 1:
                w = triple_witness(scan, "edge", int(e), lat.spec.mesh ** 1.5)
                assert w is not None
                found += 1
        if found >= 8:
            break
    assert found > 0
