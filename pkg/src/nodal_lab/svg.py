"""Standalone SVG snapshots: percolation signs, discretised level set,
ambiguity overlays, and flagged-event overlays.

Dual edges are drawn as straight segments between face centroids and
continuum arcs as quadratic curves through the face centre; the geometry
is cosmetic, the topology canonical.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np


class SvgCanvas:
    def __init__(self, bbox, width: int = 900):
        x0, x1, y0, y1 = bbox
        self.bbox = bbox
        self.scale = width / (x1 - x0)
        self.width = width
        self.height = int((y1 - y0) * self.scale)
        self.parts: List[str] = []

    def _pt(self, p):
        x0, _, y0, y1 = self.bbox
        return ((p[0] - x0) * self.scale, (y1 - p[1]) * self.scale)

    def line(self, a, b, stroke="#888", width=1.0, opacity=1.0):
        (xa, ya), (xb, yb) = self._pt(a), self._pt(b)
        self.parts.append(
            f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{xb:.2f}" y2="{yb:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}" stroke-opacity="{opacity}"/>')

    def circle(self, c, r, fill="#000", stroke="none"):
        (x, y) = self._pt(c)
        self.parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{fill}" stroke="{stroke}"/>')

    def polygon(self, pts, fill, opacity=0.5):
        s = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(self._pt, pts))
        self.parts.append(f'<polygon points="{s}" fill="{fill}" fill-opacity="{opacity}"/>')

    def quad(self, a, ctrl, b, stroke="#c22", width=2.0):
        (xa, ya), (xc, yc), (xb, yb) = self._pt(a), self._pt(ctrl), self._pt(b)
        self.parts.append(
            f'<path d="M {xa:.2f} {ya:.2f} Q {xc:.2f} {yc:.2f} {xb:.2f} {yb:.2f}" '
            f'fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def write(self, path):
        body = "\n".join(self.parts)
        doc = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
               f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
               f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')
        with open(path, "w") as fh:
            fh.write(doc)


def lattice_patch_svg(lattice, bbox, path):
    """Debug dump of the lattice edges over a bounding box."""
    cv = SvgCanvas(bbox)
    for e in range(lattice.n_edges):
        a, b = lattice.vertices[lattice.edges[e]]
        if min(a[0], b[0]) > bbox[1] or max(a[0], b[0]) < bbox[0]:
            continue
        if min(a[1], b[1]) > bbox[3] or max(a[1], b[1]) < bbox[2]:
            continue
        cv.line(a, b, stroke="#bbb")
    cv.write(path)


def snapshot_svg(lattice, subdomain, signs, path, scan=None,
                 components=None, flagged_edges=None):
    """Percolation signs + discretised level set, with optional overlays.

    With a scan, continuum arcs are drawn per face as quadratic curves;
    ambiguity components are shaded; flagged edges highlighted.
    """
    ids = subdomain.face_ids
    lat = lattice
    pos = lat.vertices
    pad = 2.0 * lat.spec.side
    vs = pos[subdomain.vertex_ids]
    bbox = (vs[:, 0].min() - pad, vs[:, 0].max() + pad,
            vs[:, 1].min() - pad, vs[:, 1].max() + pad)
    cv = SvgCanvas(bbox)
    if components:
        for comp in components:
            for f in comp.face_ids:
                cv.polygon(pos[lat.faces[f]], fill="#ffd54d", opacity=0.6)
    edge_mask = np.zeros(lat.n_edges, dtype=bool)
    fe = lat.face_edges[ids]
    edge_mask[fe.ravel()[fe.ravel() >= 0]] = True
    for e in np.flatnonzero(edge_mask):
        a, b = pos[lat.edges[e]]
        cv.line(a, b, stroke="#cccccc", width=0.8)
    # discretised level set: dual edges of opposite-sign primal edges
    s = signs.signs
    for e in np.flatnonzero(edge_mask):
        va, vb = lat.edges[e]
        if s[va] != s[vb]:
            f0, f1 = lat.edge_faces[e]
            if f0 >= 0 and f1 >= 0:
                cv.line(lat.face_centers[f0], lat.face_centers[f1],
                        stroke="#1565c0", width=2.0)
    if scan is not None:
        for f, st in scan.faces.items():
            if not subdomain.face_mask[f]:
                continue
            c = lat.face_centers[f]
            for i, j in st.pairing:
                pa = _crossing_point(lat, scan, st.crossings[i])
                pb = _crossing_point(lat, scan, st.crossings[j])
                cv.quad(pa, c, pb, stroke="#c62828", width=1.6)
    if flagged_edges is not None:
        for e in flagged_edges:
            a, b = pos[lat.edges[e]]
            cv.line(a, b, stroke="#ff00ff", width=3.0, opacity=0.8)
    r = 0.16 * lat.spec.side * cv.scale
    for v in subdomain.vertex_ids:
        fill = "#111" if s[v] > 0 else "white"
        cv.circle(pos[v], max(r, 1.5), fill=fill, stroke="#111")
    cv.write(path)


def _crossing_point(lat, scan, crossing):
    e, k = crossing
    t = scan.edge_scan.crossings_of(e)[k]
    a, b = lat.vertices[lat.edges[e]]
    return a + t * (b - a)


def resolutions_svg(lattice, component, resolutions, path, max_shown: int = 8):
    """Panel of candidate rewirings of one ambiguity component."""
    lat = lattice
    faces = component.face_ids
    pos = lat.vertices
    pts = pos[lat.faces[faces].ravel()]
    pad = 1.5 * lat.spec.side
    w = pts[:, 0].max() - pts[:, 0].min() + 2 * pad
    bbox0 = (pts[:, 0].min() - pad, pts[:, 0].max() + pad,
             pts[:, 1].min() - pad, pts[:, 1].max() + pad)
    shown = resolutions[:max_shown]
    cv = SvgCanvas((0.0, w * len(shown), bbox0[2], bbox0[3]))
    bps = component.boundary_points
    mids = lat.edge_midpoints(bps) if len(bps) else np.zeros((0, 2))
    centre = pts.mean(axis=0)
    for idx, res in enumerate(shown):
        off = np.array([idx * w - bbox0[0], 0.0])
        for f in faces:
            cv.polygon(pos[lat.faces[f]] + off, fill="#ffd54d", opacity=0.35)
            for e in lat.face_edges[f]:
                a, b = pos[lat.edges[e]]
                cv.line(a + off, b + off, stroke="#bbb")
        for i, j in res.matching:
            cv.quad(mids[i] + off, centre + off, mids[j] + off, stroke="#1565c0", width=2.0)
        for loop in range(res.interior_loops):
            cv.circle(centre + off, (6 + 4 * loop), fill="none", stroke="#1565c0")
    cv.write(path)
