"""Fast exact evaluation of plane-wave samples on lattice-structured points.

The superposition Psi(x) = w sum_j cos(k<x,theta_j> + phi_j) restricted to a
point set {base + a*u + b*v} factorises through powers of unit complex
numbers: Psi over the (a,b) grid is Re[(E_u diag(c)) E_v^T], a single complex
matmul.  Scattered subsets (face grids, edge scans) reuse the same row
tables, so per-point trig never appears in the hot path.  Every method here
is numerically identical to RpwSample.evaluate (property-tested).
"""

from __future__ import annotations

import numpy as np

from .field import RpwSample
from .lattice import Lattice


class DirectField:
    """Structured-evaluation interface backed by plain pointwise evaluation.

    Slow path for samples without plane-wave structure (synthetic fields in
    tests); numerically identical to StructuredField on shared methods.
    """

    def __init__(self, sample, lattice: Lattice):
        self.sample = sample
        self.lattice = lattice

    def vertex_values(self) -> np.ndarray:
        return self.sample.evaluate(self.lattice.vertices)

    def face_center_values_grads(self):
        c = self.lattice.face_centers
        return self.sample.evaluate(c), self.sample.gradient(c)

    def face_rows(self, face_ids):
        return self.lattice.face_centers[np.asarray(face_ids)]

    def offset_table(self, offsets):
        return np.atleast_2d(np.asarray(offsets, dtype=float))

    def offsets_values(self, rows, table):
        pts = rows[:, None, :] + table[None, :, :]
        return self.sample.evaluate(pts.reshape(-1, 2)).reshape(len(rows), len(table))

    def edge_values(self, edge_ids, nt: int) -> np.ndarray:
        pts = self.lattice.edge_points(np.asarray(edge_ids), np.linspace(0.0, 1.0, nt))
        return self.sample.evaluate(pts.reshape(-1, 2)).reshape(len(edge_ids), nt)


class StructuredField:
    """Evaluation tables binding one RpwSample to one Lattice window."""

    def __init__(self, sample: RpwSample, lattice: Lattice):
        self.sample = sample
        self.lattice = lattice
        self.k = sample.k
        self._tables = {}

    # ---------------------------------------------------------------- core
    def _freq(self, vec) -> np.ndarray:
        """Per-summand phase increment for a displacement vector."""
        return self.k * (self.sample.thetas @ np.asarray(vec, dtype=float))

    def _pow_table(self, vec, n: int) -> np.ndarray:
        """(n, M) complex table exp(i * a * k<vec, theta>) for a = 0..n-1."""
        key = ("pow", tuple(np.round(np.asarray(vec), 12)), n)
        if key not in self._tables:
            om = self._freq(vec)
            self._tables[key] = np.exp(1j * np.outer(np.arange(n), om))
        return self._tables[key]

    def _base_row(self, point) -> np.ndarray:
        ph = self.k * (self.sample.thetas @ np.asarray(point, dtype=float)) + self.sample.phis
        return np.exp(1j * ph)

    def grid_values(self, base, u, v, na: int, nb: int) -> np.ndarray:
        """Psi on {base + a u + b v}, shape (na, nb)."""
        eu = self._pow_table(u, na)
        ev = self._pow_table(v, nb)
        c = self._base_row(base) * self.sample.weight
        return ((eu * c) @ ev.T).real

    def grid_gradients(self, base, u, v, na: int, nb: int) -> np.ndarray:
        """Gradient of Psi on the same grid, shape (na, nb, 2)."""
        eu = self._pow_table(u, na)
        ev = self._pow_table(v, nb)
        c = self._base_row(base) * self.sample.weight
        out = np.empty((na, nb, 2))
        for axis in range(2):
            w = 1j * self.k * self.sample.thetas[:, axis]
            out[:, :, axis] = ((eu * (c * w)) @ ev.T).real
        return out

    def rows_for(self, base, u, v, a_idx, b_idx) -> np.ndarray:
        """(n, M) complex rows for scattered lattice points base + a u + b v."""
        na = int(np.max(a_idx)) + 1 if len(a_idx) else 1
        nb = int(np.max(b_idx)) + 1 if len(b_idx) else 1
        eu = self._pow_table(u, na)
        ev = self._pow_table(v, nb)
        c = self._base_row(base)
        return (eu[a_idx] * ev[b_idx]) * c

    @staticmethod
    def offsets_values(rows, offsets_table) -> np.ndarray:
        """Re[rows @ offsets_table.T]: values at each row point + each offset."""
        return (rows @ offsets_table.T).real

    def offset_table(self, offsets) -> np.ndarray:
        """(nO, M) complex table for a fixed set of displacement offsets."""
        offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        ph = self.k * (offsets @ self.sample.thetas.T)
        return np.exp(1j * ph)

    # ------------------------------------------------------ lattice layouts
    def vertex_values(self) -> np.ndarray:
        """Psi at every lattice vertex, ordered by vertex id."""
        lat = self.lattice
        spec = lat.spec
        h = spec.side
        ox, oy = spec.origin
        if lat.family == "hexagonal":
            g = lat._hex
            u = (np.sqrt(3.0) * h, 0.0)
            v = (np.sqrt(3.0) * h / 2.0, 1.5 * h)
            i0, j0 = g["i_lo"] - g["pv"], g["j_lo"] - g["pv"]
            base0 = np.array([ox + u[0] * i0 + v[0] * j0, oy + v[1] * j0])
            out = np.empty((g["niv"], g["njv"], 2))
            for s, dy in ((0, h), (1, -h)):
                vals = self.grid_values(base0 + np.array([0.0, dy]), u, v, g["niv"], g["njv"])
                out[:, :, s] = vals
            return out.reshape(-1)
        if lat.family == "square":
            g = lat._sq
            i0, j0 = g["i_lo"] - g["pv"], g["j_lo"] - g["pv"]
            base0 = np.array([ox + h * i0, oy + h * j0])
            return self.grid_values(base0, (h, 0.0), (0.0, h), g["niv"], g["njv"]).reshape(-1)
        g = lat._tri
        u = (h, 0.0)
        v = (0.5 * h, 0.5 * np.sqrt(3.0) * h)
        i0, j0 = g["i_lo"] - g["pv"], g["j_lo"] - g["pv"]
        base0 = np.array([ox + u[0] * i0 + v[0] * j0, oy + v[1] * j0])
        return self.grid_values(base0, u, v, g["niv"], g["njv"]).reshape(-1)

    def face_center_values_grads(self):
        """(values, gradients) at every face centre, ordered by face id."""
        lat = self.lattice
        spec = lat.spec
        h = spec.side
        ox, oy = spec.origin
        if lat.family == "hexagonal":
            g = lat._hex
            u = (np.sqrt(3.0) * h, 0.0)
            v = (np.sqrt(3.0) * h / 2.0, 1.5 * h)
            base0 = np.array([ox + u[0] * g["i_lo"] + v[0] * g["j_lo"], oy + v[1] * g["j_lo"]])
            vals = self.grid_values(base0, u, v, g["ni"], g["nj"]).reshape(-1)
            grads = self.grid_gradients(base0, u, v, g["ni"], g["nj"]).reshape(-1, 2)
            return vals, grads
        if lat.family == "square":
            g = lat._sq
            base0 = np.array([ox + h * (g["i_lo"] + 0.5), oy + h * (g["j_lo"] + 0.5)])
            vals = self.grid_values(base0, (h, 0.0), (0.0, h), g["ni"], g["nj"]).reshape(-1)
            grads = self.grid_gradients(base0, (h, 0.0), (0.0, h), g["ni"], g["nj"]).reshape(-1, 2)
            return vals, grads
        raise NotImplementedError("face-centre fast path: hexagonal/square only")

    def face_rows(self, face_ids) -> np.ndarray:
        """Complex rows (n, M) anchored at the selected face centres."""
        lat = self.lattice
        spec = lat.spec
        h = spec.side
        ox, oy = spec.origin
        if lat.family != "hexagonal":
            raise NotImplementedError("face oracle fast path: hexagonal only")
        g = lat._hex
        u = (np.sqrt(3.0) * h, 0.0)
        v = (np.sqrt(3.0) * h / 2.0, 1.5 * h)
        base0 = np.array([ox + u[0] * g["i_lo"] + v[0] * g["j_lo"], oy + v[1] * g["j_lo"]])
        a_idx = np.asarray(face_ids) // g["nj"]
        b_idx = np.asarray(face_ids) % g["nj"]
        return self.rows_for(base0, u, v, a_idx, b_idx) * self.sample.weight

    def vertex_rows(self, vertex_ids) -> np.ndarray:
        """Complex rows for lattice vertices, gathered from power tables."""
        lat = self.lattice
        vid = np.asarray(vertex_ids)
        if lat.family != "hexagonal":
            pts = lat.vertices[vid]
            ph = self.k * (pts @ self.sample.thetas.T) + self.sample.phis
            return np.exp(1j * ph)
        g = lat._hex
        h = lat.spec.side
        ox, oy = lat.spec.origin
        u = (np.sqrt(3.0) * h, 0.0)
        v = (np.sqrt(3.0) * h / 2.0, 1.5 * h)
        i0, j0 = g["i_lo"] - g["pv"], g["j_lo"] - g["pv"]
        base0 = np.array([ox + u[0] * i0 + v[0] * j0, oy + v[1] * j0])
        sub = vid % 2
        ij = vid // 2
        a = ij // g["njv"]
        b = ij % g["njv"]
        eu = self._pow_table(u, g["niv"])
        ev = self._pow_table(v, g["njv"])
        rows = eu[a] * ev[b]
        c_top = self._base_row(base0 + np.array([0.0, h]))
        c_bot = self._base_row(base0 + np.array([0.0, -h]))
        rows[sub == 0] *= c_top
        rows[sub == 1] *= c_bot
        return rows

    def edge_rows(self, edge_ids) -> np.ndarray:
        """Complex rows anchored at the start vertex of the selected edges."""
        lat = self.lattice
        return self.vertex_rows(lat.edges[np.asarray(edge_ids), 0]) * self.sample.weight

    def edge_values(self, edge_ids, nt: int) -> np.ndarray:
        """Psi at nt equispaced points (t=0..1) along each selected edge.

        Edges are grouped by direction class so each group shares one
        offset table.
        """
        lat = self.lattice
        edge_ids = np.asarray(edge_ids)
        out = np.empty((len(edge_ids), nt))
        t = np.linspace(0.0, 1.0, nt)
        for d in np.unique(lat.edge_dir[edge_ids]):
            sel = lat.edge_dir[edge_ids] == d
            ids = edge_ids[sel]
            e0 = ids[0]
            vec = lat.vertices[lat.edges[e0, 1]] - lat.vertices[lat.edges[e0, 0]]
            table = self.offset_table(t[:, None] * vec[None, :])
            rows = self.edge_rows(ids)
            out[sel] = self.offsets_values(rows, table)
        return out
