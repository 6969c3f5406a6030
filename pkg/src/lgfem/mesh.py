"""Conforming triangulations of the unit square.

Provides structured crisscross and alternating-diagonal meshes, geometry
queries (areas, diameters, point location with a neighbor walk) and the
internal-vertex mesh check.  Meshes are immutable after construction and
safe to share across threads.
"""

import numpy as np

EPS_LOCATE = 1e-10
_BARY_TOL = 1e-12


class OutOfDomainError(Exception):
    """Point lies farther than the location tolerance outside the domain."""


class MeshError(Exception):
    """Invalid mesh construction input."""


class Mesh:
    """Immutable conforming triangulation of (0,1)^2.

    Attributes
    ----------
    vertices : (nv, 2) float array
    elements : (ne, 3) int array, counterclockwise vertex triples
    boundary_vertex : (nv,) bool array
    neighbors : (ne, 3) int array; neighbors[e, i] is the element across
        the edge opposite local vertex i, or -1.
    areas : (ne,) element areas
    h_elem : (ne,) element diameters (longest edge)
    h : global max of h_elem
    """

    def __init__(self, vertices, elements, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (nv, 2)")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshError("elements must have shape (ne, 3)")

        tri = self.vertices[self.elements]  # (ne, 3, 2)
        d1 = tri[:, 1] - tri[:, 0]
        d2 = tri[:, 2] - tri[:, 0]
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if validate and np.any(signed <= 0):
            bad = int(np.argmin(signed))
            raise MeshError(f"element {bad} has nonpositive signed area {signed[bad]:g}")
        self.areas = signed

        edges = np.linalg.norm(
            tri - tri[:, [1, 2, 0], :], axis=2
        )  # lengths of edges (0-1, 1-2, 2-0)
        self.h_elem = edges.max(axis=1)
        self.h = float(self.h_elem.max())

        x, y = self.vertices[:, 0], self.vertices[:, 1]
        tol = 1e-12
        self.boundary_vertex = (
            (np.abs(x) <= tol)
            | (np.abs(x - 1.0) <= tol)
            | (np.abs(y) <= tol)
            | (np.abs(y - 1.0) <= tol)
        )

        self.neighbors = self._build_neighbors(validate)
        self._build_locate_grid()

        self.vertices.setflags(write=False)
        self.elements.setflags(write=False)
        self.boundary_vertex.setflags(write=False)
        self.neighbors.setflags(write=False)
        self.areas.setflags(write=False)
        self.h_elem.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_elements(self):
        return self.elements.shape[0]

    def _build_neighbors(self, validate):
        ne = self.num_elements
        neighbors = np.full((ne, 3), -1, dtype=np.int64)
        edge_map = {}
        for e in range(ne):
            v = self.elements[e]
            for i in range(3):
                # edge opposite local vertex i
                key = (min(v[(i + 1) % 3], v[(i + 2) % 3]), max(v[(i + 1) % 3], v[(i + 2) % 3]))
                if key in edge_map:
                    e2, i2 = edge_map.pop(key)
                    neighbors[e, i] = e2
                    neighbors[e2, i2] = e
                else:
                    edge_map[key] = (e, i)
        if validate:
            # remaining unmatched edges must all lie on the boundary
            for (a, b) in edge_map:
                if not (self.boundary_vertex[a] and self.boundary_vertex[b]):
                    raise MeshError(f"non-conforming interior edge ({a}, {b})")
        return neighbors

    def _build_locate_grid(self):
        # uniform background grid; candidate lists per bin by bbox overlap
        g = max(1, int(round(1.0 / self.h)))
        self._grid_n = g
        tri = self.vertices[self.elements]
        lo = tri.min(axis=1)
        hi = tri.max(axis=1)
        # inclusive on the upper side so an element whose box merely touches
        # a bin boundary is listed in both bins; query points on the shared
        # line then still see every containing element (lowest-id tie-break)
        i0 = np.clip((lo[:, 0] * g).astype(np.int64), 0, g - 1)
        i1 = np.clip((hi[:, 0] * g).astype(np.int64), 0, g - 1)
        j0 = np.clip((lo[:, 1] * g).astype(np.int64), 0, g - 1)
        j1 = np.clip((hi[:, 1] * g).astype(np.int64), 0, g - 1)
        bins = [[] for _ in range(g * g)]
        for e in range(self.num_elements):
            for i in range(i0[e], i1[e] + 1):
                for j in range(j0[e], j1[e] + 1):
                    bins[i * g + j].append(e)
        counts = np.array([len(b) for b in bins], dtype=np.int64)
        self._bin_ptr = np.concatenate([[0], np.cumsum(counts)])
        self._bin_elems = np.array(
            [e for b in bins for e in b], dtype=np.int64
        ) if counts.sum() else np.empty(0, dtype=np.int64)
        self._bin_ptr.setflags(write=False)
        self._bin_elems.setflags(write=False)

    def barycentric(self, elem, x):
        """Barycentric coordinates of point x in element elem."""
        a, b, c = self.vertices[self.elements[elem]]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (x[1] - a[1]) * (c[0] - a[0])) / det
        l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / det
        return np.array([1.0 - l1 - l2, l1, l2])

    def _bin_candidates(self, x):
        g = self._grid_n
        i = min(max(int(x[0] * g), 0), g - 1)
        j = min(max(int(x[1] * g), 0), g - 1)
        k = i * g + j
        return self._bin_elems[self._bin_ptr[k] : self._bin_ptr[k + 1]]

    def locate_point(self, x, hint=None):
        """Locate the element containing x; returns (element id, barycentric).

        Points within EPS_LOCATE outside [0,1]^2 are clamped to the boundary
        first.  Ties at shared edges/vertices resolve to the lowest element
        id.  A neighbor walk is tried from `hint`; the deterministic
        bin-scan fallback also enforces the tie-break.
        """
        x = np.asarray(x, dtype=np.float64)
        if (
            x[0] < -EPS_LOCATE
            or x[0] > 1.0 + EPS_LOCATE
            or x[1] < -EPS_LOCATE
            or x[1] > 1.0 + EPS_LOCATE
        ):
            raise OutOfDomainError(f"point {x} outside the unit square")
        x = np.clip(x, 0.0, 1.0)

        if hint is not None:
            found = self._walk(x, hint)
            if found is not None:
                e, lam = found
                if lam.min() > _BARY_TOL:
                    return e, lam  # strictly interior, no tie possible

        # deterministic scan of the background-grid bin, ascending element id
        cands = np.sort(self._bin_candidates(x))
        for e in cands:
            lam = self.barycentric(e, x)
            if lam.min() >= -_BARY_TOL:
                return int(e), lam
        # exhaustive fallback (bins should always cover, kept for safety)
        for e in range(self.num_elements):
            lam = self.barycentric(e, x)
            if lam.min() >= -_BARY_TOL:
                return e, lam
        raise OutOfDomainError(f"no element contains point {x}")

    def _walk(self, x, start):
        e = int(start)
        for _ in range(4 * self.num_elements):
            lam = self.barycentric(e, x)
            i = int(np.argmin(lam))
            if lam[i] >= -_BARY_TOL:
                return e, lam
            nb = self.neighbors[e, i]
            if nb < 0:
                return None
            e = int(nb)
        return None

    def check_internal_vertex_hypothesis(self):
        """True iff every element has at least one interior vertex.

        Returns (ok, violating element ids).
        """
        all_boundary = self.boundary_vertex[self.elements].all(axis=1)
        bad = np.nonzero(all_boundary)[0]
        return bad.size == 0, bad.tolist()

    def dump(self, path):
        """Write the mesh in the plain-text exchange format."""
        with open(path, "w", newline="\n") as fh:
            fh.write(f"{self.num_vertices} {self.num_elements}\n")
            for (x, y), b in zip(self.vertices, self.boundary_vertex):
                fh.write(f"{x:.17g} {y:.17g} {1 if b else 0}\n")
            for i, j, k in self.elements:
                fh.write(f"{i} {j} {k}\n")

    @staticmethod
    def load(path):
        with open(path) as fh:
            nv, ne = map(int, fh.readline().split())
            verts = np.empty((nv, 2))
            for i in range(nv):
                x, y, _b = fh.readline().split()
                verts[i] = (float(x), float(y))
            elems = np.empty((ne, 3), dtype=np.int64)
            for e in range(ne):
                elems[e] = [int(t) for t in fh.readline().split()]
        return Mesh(verts, elems)


def generate_unit_square_mesh(n, pattern="crisscross"):
    """Structured triangulation of (0,1)^2 with n divisions per side.

    pattern "crisscross" places one center vertex per cell (4 triangles per
    cell); "alternating_diagonal" splits each cell along a diagonal whose
    direction alternates with cell parity.
    """
    if n < 2:
        raise ValueError(f"side division must be >= 2, got {n}")
    if pattern not in ("crisscross", "alternating_diagonal"):
        raise ValueError(f"unknown mesh pattern {pattern!r}")

    xs = np.linspace(0.0, 1.0, n + 1)
    gid = lambda i, j: i * (n + 1) + j  # noqa: E731
    grid = np.array([[x, y] for x in xs for y in xs])

    elems = []
    if pattern == "crisscross":
        centers = np.array(
            [[(xs[i] + xs[i + 1]) / 2.0, (xs[j] + xs[j + 1]) / 2.0] for i in range(n) for j in range(n)]
        )
        verts = np.vstack([grid, centers])
        base = (n + 1) * (n + 1)
        for i in range(n):
            for j in range(n):
                m = base + i * n + j
                c00, c10 = gid(i, j), gid(i + 1, j)
                c01, c11 = gid(i, j + 1), gid(i + 1, j + 1)
                elems += [[c00, c10, m], [c10, c11, m], [c11, c01, m], [c01, c00, m]]
    else:
        verts = grid
        for i in range(n):
            for j in range(n):
                c00, c10 = gid(i, j), gid(i + 1, j)
                c01, c11 = gid(i, j + 1), gid(i + 1, j + 1)
                if (i + j) % 2 == 0:
                    elems += [[c00, c10, c11], [c00, c11, c01]]
                else:
                    elems += [[c00, c10, c01], [c10, c11, c01]]
    return Mesh(verts, np.array(elems, dtype=np.int64))
