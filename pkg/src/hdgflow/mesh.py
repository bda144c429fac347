"""2D simplicial meshes: structured rectangle triangulations, a Gmsh
MSH 2.2 (ASCII) subset importer, facet topology with a global
orientation convention, and per-cell affine geometry.

Facet orientation: every facet is stored (v_lo, v_hi) with
v_lo < v_hi (global vertex index), so shared-facet dof identification
is deterministic and independent of cell ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


class MshParseError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class Mesh:
    """Immutable triangle mesh with oriented facet connectivity.

    cells are counter-clockwise vertex triples.  cell_facets[c, lf] is the
    facet id of local edge lf = (v_lf, v_{lf+1 mod 3}) of cell c, and
    cell_facet_orient[c, lf] is +1 when that local edge already runs from
    the lower to the higher global vertex index.
    facet_cells[f] holds the adjacent cell ids (second entry -1 on the
    boundary).  boundary_tags maps boundary facet ids to names.
    """

    vertices: np.ndarray          # (nv, 2)
    cells: np.ndarray             # (nc, 3)
    facets: np.ndarray            # (nf, 2), low -> high vertex index
    cell_facets: np.ndarray       # (nc, 3)
    cell_facet_orient: np.ndarray  # (nc, 3) in {+1, -1}
    facet_cells: np.ndarray       # (nf, 2), -1 marks missing neighbor
    boundary_tags: dict[int, str] = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_facets(self) -> int:
        return len(self.facets)

    @property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[:, 1] < 0)

    @property
    def interior_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[:, 1] >= 0)

    def cell_areas(self) -> np.ndarray:
        v = self.vertices[self.cells]
        return 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                      - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))

    def facets_with_tag(self, tag: str) -> list[int]:
        return [f for f, t in self.boundary_tags.items() if t == tag]

    def dump_csv(self, path) -> None:
        """Debug dump: vertex and cell tables in one CSV file."""
        with open(path, "w") as fh:
            fh.write("kind,id,a,b,c\n")
            for i, (x, y) in enumerate(self.vertices):
                fh.write(f"vertex,{i},{x!r},{y!r},\n")
            for i, (a, b, c) in enumerate(self.cells):
                fh.write(f"cell,{i},{a},{b},{c}\n")


@dataclass(frozen=True)
class CellGeometry:
    """Affine map data of one cell: x = J x_ref + vertices[0]."""

    jacobian: np.ndarray        # (2, 2)
    det: float
    inv_jacobian_T: np.ndarray  # (2, 2)
    h_K: float                  # longest edge length
    facet_normals: np.ndarray   # (3, 2) outward unit normals per local edge
    facet_lengths: np.ndarray   # (3,)


def build_mesh(vertices: np.ndarray, cells: np.ndarray,
               boundary_tagger=None) -> Mesh:
    """Construct connectivity from vertex/cell arrays and validate.

    `boundary_tagger(midpoint) -> str` assigns names to boundary facets.
    """
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (nv, 2) array")
    if cells.ndim != 2 or cells.shape[1] != 3:
        raise MeshError("cells must be an (nc, 3) array")

    v = vertices[cells]
    areas = 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                   - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))
    bad = np.flatnonzero(areas <= 0)
    if bad.size:
        raise MeshError(f"cell {bad[0]} has non-positive area {areas[bad[0]]}")

    facet_index: dict[tuple[int, int], int] = {}
    facet_list: list[tuple[int, int]] = []
    nc = len(cells)
    cell_facets = np.empty((nc, 3), dtype=np.int64)
    cell_orient = np.empty((nc, 3), dtype=np.int8)
    facet_cells: list[list[int]] = []
    for c in range(nc):
        for lf in range(3):
            a, b = int(cells[c, lf]), int(cells[c, (lf + 1) % 3])
            key = (a, b) if a < b else (b, a)
            f = facet_index.get(key)
            if f is None:
                f = len(facet_list)
                facet_index[key] = f
                facet_list.append(key)
                facet_cells.append([c])
            else:
                if len(facet_cells[f]) >= 2:
                    raise MeshError(f"facet {key} shared by more than 2 cells")
                facet_cells[f].append(c)
            cell_facets[c, lf] = f
            cell_orient[c, lf] = 1 if a < b else -1

    fc = np.full((len(facet_list), 2), -1, dtype=np.int64)
    for f, adj in enumerate(facet_cells):
        fc[f, : len(adj)] = adj

    mesh = Mesh(vertices=vertices, cells=cells,
                facets=np.array(facet_list, dtype=np.int64),
                cell_facets=cell_facets, cell_facet_orient=cell_orient,
                facet_cells=fc)
    if boundary_tagger is not None:
        for f in mesh.boundary_facets:
            mid = vertices[mesh.facets[f]].mean(axis=0)
            mesh.boundary_tags[int(f)] = boundary_tagger(mid)
    return mesh


def generate_rect_mesh(nx: int, ny: int,
                       bbox: tuple[float, float, float, float]) -> Mesh:
    """Structured triangulation of a rectangle.

    Each grid quad is split along its lower-left -> upper-right diagonal,
    giving 2*nx*ny cells.  Boundary facets are tagged left/right/bottom/top.
    """
    x0, y0, x1, y1 = bbox
    if nx < 1 or ny < 1:
        raise MeshError("nx, ny must be >= 1")
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate bbox {bbox}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):  # column i, row j
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))

    tol = 1e-12 * max(x1 - x0, y1 - y0)

    def tagger(mid):
        if abs(mid[0] - x0) < tol:
            return "left"
        if abs(mid[0] - x1) < tol:
            return "right"
        if abs(mid[1] - y0) < tol:
            return "bottom"
        return "top"

    return build_mesh(vertices, np.array(cells), tagger)


def cell_geometry(mesh: Mesh, cell_id: int) -> CellGeometry:
    """Affine map, diameter and outward facet normals of one cell."""
    v = mesh.vertices[mesh.cells[cell_id]]
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    det = float(np.linalg.det(J))
    edges = np.array([v[1] - v[0], v[2] - v[1], v[0] - v[2]])
    lengths = np.linalg.norm(edges, axis=1)
    # outward normal of edge (a, b) of a CCW triangle: rotate edge by -90 deg
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    return CellGeometry(jacobian=J, det=det,
                        inv_jacobian_T=np.linalg.inv(J).T,
                        h_K=float(lengths.max()),
                        facet_normals=normals, facet_lengths=lengths)


@dataclass(frozen=True)
class MeshGeometry:
    """Batched per-cell geometry used by the assembler."""

    jacobians: np.ndarray      # (nc, 2, 2)
    dets: np.ndarray           # (nc,)
    inv_jac_T: np.ndarray      # (nc, 2, 2)
    h: np.ndarray              # (nc,)
    normals: np.ndarray        # (nc, 3, 2)
    lengths: np.ndarray        # (nc, 3)
    origins: np.ndarray        # (nc, 2) image of the reference origin


def mesh_geometry(mesh: Mesh) -> MeshGeometry:
    v = mesh.vertices[mesh.cells]  # (nc, 3, 2)
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    dets = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1]
    invJ[:, 0, 1] = -J[:, 0, 1]
    invJ[:, 1, 0] = -J[:, 1, 0]
    invJ[:, 1, 1] = J[:, 0, 0]
    invJ /= dets[:, None, None]
    edges = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1],
                      v[:, 0] - v[:, 2]], axis=1)  # (nc, 3, 2)
    lengths = np.linalg.norm(edges, axis=2)
    normals = np.stack([edges[..., 1], -edges[..., 0]], axis=-1)
    normals /= lengths[..., None]
    return MeshGeometry(jacobians=J, dets=dets,
                        inv_jac_T=np.transpose(invJ, (0, 2, 1)),
                        h=lengths.max(axis=1), normals=normals,
                        lengths=lengths, origins=v[:, 0])


# ---------------------------------------------------------------------------
# Gmsh MSH 2.2 ASCII subset
# ---------------------------------------------------------------------------

def import_gmsh(text: str) -> Mesh:
    """Parse an ASCII MSH 2.2 file with triangles and tagged boundary lines.

    Supported element types: 1 (2-node line, boundary tag carrier),
    2 (3-node triangle), 15 (point, ignored).  Anything else is rejected.
    """
    lines = text.splitlines()
    sections: dict[str, tuple[int, list[str]]] = {}
    i = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped.startswith("$") and not stripped.startswith("$End"):
            name = stripped[1:]
            end = f"$End{name}"
            j = i + 1
            body = []
            while j < len(lines) and lines[j].strip() != end:
                body.append(lines[j])
                j += 1
            if j >= len(lines):
                raise MshParseError(f"section ${name} is not closed", i + 1)
            sections[name] = (i + 1, body)
            i = j + 1
        else:
            i += 1

    if "Nodes" not in sections:
        raise MshParseError("missing $Nodes section")
    if "Elements" not in sections:
        raise MshParseError("missing $Elements section")

    phys_names: dict[int, str] = {}
    if "PhysicalNames" in sections:
        start, body = sections["PhysicalNames"]
        for off, ln in enumerate(body[1:], start=2):
            parts = ln.split()
            if len(parts) < 3:
                raise MshParseError("malformed physical name", start + off)
            phys_names[int(parts[1])] = parts[2].strip('"')

    start, body = sections["Nodes"]
    try:
        n_nodes = int(body[0])
    except (IndexError, ValueError):
        raise MshParseError("bad node count", start + 1)
    if len(body) - 1 != n_nodes:
        raise MshParseError(f"expected {n_nodes} node lines, got "
                            f"{len(body) - 1}", start + 1)
    node_id_map: dict[int, int] = {}
    coords = np.empty((n_nodes, 2))
    for idx, ln in enumerate(body[1:]):
        parts = ln.split()
        if len(parts) < 4:
            raise MshParseError("malformed node line", start + idx + 2)
        node_id_map[int(parts[0])] = idx
        coords[idx] = (float(parts[1]), float(parts[2]))

    start, body = sections["Elements"]
    try:
        n_elems = int(body[0])
    except (IndexError, ValueError):
        raise MshParseError("bad element count", start + 1)
    cells = []
    tagged_edges: list[tuple[int, int, str]] = []
    for idx, ln in enumerate(body[1: n_elems + 1]):
        lineno = start + idx + 2
        parts = [int(p) for p in ln.split()]
        if len(parts) < 3:
            raise MshParseError("malformed element line", lineno)
        etype, ntags = parts[1], parts[2]
        tags = parts[3: 3 + ntags]
        nodes = parts[3 + ntags:]
        try:
            nodes = [node_id_map[n] for n in nodes]
        except KeyError as exc:
            raise MshParseError(f"unreferenced node id {exc.args[0]}", lineno)
        if etype == 15:
            continue
        if etype == 1:
            if len(nodes) != 2:
                raise MshParseError("2-node line expected", lineno)
            tag = tags[0] if tags else 0
            tagged_edges.append((nodes[0], nodes[1],
                                 phys_names.get(tag, str(tag))))
        elif etype == 2:
            if len(nodes) != 3:
                raise MshParseError("3-node triangle expected", lineno)
            cells.append(nodes)
        else:
            raise MshParseError(f"unsupported element type {etype} "
                                "(only 2D triangle meshes)", lineno)
    if not cells:
        raise MshParseError("no triangles in $Elements")

    cells = np.array(cells, dtype=np.int64)
    # enforce CCW orientation
    v = coords[cells]
    areas = 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                   - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))
    flip = areas < 0
    cells[flip] = cells[flip][:, ::-1]

    mesh = build_mesh(coords, cells)
    key_to_facet = {tuple(sorted(fv)): f for f, fv in enumerate(mesh.facets)}
    boundary = set(int(f) for f in mesh.boundary_facets)
    for a, b, name in tagged_edges:
        f = key_to_facet.get((a, b) if a < b else (b, a))
        if f is not None and f in boundary:
            mesh.boundary_tags[f] = name
    return mesh
