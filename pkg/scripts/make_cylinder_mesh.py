"""Generate the channel-with-obstacle triangle mesh used by the cylinder2d
benchmark and write it as ASCII MSH 2.2.

Delaunay of a graded point cloud, hole triangles removed, with a few
rounds of Laplacian smoothing (circle and outer boundary points pinned).
Run from the repository root:

    python3 scripts/make_cylinder_mesh.py meshes/cylinder2d.msh
"""

import sys

import numpy as np
from scipy.spatial import Delaunay

L, H = 2.2, 0.41
CX, CY, R = 0.2, 0.2, 0.05


def boundary_points():
    # grading: finer spacing near the obstacle, coarser downstream
    def spacing(x):
        d = abs(x - CX)
        return np.interp(d, [0.0, 0.3, 2.0], [0.016, 0.03, 0.042])

    pts = []
    x = 0.0
    xs = [0.0]
    while x < L:
        x = min(L, x + spacing(x))
        xs.append(x)
    for xx in xs:
        pts.append((xx, 0.0))
        pts.append((xx, H))
    ny = 14
    for yy in np.linspace(0, H, ny + 1)[1:-1]:
        pts.append((0.0, yy))
        pts.append((L, yy))
    n_circ = 48
    th = np.linspace(0, 2 * np.pi, n_circ, endpoint=False)
    circ = np.column_stack([CX + R * np.cos(th), CY + R * np.sin(th)])
    return np.array(pts), circ


def interior_points(rng):
    pts = []
    # graded structured background, jittered to avoid degenerate Delaunay
    x = 0.0
    while x < L:
        d = max(abs(x - CX) - R, 0.0)
        hx = np.interp(d, [0.0, 0.25, 2.0], [0.015, 0.028, 0.042])
        x += hx
        if x >= L:
            break
        ny = max(3, int(H / hx))
        for y in np.linspace(0, H, ny + 1)[1:-1]:
            p = np.array([x, y]) + rng.uniform(-0.15, 0.15, 2) * hx
            if np.hypot(p[0] - CX, p[1] - CY) > R + 0.55 * hx \
                    and 0.004 < p[1] < H - 0.004 and 0.004 < p[0] < L - 0.004:
                pts.append(p)
    # extra rings around the obstacle
    for ring, n in ((R + 0.012, 52), (R + 0.028, 58), (R + 0.05, 64),
                    (R + 0.08, 70)):
        th = np.linspace(0, 2 * np.pi, n, endpoint=False) \
            + rng.uniform(0, 0.05)
        for t in th:
            p = np.array([CX + ring * np.cos(t), CY + ring * np.sin(t)])
            if 0.01 < p[0] < L - 0.01 and 0.01 < p[1] < H - 0.01:
                pts.append(p)
    return np.array(pts)


def in_hole(p):
    return np.hypot(p[..., 0] - CX, p[..., 1] - CY) < R * (1 - 1e-9)


def triangulate(points):
    tri = Delaunay(points)
    cells = tri.simplices
    cent = points[cells].mean(axis=1)
    keep = ~in_hole(cent)
    # drop slivers hugging the circular boundary
    v = points[cells]
    a = 0.5 * np.abs((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                     - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))
    keep &= a > 1e-8
    return cells[keep]


def smooth(points, fixed_mask, rounds=6):
    pts = points.copy()
    for _ in range(rounds):
        cells = triangulate(pts)
        acc = np.zeros_like(pts)
        cnt = np.zeros(len(pts))
        for i in range(3):
            a, b = cells[:, i], cells[:, (i + 1) % 3]
            np.add.at(acc, a, pts[b])
            np.add.at(acc, b, pts[a])
            np.add.at(cnt, a, 1)
            np.add.at(cnt, b, 1)
        new = acc / np.maximum(cnt, 1)[:, None]
        pts[~fixed_mask] = new[~fixed_mask]
        # project strays back out of the hole
        d = np.hypot(pts[:, 0] - CX, pts[:, 1] - CY)
        bad = (~fixed_mask) & (d < R + 0.006)
        pts[bad] = np.column_stack([
            CX + (pts[bad, 0] - CX) / d[bad] * (R + 0.008),
            CY + (pts[bad, 1] - CY) / d[bad] * (R + 0.008)])
    return pts, triangulate(pts)


def classify_edge(pa, pb):
    mid = 0.5 * (pa + pb)
    if abs(mid[0]) < 1e-9:
        return 1  # inflow
    if abs(mid[0] - L) < 1e-9:
        return 2  # outflow
    if abs(mid[1]) < 1e-9 or abs(mid[1] - H) < 1e-9:
        return 3  # wall
    if abs(np.hypot(mid[0] - CX, mid[1] - CY) - R) < 0.01:
        return 4  # obstacle
    return None


def boundary_edges(cells):
    seen = {}
    for tri_ in cells:
        for i in range(3):
            e = tuple(sorted((tri_[i], tri_[(i + 1) % 3])))
            seen[e] = seen.get(e, 0) + 1
    return [e for e, n in seen.items() if n == 1]


def write_msh(path, points, cells):
    names = {1: "inflow", 2: "outflow", 3: "wall", 4: "obstacle"}
    lines_out = []
    for a, b in boundary_edges(cells):
        tag = classify_edge(points[a], points[b])
        if tag is None:
            raise RuntimeError(f"untagged boundary edge {points[a]} "
                               f"{points[b]}")
        lines_out.append((tag, a, b))
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write("$PhysicalNames\n%d\n" % len(names))
        for tag, name in sorted(names.items()):
            fh.write('1 %d "%s"\n' % (tag, name))
        fh.write("$EndPhysicalNames\n")
        fh.write("$Nodes\n%d\n" % len(points))
        for i, (x, y) in enumerate(points, 1):
            fh.write("%d %.16g %.16g 0\n" % (i, x, y))
        fh.write("$EndNodes\n")
        fh.write("$Elements\n%d\n" % (len(lines_out) + len(cells)))
        eid = 1
        for tag, a, b in lines_out:
            fh.write("%d 1 2 %d %d %d %d\n" % (eid, tag, tag, a + 1, b + 1))
            eid += 1
        for tri_ in cells:
            fh.write("%d 2 2 0 0 %d %d %d\n"
                     % (eid, tri_[0] + 1, tri_[1] + 1, tri_[2] + 1))
            eid += 1
        fh.write("$EndElements\n")


def main(path):
    rng = np.random.default_rng(7)
    bpts, circ = boundary_points()
    ipts = interior_points(rng)
    points = np.vstack([bpts, circ, ipts])
    fixed = np.zeros(len(points), dtype=bool)
    fixed[: len(bpts) + len(circ)] = True
    points, cells = smooth(points, fixed)
    write_msh(path, points, cells)
    print(f"wrote {path}: {len(points)} nodes, {len(cells)} triangles")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "meshes/cylinder2d.msh")
