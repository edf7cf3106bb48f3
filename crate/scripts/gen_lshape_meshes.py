"""Unstructured meshes of the L-shaped domain (-1,1)^2 minus [0,1)x(-1,0].

Boundary points are spaced uniformly at 1/m, interior points sit on a
jittered triangular lattice, and the triangulation is Delaunay with the
triangles of the excluded quadrant removed.

    python3 scripts/gen_lshape_meshes.py 8:22 16:23 32:24 64:25 128:26

writes data/meshes/lshape_unstructured_<m>.json for each m:seed pair.
"""

import json
import sys
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

JITTER = 0.3
CORNERS = [(-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)]


def lshape_mesh(m, seed):
    rng = np.random.default_rng(seed)
    h = 1.0 / m
    pts = []
    for a, b in zip(CORNERS, CORNERS[1:] + CORNERS[:1]):
        k = int(round((abs(b[0] - a[0]) + abs(b[1] - a[1])) / h))
        for i in range(k):
            s = i / k
            pts.append((a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])))
    dy = h * np.sqrt(3) / 2
    y, j = -1 + dy, 1
    while y < 1 - 0.5 * h:
        x = -1 + (h / 2 if j % 2 else h)
        while x < 1 - 0.45 * h:
            if not (x > -0.45 * h and y < 0.45 * h):
                pts.append((x + rng.uniform(-JITTER, JITTER) * h, y + rng.uniform(-JITTER, JITTER) * h))
            x += h
        y += dy
        j += 1
    p = np.array(pts)
    tris = []
    for t in Delaunay(p).simplices:
        a = p[t]
        c = a.mean(axis=0)
        if c[0] > 0 and c[1] < 0:
            continue
        area = 0.5 * ((a[1, 0] - a[0, 0]) * (a[2, 1] - a[0, 1]) - (a[2, 0] - a[0, 0]) * (a[1, 1] - a[0, 1]))
        if abs(area) > 1e-10 * h * h:
            tris.append([int(i) for i in (t if area > 0 else [t[0], t[2], t[1]])])
    used = sorted({i for t in tris for i in t})
    remap = {old: new for new, old in enumerate(used)}
    vertices = [[round(float(x), 12), round(float(y), 12)] for x, y in p[used]]
    return vertices, [[remap[i] for i in t] for t in tris]


def main(args):
    out = Path(__file__).resolve().parent.parent / "data" / "meshes"
    for arg in args:
        m, seed = (int(v) for v in arg.split(":"))
        vertices, triangles = lshape_mesh(m, seed)
        path = out / f"lshape_unstructured_{m}.json"
        path.write_text(json.dumps({"vertices": vertices, "triangles": triangles}, separators=(",", ":")))
        print(f"{path.name}: {len(vertices)} vertices, {len(triangles)} triangles")


if __name__ == "__main__":
    main(sys.argv[1:] or ["8:22", "16:23", "32:24", "64:25", "128:26"])
