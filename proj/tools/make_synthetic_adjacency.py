"""Synthetic stand-in for a 271-zone areal adjacency matrix.

Random points in the unit square are triangulated (Delaunay); the longest 8%
of edges are dropped as long as the graph stays connected. Vertices are then
numbered in breadth-first order from the lower-left point, so every leading
block of the matrix is a connected sub-map.

    python3 tools/make_synthetic_adjacency.py --out data/synthetic_ggc_271.csv
"""

import argparse

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay


def build(m, seed, drop):
    rng = np.random.default_rng(seed)
    pts = rng.random((m, 2))
    tri = Delaunay(pts)
    g = nx.Graph()
    g.add_nodes_from(range(m))
    for simplex in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                u, v = int(simplex[a]), int(simplex[b])
                g.add_edge(u, v, length=float(np.linalg.norm(pts[u] - pts[v])))
    edges = sorted(g.edges(data="length"), key=lambda e: -e[2])
    budget = int(drop * g.number_of_edges())
    for u, v, _ in edges:
        if budget == 0:
            break
        g.remove_edge(u, v)
        if nx.is_connected(g):
            budget -= 1
        else:
            g.add_edge(u, v)
    start = int(np.argmin(pts.sum(axis=1)))
    order = list(nx.bfs_tree(g, start))
    rank = {v: i for i, v in enumerate(order)}
    adj = np.zeros((m, m), dtype=int)
    for u, v in g.edges():
        adj[rank[u], rank[v]] = adj[rank[v], rank[u]] = 1
    return adj, pts[order]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=271)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--drop", type=float, default=0.08)
    ap.add_argument("--out", required=True)
    ap.add_argument("--coords", help="optional id,x,y output")
    args = ap.parse_args()
    adj, pts = build(args.m, args.seed, args.drop)
    with open(args.out, "w", newline="\n") as f:
        for row in adj:
            f.write(",".join(str(x) for x in row) + "\n")
    if args.coords:
        with open(args.coords, "w", newline="\n") as f:
            for i, (x, y) in enumerate(pts):
                f.write(f"{i},{x:.6f},{y:.6f}\n")
    deg = adj.sum(axis=1)
    print(f"{args.m} vertices, {adj.sum() // 2} edges, mean degree {deg.mean():.2f}, max {deg.max()}")


if __name__ == "__main__":
    main()
