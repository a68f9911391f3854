"""Ring perception: bridge-based ring membership and small-ring listing.

Ring membership uses cycle detection (an edge is a ring edge iff it is not
a bridge); minimum cycle bases are only computed for molecules that carry
aromatic atoms, to validate aromatic ring sizes.
"""

from __future__ import annotations

import networkx as nx


def ring_edge_flags(n_atoms: int, edges: list[tuple[int, int]]) -> list[bool]:
    """True for every edge lying on a cycle (i.e. not a bridge)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for ei, (a, b) in enumerate(edges):
        adj[a].append((b, ei))
        adj[b].append((a, ei))

    is_bridge = [False] * len(edges)
    disc = [-1] * n_atoms
    low = [0] * n_atoms
    timer = 0
    for root in range(n_atoms):
        if disc[root] != -1:
            continue
        # iterative DFS: stack of (node, incoming edge, neighbor iterator)
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            node, in_edge, it = stack[-1]
            advanced = False
            for nbr, ei in it:
                if ei == in_edge:
                    continue
                if disc[nbr] == -1:
                    disc[nbr] = low[nbr] = timer
                    timer += 1
                    stack.append((nbr, ei, iter(adj[nbr])))
                    advanced = True
                    break
                low[node] = min(low[node], disc[nbr])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        is_bridge[in_edge] = True
    return [not b for b in is_bridge]


def ring_atom_flags(n_atoms: int, edges: list[tuple[int, int]]) -> list[bool]:
    """True for every atom incident to at least one ring edge."""
    flags = [False] * n_atoms
    for (a, b), in_ring in zip(edges, ring_edge_flags(n_atoms, edges)):
        if in_ring:
            flags[a] = True
            flags[b] = True
    return flags


def smallest_rings(n_atoms: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    """Minimum cycle basis of the graph, each cycle as an atom list."""
    g = nx.Graph()
    g.add_nodes_from(range(n_atoms))
    g.add_edges_from(edges)
    return [list(cycle) for cycle in nx.minimum_cycle_basis(g)]
