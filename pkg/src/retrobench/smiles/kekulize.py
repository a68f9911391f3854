"""Kekulization: assign alternating single/double orders to aromatic systems.

The assignment is a maximum-cardinality matching on the pi-subgraph (the
aromatic atoms that still need one double bond, connected by aromatic
bonds). Which atoms need a double bond follows the lone-pair/empty-orbital
donor rules:

  * C        needs one, unless charged or already carrying an explicit
             double/triple bond (exocyclic quinoid carbonyl etc.)
  * B        never (empty orbital acceptor)
  * N, P, As neutral: needs one iff it bears no hydrogen and has exactly two
             connections (pyridine-type); +1: needs one while it still has
             room for a fourth connection; -1: never (lone-pair donor)
  * O, S, Se needs one only when +1 charged (pyrylium-type)

Aromatic rings whose size falls outside [5, 7] are rejected, as are
aromatic bonds whose endpoints are not both aromatic. A failed aromatic
system marks its whole connected component: those bonds get no kekulized
order and the offending atoms are recorded for the validity report.
"""

from __future__ import annotations

from typing import Optional

import networkx as nx

from retrobench.smiles import rings
from retrobench.smiles.graph import (
    AROMATIC, BOND_ORDER_VALUE, DOUBLE, KekulizationError, Molecule, SINGLE,
    TRIPLE, Atom, Bond,
)


def needs_pi_bond(atom: Atom, degree: int, has_fixed_multiple: bool) -> bool:
    """Whether an aromatic atom must receive exactly one double bond."""
    if has_fixed_multiple:
        return False
    h = atom.explicit_hydrogens or 0
    elem = atom.element
    if elem == "C":
        return atom.charge == 0
    if elem == "B":
        return False
    if elem in ("N", "P", "As"):
        if atom.charge == 0:
            return h == 0 and degree == 2
        if atom.charge == 1:
            return degree + h <= 3
        return False
    if elem in ("O", "S", "Se"):
        return atom.charge == 1
    return False


def assign_pi_orders(
    atoms: list[Atom],
    bonds: list[Bond],
    declared_orders: list[str],
) -> tuple[list[Optional[int]], list[int]]:
    """Compute per-bond integer orders; aromatic bonds become 1 or 2.

    Returns (orders, failed_atoms). Bonds inside a component containing any
    failed atom get order None.
    """
    n = len(atoms)
    orders: list[Optional[int]] = [
        BOND_ORDER_VALUE.get(declared_orders[bi], 1) for bi in range(len(bonds))
    ]
    if not any(a.aromatic for a in atoms):
        return orders, []

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, bi))
        adj[bond.b].append((bond.a, bi))

    failed: set[int] = set()

    for bi, bond in enumerate(bonds):
        if declared_orders[bi] == AROMATIC:
            if not (atoms[bond.a].aromatic and atoms[bond.b].aromatic):
                failed.update((bond.a, bond.b))

    edge_list = [(b.a, b.b) for b in bonds]
    for cycle in rings.smallest_rings(n, edge_list):
        if all(atoms[i].aromatic for i in cycle) and not 5 <= len(cycle) <= 7:
            failed.update(cycle)

    fixed_multiple = [False] * n
    for bi, bond in enumerate(bonds):
        if declared_orders[bi] in (DOUBLE, TRIPLE):
            fixed_multiple[bond.a] = True
            fixed_multiple[bond.b] = True

    pi_atoms = {
        i for i, atom in enumerate(atoms)
        if atom.aromatic and needs_pi_bond(atom, len(adj[i]), fixed_multiple[i])
    }
    pi_graph = nx.Graph()
    pi_graph.add_nodes_from(pi_atoms)
    pi_edges: dict[tuple[int, int], int] = {}
    for bi, bond in enumerate(bonds):
        if declared_orders[bi] == AROMATIC and bond.a in pi_atoms and bond.b in pi_atoms:
            pi_graph.add_edge(bond.a, bond.b)
            pi_edges[(min(bond.a, bond.b), max(bond.a, bond.b))] = bi

    matching = nx.max_weight_matching(pi_graph, maxcardinality=True)
    matched: set[int] = set()
    for u, v in matching:
        matched.update((u, v))
        orders[pi_edges[(min(u, v), max(u, v))]] = 2
    failed.update(pi_atoms - matched)

    if failed:
        # propagate failure to whole components
        comp_id = [-1] * n
        cid = 0
        for start in range(n):
            if comp_id[start] != -1:
                continue
            stack = [start]
            comp_id[start] = cid
            while stack:
                cur = stack.pop()
                for nbr, _ in adj[cur]:
                    if comp_id[nbr] == -1:
                        comp_id[nbr] = cid
                        stack.append(nbr)
            cid += 1
        bad_components = {comp_id[i] for i in failed}
        for bi, bond in enumerate(bonds):
            if comp_id[bond.a] in bad_components:
                orders[bi] = None
    return orders, sorted(failed)


_ORDER_NAME = {1: SINGLE, 2: DOUBLE, 3: TRIPLE}


def kekulize(mol: Molecule) -> Molecule:
    """Return a copy with explicit alternating orders and aromatic flags cleared."""
    if mol.kek_failed_atoms:
        raise KekulizationError(
            f"no alternating bond assignment for atoms {list(mol.kek_failed_atoms)}"
        )
    atoms = [
        Atom(a.element, a.charge, a.isotope, a.explicit_hydrogens, False, a.chirality)
        for a in mol.atoms
    ]
    bonds = []
    for bi, bond in enumerate(mol.bonds):
        order = mol.kekulized_orders[bi]
        assert order is not None
        bonds.append(Bond(bond.a, bond.b, _ORDER_NAME[order], bond.direction))
    return Molecule(
        atoms, bonds, mol.implicit_h, mol.ring_membership,
        mol.kekulized_orders, (),
        list(mol.chiral_orders.items()), mol.stereo_bonds, source=None,
    )
