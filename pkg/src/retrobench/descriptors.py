"""Molecular descriptors used to fill molecule-design prompts.

The registry ships 24 descriptors (the benchmark needs at least 10 and the
design-prompt generator draws up to 20 distinct ones). All descriptors are
invariant under atom reordering; integer-valued ones return exact ints.

Balaban's distance-sum connectivity index follows the 1982 definition
J = q/(mu+1) * sum over edges (s_i * s_j)^(-1/2), where s is the row sum
of the topological distance matrix on the hydrogen-suppressed graph, q the
edge count and mu the cyclomatic number. For disconnected molecules it is
computed on the largest fragment (logged, since the restriction is easy to
trip over).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

from retrobench import elements
from retrobench.smiles import Molecule, largest_fragment
from retrobench.smiles.graph import DOUBLE, SINGLE, TRIPLE
from retrobench.smiles.rings import ring_edge_flags, smallest_rings

log = logging.getLogger(__name__)

Number = Union[int, float]

HALOGENS = ("F", "Cl", "Br", "I")


@dataclass(frozen=True)
class Descriptor:
    identifier: str
    name: str
    unit: str
    compute: Callable[[Molecule], Number]


class UnknownDescriptorError(KeyError):
    pass


class DescriptorRegistry:
    def __init__(self) -> None:
        self._entries: dict[str, Descriptor] = {}

    def register(self, descriptor: Descriptor) -> None:
        if descriptor.identifier in self._entries:
            raise ValueError(f"descriptor {descriptor.identifier!r} already registered")
        self._entries[descriptor.identifier] = descriptor

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, identifier: str) -> bool:
        return identifier in self._entries

    def get(self, identifier: str) -> Descriptor:
        try:
            return self._entries[identifier]
        except KeyError:
            raise UnknownDescriptorError(identifier) from None

    def compute(self, mol: Molecule, identifier: str) -> Number:
        return self.get(identifier).compute(mol)

    def list_descriptors(self) -> list[Descriptor]:
        """All entries in stable identifier-sorted order."""
        return [self._entries[k] for k in sorted(self._entries)]

    def identifiers(self) -> list[str]:
        return sorted(self._entries)

    def export_text(self) -> str:
        """Tab-separated (identifier, display name, unit) listing for
        prompt-template authors."""
        lines = ["# descriptor registry\t\t", "# identifier\tname\tunit"]
        for d in self.list_descriptors():
            lines.append(f"{d.identifier}\t{d.name}\t{d.unit}")
        return "\n".join(lines) + "\n"


# -- descriptor implementations ---------------------------------------------


def _heavy_graph(mol: Molecule) -> tuple[list[int], list[tuple[int, int]]]:
    heavy = [i for i, a in enumerate(mol.atoms) if a.element != "H"]
    index = {i: k for k, i in enumerate(heavy)}
    edges = [
        (index[b.a], index[b.b]) for b in mol.bonds
        if b.a in index and b.b in index
    ]
    return heavy, edges


def molecular_weight(mol: Molecule) -> float:
    return mol.molecular_weight()


def heavy_atom_count(mol: Molecule) -> int:
    return mol.heavy_atom_count()


def valence_electron_count(mol: Molecule) -> int:
    total = 0
    for i, atom in enumerate(mol.atoms):
        total += elements.valence_electrons(atom.element)
        total += mol.total_h(i)
    return total - sum(a.charge for a in mol.atoms)


def nh_oh_count(mol: Molecule) -> int:
    return sum(
        mol.total_h(i) for i, a in enumerate(mol.atoms) if a.element in ("N", "O")
    )


def n_o_count(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.element in ("N", "O"))


def ring_count(mol: Molecule) -> int:
    """Cyclomatic number: bonds - atoms + components."""
    return len(mol.bonds) - len(mol.atoms) + len(mol.components())


def rotatable_bond_count(mol: Molecule) -> int:
    heavy_degree = [0] * len(mol.atoms)
    for bond in mol.bonds:
        if mol.atoms[bond.a].element != "H" and mol.atoms[bond.b].element != "H":
            heavy_degree[bond.a] += 1
            heavy_degree[bond.b] += 1
    in_ring = ring_edge_flags(len(mol.atoms), [(b.a, b.b) for b in mol.bonds])

    def is_amide_cn(a: int, b: int) -> bool:
        for c, n in ((a, b), (b, a)):
            if mol.atoms[c].element == "C" and mol.atoms[n].element == "N":
                for nbr, bi in mol.neighbors(c):
                    if mol.bonds[bi].order == DOUBLE and mol.atoms[nbr].element == "O":
                        return True
        return False

    count = 0
    for bi, bond in enumerate(mol.bonds):
        if bond.order != SINGLE or in_ring[bi]:
            continue
        if heavy_degree[bond.a] < 2 or heavy_degree[bond.b] < 2:
            continue
        if is_amide_cn(bond.a, bond.b):
            continue
        count += 1
    return count


def halogen_count(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.element in HALOGENS)


def aromatic_ring_count(mol: Molecule) -> int:
    rings = smallest_rings(len(mol.atoms), [(b.a, b.b) for b in mol.bonds])
    return sum(1 for ring in rings if all(mol.atoms[i].aromatic for i in ring))


def _distance_rows(n: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    rows = []
    for start in range(n):
        dist = [-1] * n
        dist[start] = 0
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if dist[v] == -1:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        rows.append(dist)
    return rows


def balaban_j(mol: Molecule) -> float:
    comps = mol.components()
    if len(comps) > 1:
        log.warning("balaban_j: disconnected molecule; using largest fragment")
        mol = largest_fragment([mol.submolecule(c) for c in comps])
    heavy, edges = _heavy_graph(mol)
    n = len(heavy)
    if n <= 1 or not edges:
        return 0.0
    rows = _distance_rows(n, edges)
    s = [sum(row) for row in rows]
    q = len(edges)
    mu = q - n + 1
    total = sum(1.0 / math.sqrt(s[a] * s[b]) for a, b in edges)
    return q / (mu + 1.0) * total


def wiener_index(mol: Molecule) -> int:
    comps = mol.components()
    if len(comps) > 1:
        log.warning("wiener_index: disconnected molecule; using largest fragment")
        mol = largest_fragment([mol.submolecule(c) for c in comps])
    heavy, edges = _heavy_graph(mol)
    rows = _distance_rows(len(heavy), edges)
    return sum(sum(row) for row in rows) // 2


def _element_counter(symbol: str) -> Callable[[Molecule], int]:
    def count(mol: Molecule) -> int:
        return sum(1 for a in mol.atoms if a.element == symbol)
    return count


def _bond_counter(order: str) -> Callable[[Molecule], int]:
    def count(mol: Molecule) -> int:
        return sum(1 for b in mol.bonds if b.order == order)
    return count


def aromatic_atom_count(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.aromatic)


def bond_count(mol: Molecule) -> int:
    return len(mol.bonds)


def net_charge(mol: Molecule) -> int:
    return sum(a.charge for a in mol.atoms)


def build_default_registry() -> DescriptorRegistry:
    reg = DescriptorRegistry()
    entries = [
        Descriptor("molecular_weight", "Molecular weight", "g/mol", molecular_weight),
        Descriptor("heavy_atom_count", "Number of heavy atoms", "count", heavy_atom_count),
        Descriptor("valence_electron_count", "Valence electron count", "count",
                   valence_electron_count),
        Descriptor("nh_oh_count", "Number of NHs or OHs", "count", nh_oh_count),
        Descriptor("n_o_count", "Number of nitrogen and oxygen atoms", "count", n_o_count),
        Descriptor("ring_count", "Ring count (cyclomatic number)", "count", ring_count),
        Descriptor("rotatable_bond_count", "Number of rotatable bonds", "count",
                   rotatable_bond_count),
        Descriptor("halogen_count", "Number of halogen atoms", "count", halogen_count),
        Descriptor("aromatic_ring_count", "Number of aromatic rings", "count",
                   aromatic_ring_count),
        Descriptor("balaban_j", "Balaban J index", "dimensionless", balaban_j),
        Descriptor("carbon_count", "Number of carbon atoms", "count", _element_counter("C")),
        Descriptor("nitrogen_count", "Number of nitrogen atoms", "count",
                   _element_counter("N")),
        Descriptor("oxygen_count", "Number of oxygen atoms", "count", _element_counter("O")),
        Descriptor("sulfur_count", "Number of sulfur atoms", "count", _element_counter("S")),
        Descriptor("fluorine_count", "Number of fluorine atoms", "count",
                   _element_counter("F")),
        Descriptor("chlorine_count", "Number of chlorine atoms", "count",
                   _element_counter("Cl")),
        Descriptor("bromine_count", "Number of bromine atoms", "count",
                   _element_counter("Br")),
        Descriptor("iodine_count", "Number of iodine atoms", "count", _element_counter("I")),
        Descriptor("double_bond_count", "Number of explicit double bonds", "count",
                   _bond_counter(DOUBLE)),
        Descriptor("triple_bond_count", "Number of triple bonds", "count",
                   _bond_counter(TRIPLE)),
        Descriptor("aromatic_atom_count", "Number of aromatic atoms", "count",
                   aromatic_atom_count),
        Descriptor("bond_count", "Number of bonds", "count", bond_count),
        Descriptor("wiener_index", "Wiener index", "dimensionless", wiener_index),
        Descriptor("net_charge", "Net formal charge", "charge", net_charge),
    ]
    for entry in entries:
        reg.register(entry)
    return reg
