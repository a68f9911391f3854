"""Molecular graph types: atoms, bonds, molecules, validity reports.

Molecules are immutable after construction; every operation on them is a
pure function, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from retrobench import elements

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"

BOND_ORDER_VALUE = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3}

UP = "up"
DOWN = "down"

CLOCKWISE = "@@"
COUNTERCLOCKWISE = "@"

# ValidityReport failure reasons
VALENCE_EXCEEDED = "valence exceeded"
KEKULIZATION_FAILED = "kekulization failed"
AROMATIC_ACYCLIC = "aromatic atom acyclic"
PARSE_ERROR = "parse error"

# Sentinel marking the implicit-hydrogen slot in a chiral neighbor ordering.
H_SLOT = "H"


class SmilesParseError(ValueError):
    """Raised for syntactically malformed SMILES; carries the position."""

    def __init__(self, message: str, position: int = -1):
        self.position = position
        if position >= 0:
            message = f"{message} (position {position})"
        super().__init__(message)


class KekulizationError(ValueError):
    """Raised when an aromatic system admits no alternating bond assignment."""


class InvalidMoleculeError(ValueError):
    """Raised when an operation requires a chemically valid molecule."""


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    isotope: Optional[int] = None
    explicit_hydrogens: Optional[int] = None  # bracket H count; None = organic subset
    aromatic: bool = False
    chirality: Optional[str] = None  # CLOCKWISE ("@@") or COUNTERCLOCKWISE ("@")


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str = SINGLE
    direction: Optional[str] = None  # UP ("/") or DOWN ("\"), oriented a -> b

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class StereoBond:
    """Cis/trans configuration of one double bond.

    ``same_side`` records whether reference substituents ``ref_a`` (bonded
    to ``a``) and ``ref_b`` (bonded to ``b``) lie on the same side of the
    ``a=b`` axis.
    """

    a: int
    b: int
    ref_a: int
    ref_b: int
    same_side: bool


@dataclass(frozen=True)
class ValidityFailure:
    atom_index: Optional[int]
    reason: str


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    failures: tuple[ValidityFailure, ...] = ()

    @staticmethod
    def ok() -> "ValidityReport":
        return ValidityReport(valid=True)

    @staticmethod
    def parse_failure() -> "ValidityReport":
        return ValidityReport(valid=False, failures=(ValidityFailure(None, PARSE_ERROR),))


ChiralOrder = tuple[Union[int, str], ...]


class Molecule:
    """Immutable molecular graph plus derived annotations.

    Built by the parser (or by :func:`retrobench.smiles.kekulize`); the
    constructor takes fully computed annotations and performs no chemistry.
    """

    __slots__ = (
        "atoms", "bonds", "implicit_h", "ring_membership",
        "kekulized_orders", "kek_failed_atoms",
        "chiral_orders", "stereo_bonds", "source", "_adj",
    )

    def __init__(
        self,
        atoms: Iterable[Atom],
        bonds: Iterable[Bond],
        implicit_h: Iterable[int],
        ring_membership: Iterable[bool],
        kekulized_orders: Iterable[Optional[int]],
        kek_failed_atoms: Iterable[int] = (),
        chiral_orders: Iterable[tuple[int, ChiralOrder]] = (),
        stereo_bonds: Iterable[StereoBond] = (),
        source: Optional[str] = None,
    ):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.implicit_h: tuple[int, ...] = tuple(implicit_h)
        self.ring_membership: tuple[bool, ...] = tuple(ring_membership)
        # Per-bond integer order after kekulization; None for bonds inside a
        # component whose aromatic system could not be kekulized.
        self.kekulized_orders: tuple[Optional[int], ...] = tuple(kekulized_orders)
        self.kek_failed_atoms: tuple[int, ...] = tuple(kek_failed_atoms)
        self.chiral_orders: dict[int, ChiralOrder] = dict(chiral_orders)
        self.stereo_bonds: tuple[StereoBond, ...] = tuple(stereo_bonds)
        self.source = source
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bi, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, bi))
            adj[bond.b].append((bond.a, bi))
        self._adj: tuple[tuple[tuple[int, int], ...], ...] = tuple(
            tuple(entries) for entries in adj
        )

    # -- basic graph access -------------------------------------------------

    def __len__(self) -> int:
        return len(self.atoms)

    def neighbors(self, idx: int) -> tuple[tuple[int, int], ...]:
        """(neighbor index, bond index) pairs for one atom."""
        return self._adj[idx]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def bond_between(self, i: int, j: int) -> Optional[Bond]:
        for nbr, bi in self._adj[i]:
            if nbr == j:
                return self.bonds[bi]
        return None

    def total_h(self, idx: int) -> int:
        atom = self.atoms[idx]
        if atom.explicit_hydrogens is not None:
            return atom.explicit_hydrogens
        return self.implicit_h[idx]

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element != "H")

    def molecular_weight(self) -> float:
        total = 0.0
        for i, atom in enumerate(self.atoms):
            if atom.isotope is not None:
                total += float(atom.isotope)
            else:
                total += elements.atomic_weight(atom.element)
            total += self.total_h(i) * elements.atomic_weight("H")
        return total

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, in order of smallest member."""
        seen = [False] * len(self.atoms)
        out: list[list[int]] = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                cur = stack.pop()
                comp.append(cur)
                for nbr, _ in self._adj[cur]:
                    if not seen[nbr]:
                        seen[nbr] = True
                        stack.append(nbr)
            out.append(sorted(comp))
        return out

    # -- derived molecules ---------------------------------------------------

    def permute(self, perm: list[int]) -> "Molecule":
        """Relabel atoms so old index i becomes perm[i]. Pure relabeling:
        all annotations are carried over, nothing is recomputed."""
        n = len(self.atoms)
        if sorted(perm) != list(range(n)):
            raise ValueError("perm must be a permutation of atom indices")
        atoms = [self.atoms[0]] * n
        implicit = [0] * n
        ring = [False] * n
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
            implicit[new] = self.implicit_h[old]
            ring[new] = self.ring_membership[old]
        relabeled = []
        for bond in self.bonds:
            relabeled.append(Bond(perm[bond.a], perm[bond.b], bond.order, bond.direction))
        order = sorted(range(len(relabeled)), key=lambda bi: (min(relabeled[bi].a, relabeled[bi].b),
                                                              max(relabeled[bi].a, relabeled[bi].b)))
        bonds = [relabeled[bi] for bi in order]
        kek = [self.kekulized_orders[bi] for bi in order]
        chiral = []
        for idx, seq in self.chiral_orders.items():
            chiral.append((perm[idx], tuple(e if e == H_SLOT else perm[e] for e in seq)))
        stereo = [
            StereoBond(perm[s.a], perm[s.b], perm[s.ref_a], perm[s.ref_b], s.same_side)
            for s in self.stereo_bonds
        ]
        return Molecule(
            atoms, bonds, implicit, ring, kek,
            tuple(perm[i] for i in self.kek_failed_atoms),
            chiral, stereo, source=None,
        )

    def without_stereo(self) -> "Molecule":
        """Stereo-agnostic projection: chirality tags and bond directions dropped."""
        atoms = [
            Atom(a.element, a.charge, a.isotope, a.explicit_hydrogens, a.aromatic, None)
            for a in self.atoms
        ]
        bonds = [Bond(b.a, b.b, b.order, None) for b in self.bonds]
        return Molecule(
            atoms, bonds, self.implicit_h, self.ring_membership,
            self.kekulized_orders, self.kek_failed_atoms,
            (), (), source=self.source,
        )

    def submolecule(self, indices: list[int]) -> "Molecule":
        """Extract the induced submolecule on ``indices``.

        Stereo annotations referencing atoms outside the selection are
        dropped (a partial neighborhood cannot carry them); chirality tags
        on such atoms are cleared to match."""
        index_of = {old: new for new, old in enumerate(indices)}
        implicit = [self.implicit_h[i] for i in indices]
        ring = [self.ring_membership[i] for i in indices]
        bonds, kek = [], []
        for bi, bond in enumerate(self.bonds):
            if bond.a in index_of and bond.b in index_of:
                bonds.append(Bond(index_of[bond.a], index_of[bond.b], bond.order, bond.direction))
                kek.append(self.kekulized_orders[bi])
        chiral = []
        broken_tags: set[int] = set()
        for idx, seq in self.chiral_orders.items():
            if idx not in index_of:
                continue
            if all(e == H_SLOT or e in index_of for e in seq):
                chiral.append((index_of[idx],
                               tuple(e if e == H_SLOT else index_of[e] for e in seq)))
            else:
                broken_tags.add(index_of[idx])
        atoms = []
        for new, old in enumerate(indices):
            atom = self.atoms[old]
            if new in broken_tags:
                atom = Atom(atom.element, atom.charge, atom.isotope,
                            atom.explicit_hydrogens, atom.aromatic, None)
            atoms.append(atom)
        stereo = [
            StereoBond(index_of[s.a], index_of[s.b], index_of[s.ref_a],
                       index_of[s.ref_b], s.same_side)
            for s in self.stereo_bonds
            if all(x in index_of for x in (s.a, s.b, s.ref_a, s.ref_b))
        ]
        failed = tuple(index_of[i] for i in self.kek_failed_atoms if i in index_of)
        return Molecule(atoms, bonds, implicit, ring, kek, failed, chiral, stereo)
