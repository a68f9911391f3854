"""SMILES parsing, validation, kekulization and canonicalization."""

from __future__ import annotations

from retrobench.smiles.canon import canonical_ranks, canonical_smiles
from retrobench.smiles.graph import (
    AROMATIC, AROMATIC_ACYCLIC, Atom, Bond, CLOCKWISE, COUNTERCLOCKWISE,
    DOUBLE, InvalidMoleculeError, KEKULIZATION_FAILED, KekulizationError,
    Molecule, PARSE_ERROR, SINGLE, SmilesParseError, StereoBond, TRIPLE,
    VALENCE_EXCEEDED, ValidityFailure, ValidityReport,
)
from retrobench.smiles.kekulize import kekulize
from retrobench.smiles.parser import parse_smiles
from retrobench.smiles.valence import ValenceTable, check_validity, load_valence_table

canonicalize = canonical_smiles


def split_fragments(text: str) -> list[Molecule]:
    """One Molecule per dot-separated connected group, in source order."""
    mol = parse_smiles(text)
    return [mol.submolecule(comp) for comp in mol.components()]


def largest_fragment(mols: list[Molecule]) -> Molecule:
    """The fragment maximizing (heavy atoms, molecular weight, canonical
    SMILES), with the later keys only computed to break ties."""
    if not mols:
        raise ValueError("largest_fragment of an empty fragment list")
    best = mols[0]
    best_key: tuple = (best.heavy_atom_count(), best.molecular_weight())
    best_canon: str | None = None
    for mol in mols[1:]:
        key = (mol.heavy_atom_count(), mol.molecular_weight())
        if key > best_key:
            best, best_key, best_canon = mol, key, None
        elif key == best_key:
            if best_canon is None:
                best_canon = canonical_smiles(best)
            candidate = canonical_smiles(mol)
            if candidate > best_canon:
                best, best_key, best_canon = mol, key, candidate
    return best


__all__ = [
    "AROMATIC", "AROMATIC_ACYCLIC", "Atom", "Bond", "CLOCKWISE",
    "COUNTERCLOCKWISE", "DOUBLE", "InvalidMoleculeError",
    "KEKULIZATION_FAILED", "KekulizationError", "Molecule", "PARSE_ERROR",
    "SINGLE", "SmilesParseError", "StereoBond", "TRIPLE", "VALENCE_EXCEEDED",
    "ValenceTable", "ValidityFailure", "ValidityReport", "canonical_ranks",
    "canonical_smiles", "canonicalize", "check_validity", "kekulize",
    "largest_fragment", "load_valence_table", "parse_smiles",
    "split_fragments",
]
