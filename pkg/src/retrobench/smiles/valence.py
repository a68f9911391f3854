"""Valence checking against the shipped (overridable) allowed-valence table."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from retrobench.smiles.graph import (
    AROMATIC_ACYCLIC, KEKULIZATION_FAILED, Molecule, VALENCE_EXCEEDED,
    ValidityFailure, ValidityReport,
)

_DEFAULT_TABLE_PATH = Path(__file__).resolve().parent.parent / "data" / "valence.toml"


@dataclass(frozen=True)
class ValenceTable:
    allowed: dict[str, tuple[int, ...]]
    charge_adjusted: frozenset[str]
    version: int

    def max_allowed(self, element: str, charge: int) -> Optional[int]:
        values = self.allowed.get(element)
        if values is None:
            return None
        if element in self.charge_adjusted:
            return max(values) + charge
        return max(values)


def load_valence_table(path: Optional[Path] = None) -> ValenceTable:
    with open(path or _DEFAULT_TABLE_PATH, "rb") as fh:
        raw = tomllib.load(fh)
    allowed = {el: tuple(vals) for el, vals in raw["allowed"].items()}
    return ValenceTable(
        allowed=allowed,
        charge_adjusted=frozenset(raw.get("charge_adjusted", [])),
        version=int(raw.get("version", 0)),
    )


_default_table: Optional[ValenceTable] = None


def default_table() -> ValenceTable:
    global _default_table
    if _default_table is None:
        _default_table = load_valence_table()
    return _default_table


def check_validity(mol: Molecule, table: Optional[ValenceTable] = None) -> ValidityReport:
    """Report kekulization, aromatic-ring and valence failures.

    Never raises: failures land in the report. Implicit hydrogens act as
    the slack variable for organic-subset atoms; bracket H counts are
    binding.
    """
    table = table or default_table()
    failures: list[ValidityFailure] = []

    for idx in mol.kek_failed_atoms:
        failures.append(ValidityFailure(idx, KEKULIZATION_FAILED))
    failed_set = set(mol.kek_failed_atoms)

    for idx, atom in enumerate(mol.atoms):
        if atom.aromatic and not mol.ring_membership[idx]:
            failures.append(ValidityFailure(idx, AROMATIC_ACYCLIC))

    for idx, atom in enumerate(mol.atoms):
        if idx in failed_set:
            continue  # no reliable bond orders; kekulization already reported
        limit = table.max_allowed(atom.element, atom.charge)
        if limit is None:
            continue
        total = mol.total_h(idx)
        degraded = False
        for _, bi in mol.neighbors(idx):
            order = mol.kekulized_orders[bi]
            if order is None:
                degraded = True
                break
            total += order
        if not degraded and total > limit:
            failures.append(ValidityFailure(idx, VALENCE_EXCEEDED))

    failures.sort(key=lambda f: (f.atom_index if f.atom_index is not None else -1, f.reason))
    return ValidityReport(valid=not failures, failures=tuple(failures))
