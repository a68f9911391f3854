"""Reaction records, canonical reaction keys, grouping and overlap audits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from retrobench.smiles import (
    Molecule, SmilesParseError, canonical_smiles, check_validity, parse_smiles,
)

WITH_CONDITIONS = "with_conditions"
WITHOUT_CONDITIONS = "without_conditions"

ROLE_REACTANTS = "reactants"
ROLE_CONDITIONS = "conditions"
ROLE_PRODUCTS = "products"


class ReactionParseError(ValueError):
    pass


@dataclass(frozen=True)
class FragmentIssue:
    """A fragment that parsed but failed the chemical validity check."""

    role: str
    index: int
    raw: str
    reasons: tuple[str, ...]


@dataclass(frozen=True)
class ReactionRecord:
    reactants: tuple[Molecule, ...]
    conditions: tuple[Molecule, ...]
    products: tuple[Molecule, ...]
    yield_percent: Optional[float] = None
    source: str = ""
    record_id: str = ""
    invalid_fragments: tuple[FragmentIssue, ...] = ()

    def __post_init__(self):
        if not self.reactants:
            raise ValueError("reaction record needs at least one reactant")
        if not self.products:
            raise ValueError("reaction record needs at least one product")

    def molecules(self, role: str) -> tuple[Molecule, ...]:
        return getattr(self, role)


@dataclass(frozen=True)
class ReactionKey:
    key: str
    mode: str


def parse_reaction(text: str, source: str = "", record_id: str = "") -> ReactionRecord:
    """Parse "R>C>P" (C may be empty) or "R>>P" into a record.

    Fragments that parse but violate chemical validity are retained (the
    molecule is kept) and recorded in ``invalid_fragments`` so validity
    metrics can see them; syntactically unparseable fragments raise.
    """
    segments = text.split(">")
    if len(segments) != 3:
        raise ReactionParseError(
            f"expected 3 '>'-separated segments, got {len(segments)}: {text!r}")
    if not segments[0]:
        raise ReactionParseError(f"empty reactant segment: {text!r}")
    if not segments[2]:
        raise ReactionParseError(f"empty product segment: {text!r}")

    roles = (ROLE_REACTANTS, ROLE_CONDITIONS, ROLE_PRODUCTS)
    parsed: dict[str, list[Molecule]] = {}
    issues: list[FragmentIssue] = []
    for role, segment in zip(roles, segments):
        mols: list[Molecule] = []
        if segment:
            for index, fragment in enumerate(segment.split(".")):
                try:
                    mol = parse_smiles(fragment)
                except SmilesParseError as exc:
                    raise ReactionParseError(
                        f"{role} fragment {index} ({fragment!r}): {exc}") from exc
                report = check_validity(mol)
                if not report.valid:
                    issues.append(FragmentIssue(
                        role, index, fragment,
                        tuple(sorted({f.reason for f in report.failures})),
                    ))
                mols.append(mol)
        parsed[role] = mols

    return ReactionRecord(
        reactants=tuple(parsed[ROLE_REACTANTS]),
        conditions=tuple(parsed[ROLE_CONDITIONS]),
        products=tuple(parsed[ROLE_PRODUCTS]),
        source=source,
        record_id=record_id,
        invalid_fragments=tuple(issues),
    )


def _sorted_canonical(mols: tuple[Molecule, ...], stereo: bool) -> str:
    return ".".join(sorted(canonical_smiles(m, stereo=stereo) for m in mols))


def canonical_key(rec: ReactionRecord, mode: str = WITH_CONDITIONS,
                  stereo: bool = True) -> ReactionKey:
    """Order-invariant reaction key; raises for invalid molecules."""
    if mode not in (WITH_CONDITIONS, WITHOUT_CONDITIONS):
        raise ValueError(f"unknown key mode {mode!r}")
    middle = ""
    if mode == WITH_CONDITIONS:
        middle = _sorted_canonical(rec.conditions, stereo)
    key = ">".join((
        _sorted_canonical(rec.reactants, stereo),
        middle,
        _sorted_canonical(rec.products, stereo),
    ))
    return ReactionKey(key=key, mode=mode)


def product_key(rec: ReactionRecord, stereo: bool = True) -> str:
    return _sorted_canonical(rec.products, stereo)


def group_by_product(records: list[ReactionRecord],
                     stereo: bool = True) -> dict[str, list[ReactionRecord]]:
    """Map sorted-canonical-product key -> records sharing that product."""
    groups: dict[str, list[ReactionRecord]] = {}
    for rec in records:
        groups.setdefault(product_key(rec, stereo), []).append(rec)
    return groups


@dataclass(frozen=True)
class OverlapReport:
    count: int
    matching_keys: tuple[str, ...]
    mode: str
    distinct_a: int = 0
    distinct_b: int = 0
    note: str = field(default="keys use canonicalized SMILES")


def overlap(a: list[ReactionRecord], b: list[ReactionRecord],
            mode: str = WITHOUT_CONDITIONS, stereo: bool = True) -> OverlapReport:
    """Distinct-key intersection between two corpora."""
    keys_a = {canonical_key(r, mode, stereo).key for r in a}
    keys_b = {canonical_key(r, mode, stereo).key for r in b}
    matching = sorted(keys_a & keys_b)
    return OverlapReport(
        count=len(matching), matching_keys=tuple(matching), mode=mode,
        distinct_a=len(keys_a), distinct_b=len(keys_b),
    )


def reaction_text(rec: ReactionRecord, stereo: bool = True) -> str:
    """R>C>P serialization using canonical fragment SMILES (raw source text
    for fragments that are not valid)."""
    def tostr(mol: Molecule) -> str:
        try:
            return canonical_smiles(mol, stereo=stereo)
        except ValueError:
            return mol.source or ""

    return ">".join(
        ".".join(tostr(m) for m in part)
        for part in (rec.reactants, rec.conditions, rec.products)
    )
