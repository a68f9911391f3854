"""SMILES parser producing annotated molecular graphs.

Grammar covered: organic-subset atoms (B, C, N, O, P, S, F, Cl, Br, I and
the aromatic lowercase forms b, c, n, o, p, s), bracket atoms with
isotope / chirality / H-count / charge, bond symbols ``- = # : / \\``,
branches, ring closures including ``%nn``, and dot-separated fragments.

Reaction atom maps (``[CH3:1]``), wildcards (``*``) and quadruple bonds
(``$``) are rejected as parse errors rather than silently dropped.

Parsing annotates the graph completely: ring membership, kekulized bond
orders, implicit hydrogen counts, tetrahedral neighbor orderings and
double-bond cis/trans configurations. Unkekulizable aromatic systems do
not fail the parse; they are recorded on the molecule so the validity
report can surface them.
"""

from __future__ import annotations

from typing import Optional

from retrobench.elements import (
    AROMATIC_ELEMENTS, ELEMENT_SYMBOLS, IMPLICIT_H_VALENCES, ORGANIC_SUBSET,
)
from retrobench.smiles import rings
from retrobench.smiles.kekulize import assign_pi_orders
from retrobench.smiles.graph import (
    AROMATIC, CLOCKWISE, COUNTERCLOCKWISE, DOUBLE, DOWN, H_SLOT, Molecule,
    SINGLE, SmilesParseError, StereoBond, TRIPLE, UP, Atom, Bond,
)

_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}
_AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}
_AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as"}
_ASCII_DIGITS = "0123456789"


class _RingSlot:
    """Placeholder in a chiral neighbor ordering for a not-yet-closed ring."""

    __slots__ = ("partner",)

    def __init__(self) -> None:
        self.partner: Optional[int] = None


class _PendingBond:
    __slots__ = ("order", "direction", "position")

    def __init__(self, order: Optional[str], direction: Optional[str], position: int):
        self.order = order
        self.direction = direction
        self.position = position


def _parse_bracket(text: str, start: int) -> tuple[Atom, int]:
    """Parse a bracket atom starting at ``text[start] == '['``.

    Returns the atom and the index just past the closing bracket.
    """
    i = start + 1
    n = len(text)

    isotope = None
    digits = ""
    while i < n and text[i] in _ASCII_DIGITS:
        digits += text[i]
        i += 1
    if digits:
        if len(digits) > 3:
            raise SmilesParseError("isotope number too large", start + 1)
        isotope = int(digits)

    if i >= n:
        raise SmilesParseError("unterminated bracket atom", start)
    aromatic = False
    if text[i] == "*":
        raise SmilesParseError("wildcard atoms are unsupported", i)
    if text[i].isupper():
        if i + 1 < n and text[i + 1].islower() and text[i:i + 2] in ELEMENT_SYMBOLS:
            element = text[i:i + 2]
            i += 2
        elif text[i] in ELEMENT_SYMBOLS:
            element = text[i]
            i += 1
        else:
            raise SmilesParseError(f"unknown element {text[i]!r}", i)
    elif text[i].islower():
        if text[i:i + 2] in _AROMATIC_BRACKET:
            element = text[i:i + 2].capitalize()
            i += 2
        elif text[i] in _AROMATIC_BRACKET:
            element = text[i].upper()
            i += 1
        else:
            raise SmilesParseError(f"unknown aromatic element {text[i]!r}", i)
        aromatic = True
    else:
        raise SmilesParseError("expected element symbol in bracket atom", i)

    chirality = None
    if i < n and text[i] == "@":
        if i + 1 < n and text[i + 1] == "@":
            chirality = CLOCKWISE
            i += 2
        else:
            chirality = COUNTERCLOCKWISE
            i += 1
        if i < n and text[i].isalpha() and text[i] not in ("H",):
            raise SmilesParseError("extended chirality classes are unsupported", i)

    hydrogens = 0
    if i < n and text[i] == "H":
        i += 1
        if i < n and text[i] in _ASCII_DIGITS:
            hydrogens = int(text[i])
            i += 1
        else:
            hydrogens = 1

    charge = 0
    if i < n and text[i] in "+-":
        sign = 1 if text[i] == "+" else -1
        symbol = text[i]
        i += 1
        if i < n and text[i] in _ASCII_DIGITS:
            charge = sign * int(text[i])
            i += 1
        else:
            charge = sign
            while i < n and text[i] == symbol:
                charge += sign
                i += 1
        if not -4 <= charge <= 4:
            raise SmilesParseError("charge out of range [-4, +4]", start)

    if i < n and text[i] == ":":
        raise SmilesParseError("reaction atom maps are unsupported", i)
    if i >= n or text[i] != "]":
        raise SmilesParseError("unexpected character in bracket atom", i if i < n else start)

    atom = Atom(
        element=element, charge=charge, isotope=isotope,
        explicit_hydrogens=hydrogens, aromatic=aromatic, chirality=chirality,
    )
    return atom, i + 1


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string (possibly multi-fragment) into a Molecule."""
    if not text:
        raise SmilesParseError("empty SMILES", 0)

    atoms: list[Atom] = []
    bond_ends: list[tuple[int, int]] = []
    bond_orders: list[Optional[str]] = []  # None = unspecified
    bond_dirs: list[Optional[str]] = []
    bond_pairs: set[tuple[int, int]] = set()
    norder: list[list] = []  # per atom: neighbor entries in encounter order
    has_from: list[bool] = []  # whether the atom was bonded from a predecessor

    prev: Optional[int] = None
    pending: Optional[_PendingBond] = None
    branch_stack: list[tuple[Optional[int], int]] = []
    ring_open: dict[int, tuple[int, Optional[str], Optional[str], int, _RingSlot]] = {}
    after_dot = False
    just_opened = False  # '(' seen; next structural token must be bond/atom

    def add_bond(a: int, b: int, order: Optional[str], direction: Optional[str],
                 pos: int) -> None:
        if a == b:
            raise SmilesParseError("bond joins an atom to itself", pos)
        key = (min(a, b), max(a, b))
        if key in bond_pairs:
            raise SmilesParseError("duplicate bond between the same atom pair", pos)
        bond_pairs.add(key)
        bond_ends.append((a, b))
        bond_orders.append(order)
        bond_dirs.append(direction)

    def new_atom(atom: Atom, pos: int) -> None:
        nonlocal prev, pending, after_dot, just_opened
        just_opened = False
        idx = len(atoms)
        atoms.append(atom)
        norder.append([])
        has_from.append(prev is not None)
        if prev is not None:
            order = pending.order if pending else None
            direction = pending.direction if pending else None
            add_bond(prev, idx, order, direction, pos)
            norder[prev].append(idx)
            norder[idx].append(prev)
        elif pending is not None:
            raise SmilesParseError("bond symbol with no preceding atom", pending.position)
        pending = None
        prev = idx
        after_dot = False

    def ring_digit(num: int, pos: int) -> None:
        nonlocal prev, pending
        if prev is None:
            raise SmilesParseError("ring closure with no preceding atom", pos)
        if just_opened:
            raise SmilesParseError("branch must start with an atom", pos)
        order = pending.order if pending else None
        direction = pending.direction if pending else None
        pending = None
        if num in ring_open:
            other, o_order, o_dir, o_pos, slot = ring_open.pop(num)
            if other == prev:
                raise SmilesParseError("ring closure on the same atom", pos)
            if o_order is not None and order is not None and o_order != order:
                raise SmilesParseError(
                    f"bond symbol conflict on ring closure {num}", pos)
            final_order = o_order if o_order is not None else order
            # directions are normalized to opener -> closer orientation
            closer_dir = None
            if direction is not None:
                closer_dir = DOWN if direction == UP else UP
            if o_dir is not None and closer_dir is not None and o_dir != closer_dir:
                raise SmilesParseError(
                    f"direction conflict on ring closure {num}", pos)
            final_dir = o_dir if o_dir is not None else closer_dir
            add_bond(other, prev, final_order, final_dir, pos)
            slot.partner = prev
            norder[prev].append(other)
        else:
            slot = _RingSlot()
            ring_open[num] = (prev, order, direction, pos, slot)
            norder[prev].append(slot)

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "[":
            atom, i2 = _parse_bracket(text, i)
            new_atom(atom, i)
            i = i2
        elif ch.isupper():
            if text[i:i + 2] in ("Cl", "Br"):
                symbol = text[i:i + 2]
                i += 2
            elif ch in ORGANIC_SUBSET:
                symbol = ch
                i += 1
            else:
                raise SmilesParseError(
                    f"element {ch!r} must be written in brackets", i)
            new_atom(Atom(element=symbol), i - len(symbol))
        elif ch in _AROMATIC_ORGANIC:
            new_atom(Atom(element=ch.upper(), aromatic=True), i)
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesParseError("two consecutive bond symbols", i)
            pending = _PendingBond(_BOND_SYMBOLS[ch], None, i)
            i += 1
        elif ch in ("/", "\\"):
            if pending is not None:
                raise SmilesParseError("two consecutive bond symbols", i)
            pending = _PendingBond(SINGLE, UP if ch == "/" else DOWN, i)
            i += 1
        elif ch in _ASCII_DIGITS:
            ring_digit(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not (text[i + 1] in _ASCII_DIGITS and text[i + 2] in _ASCII_DIGITS):
                raise SmilesParseError("'%' must be followed by two digits", i)
            ring_digit(int(text[i + 1:i + 3]), i)
            i += 3
        elif ch == "(":
            if prev is None:
                raise SmilesParseError("branch with no preceding atom", i)
            if just_opened:
                raise SmilesParseError("branch must start with an atom", i)
            if pending is not None:
                raise SmilesParseError("bond symbol before branch opening", pending.position)
            branch_stack.append((prev, len(atoms)))
            just_opened = True
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesParseError("unmatched closing parenthesis", i)
            if pending is not None:
                raise SmilesParseError("dangling bond symbol in branch", pending.position)
            opener, count = branch_stack.pop()
            if len(atoms) == count:
                raise SmilesParseError("empty branch", i)
            prev = opener
            i += 1
        elif ch == ".":
            if branch_stack:
                raise SmilesParseError("dot separator inside a branch", i)
            if pending is not None:
                raise SmilesParseError("bond symbol before dot separator", pending.position)
            if prev is None:
                raise SmilesParseError("dot separator with no preceding fragment", i)
            prev = None
            after_dot = True
            i += 1
        elif ch == "*":
            raise SmilesParseError("wildcard atoms are unsupported", i)
        elif ch == "$":
            raise SmilesParseError("quadruple bonds are unsupported", i)
        else:
            raise SmilesParseError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise SmilesParseError("dangling bond symbol at end of input", pending.position)
    if branch_stack:
        raise SmilesParseError("unmatched opening parenthesis", len(text))
    if ring_open:
        num = min(ring_open)
        raise SmilesParseError(
            f"unmatched ring closure {num}", ring_open[num][3])
    if after_dot:
        raise SmilesParseError("trailing dot separator", len(text) - 1)

    return _finalize(text, atoms, bond_ends, bond_orders, bond_dirs, norder, has_from)


def _finalize(
    text: str,
    atoms: list[Atom],
    bond_ends: list[tuple[int, int]],
    bond_orders: list[Optional[str]],
    bond_dirs: list[Optional[str]],
    norder: list[list],
    has_from: list[bool],
) -> Molecule:
    n = len(atoms)

    ring_edges = rings.ring_edge_flags(n, bond_ends)
    resolved: list[str] = []
    for bi, order in enumerate(bond_orders):
        if order is None:
            a, b = bond_ends[bi]
            both_aromatic = atoms[a].aromatic and atoms[b].aromatic
            resolved.append(AROMATIC if both_aromatic and ring_edges[bi] else SINGLE)
        else:
            resolved.append(order)

    bonds = [
        Bond(a, b, resolved[bi], bond_dirs[bi])
        for bi, (a, b) in enumerate(bond_ends)
    ]

    ring_atoms = [False] * n
    for bi, (a, b) in enumerate(bond_ends):
        if ring_edges[bi]:
            ring_atoms[a] = True
            ring_atoms[b] = True

    kek_orders, failed_atoms = assign_pi_orders(atoms, bonds, resolved)

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, (a, b) in enumerate(bond_ends):
        adj[a].append((b, bi))
        adj[b].append((a, bi))

    implicit = [0] * n
    for idx, atom in enumerate(atoms):
        if atom.explicit_hydrogens is not None:
            continue
        allowed = IMPLICIT_H_VALENCES.get(atom.element)
        if allowed is None:
            continue
        bondsum = 0
        degraded = False
        for _, bi in adj[idx]:
            order = kek_orders[bi]
            if order is None:
                degraded = True
                break
            bondsum += order
        if degraded:
            # unkekulizable component: approximate so the atom still carries
            # a deterministic H count (the molecule is invalid regardless)
            bondsum = sum(
                {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 1}[bonds[bi].order]
                for _, bi in adj[idx]
            ) + (1 if atom.aromatic else 0)
        fills = [v for v in allowed if v >= bondsum]
        implicit[idx] = (min(fills) - bondsum) if fills else 0

    chiral_orders: list[tuple[int, tuple]] = []
    pruned: dict[int, Atom] = {}
    for idx, atom in enumerate(atoms):
        if atom.chirality is None:
            continue
        entries: list = []
        for e in norder[idx]:
            entries.append(e.partner if isinstance(e, _RingSlot) else e)
        h_count = atom.explicit_hydrogens or 0
        if h_count == 1:
            # the bracket hydrogen occupies the slot right after the
            # preceding atom (first slot for a fragment-leading atom)
            entries.insert(1 if has_from[idx] else 0, H_SLOT)
        if len(entries) < 3 or h_count >= 2:
            pruned[idx] = Atom(atom.element, atom.charge, atom.isotope,
                               atom.explicit_hydrogens, atom.aromatic, None)
        else:
            chiral_orders.append((idx, tuple(entries)))
    if pruned:
        atoms = [pruned.get(i, a) for i, a in enumerate(atoms)]

    stereo = _extract_stereo_bonds(bonds, resolved, adj)

    return Molecule(
        atoms, bonds, implicit, ring_atoms, kek_orders, failed_atoms,
        chiral_orders, stereo, source=text,
    )


def bond_sign(bond: Bond, from_atom: int) -> int:
    """+1 when the bond reads as '/' oriented from ``from_atom``; -1 for '\\'."""
    return 1 if (from_atom == bond.a) == (bond.direction == UP) else -1


def _extract_stereo_bonds(
    bonds: list[Bond],
    resolved: list[str],
    adj: list[list[tuple[int, int]]],
) -> list[StereoBond]:
    stereo: list[StereoBond] = []
    for bi, bond in enumerate(bonds):
        if resolved[bi] != DOUBLE:
            continue
        refs = []
        for end in (bond.a, bond.b):
            # signs oriented substituent -> double-bond atom
            marked = []
            for nbr, bj in adj[end]:
                if bj == bi or bonds[bj].direction is None:
                    continue
                marked.append((nbr, bond_sign(bonds[bj], nbr)))
            if len(marked) == 2 and marked[0][1] == marked[1][1]:
                raise SmilesParseError(
                    "conflicting bond directions around a double bond", -1)
            refs.append(min(marked) if marked else None)
        if refs[0] is None or refs[1] is None:
            continue
        (ref_a, sign_a), (ref_b, sign_b) = refs
        stereo.append(StereoBond(bond.a, bond.b, ref_a, ref_b, sign_a == sign_b))
    return stereo
