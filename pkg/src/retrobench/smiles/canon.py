"""Canonical SMILES: order-invariant ranking and string emission.

Ranking is iterative neighborhood refinement over the invariant tuple
(element, charge, isotope, degree, total hydrogen count, ring flag,
aromatic flag), with neighbor multisets carrying bond orders. Once
constitutional refinement stabilizes, stereo descriptors normalized
against the current ranks are folded in, so constitutionally equivalent
but stereo-distinct atoms (meso forms) still rank apart. Remaining ties
break deterministically: lowest-rank class, lowest input index, then
re-refine.

Stereo markers are re-derived relative to the canonical neighbor order,
so chirality tags and cis/trans slashes survive canonicalization no
matter how the input was written.
"""

from __future__ import annotations

import heapq
from typing import Optional

from retrobench.elements import IMPLICIT_H_VALENCES, ORGANIC_SUBSET
from retrobench.smiles.graph import (
    AROMATIC, CLOCKWISE, COUNTERCLOCKWISE, DOUBLE, H_SLOT, InvalidMoleculeError,
    Molecule, SINGLE, TRIPLE,
)
from retrobench.smiles.kekulize import needs_pi_bond
from retrobench.smiles.valence import check_validity

_BOND_RANK = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 4}
_AROMATIC_BARE = {"B", "C", "N", "O", "P", "S"}


def _dense(keys: list) -> list[int]:
    order = {key: i for i, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


def _neighbor_pairs(mol: Molecule) -> list[list[tuple[int, int]]]:
    """Per atom: (bond-order rank, neighbor index) pairs, precomputed once."""
    return [
        [(_BOND_RANK[mol.bonds[bi].order], nbr) for nbr, bi in mol.neighbors(i)]
        for i in range(len(mol))
    ]


def _refine(nbrs: list[list[tuple[int, int]]], ranks: list[int]) -> list[int]:
    while True:
        keys = [
            (ranks[i], tuple(sorted((br, ranks[nbr]) for br, nbr in pairs)))
            for i, pairs in enumerate(nbrs)
        ]
        new = _dense(keys)
        if new == ranks:
            return ranks
        ranks = new


def _perm_parity(src: tuple, dst: list) -> int:
    pos = {e: k for k, e in enumerate(src)}
    perm = [pos[e] for e in dst]
    inversions = 0
    for x in range(len(perm)):
        for y in range(x + 1, len(perm)):
            if perm[x] > perm[y]:
                inversions += 1
    return inversions & 1


def _normalized_tag(mol: Molecule, idx: int, target: list) -> Optional[str]:
    """Chirality tag re-expressed for a new neighbor ordering."""
    stored = mol.chiral_orders.get(idx)
    tag = mol.atoms[idx].chirality
    if stored is None or tag is None:
        return None
    parity = _perm_parity(stored, target)
    if parity:
        return CLOCKWISE if tag == COUNTERCLOCKWISE else COUNTERCLOCKWISE
    return tag


def _stereo_keys(mol: Molecule, ranks: list[int]) -> list[tuple]:
    n = len(mol)
    chir = [0] * n
    sides: list[list[int]] = [[] for _ in range(n)]

    for idx, stored in mol.chiral_orders.items():
        entry_ranks = [-1 if e == H_SLOT else ranks[e] for e in stored]
        if len(set(entry_ranks)) != len(entry_ranks):
            continue  # neighbors still tied; undetermined at this stage
        target = [e for _, e in sorted(zip(entry_ranks, stored, strict=True),
                                       key=lambda p: p[0])]
        tag = _normalized_tag(mol, idx, target)
        chir[idx] = 1 if tag == COUNTERCLOCKWISE else 2

    for sb in mol.stereo_bonds:
        subs_a = [nbr for nbr, _ in mol.neighbors(sb.a) if nbr != sb.b]
        subs_b = [nbr for nbr, _ in mol.neighbors(sb.b) if nbr != sb.a]
        if not subs_a or not subs_b:
            continue
        if len(subs_a) == 2 and ranks[subs_a[0]] == ranks[subs_a[1]]:
            continue
        if len(subs_b) == 2 and ranks[subs_b[0]] == ranks[subs_b[1]]:
            continue
        best_a = min(subs_a, key=lambda i: ranks[i])
        best_b = min(subs_b, key=lambda i: ranks[i])
        flips = (best_a != sb.ref_a) + (best_b != sb.ref_b)
        same = sb.same_side ^ (flips & 1 == 1)
        value = 1 if same else 2
        sides[sb.a].append(value)
        sides[sb.b].append(value)

    return [(chir[i], tuple(sorted(sides[i]))) for i in range(n)]


def _refine_with_stereo(
    mol: Molecule,
    nbrs: list[list[tuple[int, int]]],
    ranks: list[int],
    stereo: bool,
) -> list[int]:
    ranks = _refine(nbrs, ranks)
    if not stereo or (not mol.chiral_orders and not mol.stereo_bonds):
        return ranks
    while True:
        skeys = _stereo_keys(mol, ranks)
        new = _dense([(ranks[i], skeys[i]) for i in range(len(ranks))])
        new = _refine(nbrs, new)
        if new == ranks:
            return ranks
        ranks = new


def _initial_keys(mol: Molecule) -> list[tuple]:
    return [
        (
            atom.element, atom.charge, atom.isotope or 0,
            mol.degree(i), mol.total_h(i),
            mol.ring_membership[i], atom.aromatic,
        )
        for i, atom in enumerate(mol.atoms)
    ]


def _prune_degenerate_stereo(mol: Molecule) -> Molecule:
    """Drop stereo annotations that carry no information: chirality tags
    whose neighbors stay constitutionally equivalent, and double-bond
    configurations where one end bears two equivalent substituents.

    Uses pre-tie-break ranks; without this, the arbitrary index tie-break
    would make the emitted marker depend on input atom order."""
    while mol.chiral_orders or mol.stereo_bonds:
        nbrs = _neighbor_pairs(mol)
        ranks = _refine_with_stereo(mol, nbrs, _dense(_initial_keys(mol)), True)
        drop_atoms = set()
        for idx, stored in mol.chiral_orders.items():
            entry_ranks = [-1 if e == H_SLOT else ranks[e] for e in stored]
            if len(set(entry_ranks)) != len(entry_ranks):
                drop_atoms.add(idx)
        drop_bonds = set()
        for k, sb in enumerate(mol.stereo_bonds):
            for end, far in ((sb.a, sb.b), (sb.b, sb.a)):
                subs = [nbr for nbr, _ in mol.neighbors(end) if nbr != far]
                if len(subs) == 2 and ranks[subs[0]] == ranks[subs[1]]:
                    drop_bonds.add(k)
                    break
        if not drop_atoms and not drop_bonds:
            return mol
        from retrobench.smiles.graph import Atom  # local import to avoid cycle
        atoms = [
            Atom(a.element, a.charge, a.isotope, a.explicit_hydrogens,
                 a.aromatic, None if i in drop_atoms else a.chirality)
            for i, a in enumerate(mol.atoms)
        ]
        mol = Molecule(
            atoms, mol.bonds, mol.implicit_h, mol.ring_membership,
            mol.kekulized_orders, mol.kek_failed_atoms,
            [(i, o) for i, o in mol.chiral_orders.items() if i not in drop_atoms],
            [sb for k, sb in enumerate(mol.stereo_bonds) if k not in drop_bonds],
            source=mol.source,
        )
    return mol


def canonical_ranks(mol: Molecule, stereo: bool = True) -> list[int]:
    """Dense, all-distinct canonical ranks for every atom."""
    n = len(mol)
    nbrs = _neighbor_pairs(mol)
    ranks = _refine_with_stereo(mol, nbrs, _dense(_initial_keys(mol)), stereo)
    while True:
        members: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            members.setdefault(r, []).append(i)
        tied = sorted(r for r, atoms in members.items() if len(atoms) > 1)
        if not tied:
            return ranks
        pick = min(members[tied[0]])
        keys = [
            (ranks[i], 0 if (i == pick or ranks[i] != tied[0]) else 1)
            for i in range(n)
        ]
        ranks = _refine_with_stereo(mol, nbrs, _dense(keys), stereo)


# ---------------------------------------------------------------------------
# writer


def _bare_implied_h(mol: Molecule, idx: int) -> Optional[int]:
    """Hydrogen count a bare (bracket-free) atom would re-parse with, or
    None when the atom cannot be written bare."""
    atom = mol.atoms[idx]
    allowed = IMPLICIT_H_VALENCES.get(atom.element)
    if allowed is None:
        return None
    bondsum = 0
    actual_pi = False
    fixed_multiple = False
    for _, bi in mol.neighbors(idx):
        order = mol.kekulized_orders[bi]
        if order is None:
            return None
        bondsum += order
        if mol.bonds[bi].order == AROMATIC and order == 2:
            actual_pi = True
        if mol.bonds[bi].order in (DOUBLE, TRIPLE):
            fixed_multiple = True
    if atom.aromatic:
        from retrobench.smiles.graph import Atom  # local import to avoid cycle
        bare = Atom(atom.element, 0, None, None, True, None)
        if needs_pi_bond(bare, mol.degree(idx), fixed_multiple) != actual_pi:
            return None
    fills = [v for v in allowed if v >= bondsum]
    if not fills:
        return None
    return min(fills) - bondsum


def _atom_token(mol: Molecule, idx: int, chir_tag: Optional[str]) -> str:
    atom = mol.atoms[idx]
    total_h = mol.total_h(idx)
    symbol = atom.element.lower() if atom.aromatic else atom.element

    bare_ok = (
        chir_tag is None
        and atom.charge == 0
        and atom.isotope is None
        and (atom.element in _AROMATIC_BARE if atom.aromatic
             else atom.element in ORGANIC_SUBSET)
        and _bare_implied_h(mol, idx) == total_h
    )
    if bare_ok:
        return symbol

    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if chir_tag is not None:
        parts.append(chir_tag)
    if total_h == 1:
        parts.append("H")
    elif total_h > 1:
        parts.append(f"H{total_h}")
    if atom.charge == 1:
        parts.append("+")
    elif atom.charge == -1:
        parts.append("-")
    elif atom.charge > 1:
        parts.append(f"+{atom.charge}")
    elif atom.charge < -1:
        parts.append(f"-{-atom.charge}")
    parts.append("]")
    return "".join(parts)


def _digit_token(digit: int) -> str:
    return str(digit) if digit < 10 else f"%{digit:02d}"


def _solve_directions(mol: Molecule, ranks: list[int], in_component: set[int]) -> dict[int, int]:
    """Assign '/'-'\\' signs to reference single bonds around stereo double
    bonds. Returns bond index -> sign of the bond oriented a -> b."""
    chosen: dict[int, tuple] = {}  # stereo-bond key -> (c, d, bond_c, bond_d, same)
    constraints: list[tuple[int, int, int]] = []  # (bond1, bond2, required product)

    def single_candidates(end: int, far: int) -> list[tuple[int, int]]:
        out = []
        for nbr, bi in mol.neighbors(end):
            if nbr != far and mol.bonds[bi].order == SINGLE:
                out.append((nbr, bi))
        return out

    stereo_bonds = [sb for sb in mol.stereo_bonds if sb.a in in_component]
    stereo_bonds.sort(key=lambda sb: (min(ranks[sb.a], ranks[sb.b]),
                                      max(ranks[sb.a], ranks[sb.b])))
    for sb in stereo_bonds:
        cand_a = single_candidates(sb.a, sb.b)
        cand_b = single_candidates(sb.b, sb.a)
        if not cand_a or not cand_b:
            continue
        c, bond_c = min(cand_a, key=lambda p: ranks[p[0]])
        d, bond_d = min(cand_b, key=lambda p: ranks[p[0]])
        flips = (c != sb.ref_a) + (d != sb.ref_b)
        same = sb.same_side ^ (flips & 1 == 1)
        orient_c = 1 if mol.bonds[bond_c].a == c else -1
        orient_d = 1 if mol.bonds[bond_d].a == d else -1
        required = (1 if same else -1) * orient_c * orient_d
        constraints.append((bond_c, bond_d, required))
        chosen[(sb.a, sb.b)] = (c, d, bond_c, bond_d)

    if not constraints:
        return {}

    marked = sorted({bi for c in constraints for bi in (c[0], c[1])})
    # around any double bond, two marked substituent bonds at the same end
    # must slope opposite ways, or the output would re-parse as conflicting
    marked_set = set(marked)
    for bi, bond in enumerate(mol.bonds):
        if bond.order != DOUBLE or bond.a not in in_component:
            continue
        for end in (bond.a, bond.b):
            local = [
                (nbr, bj) for nbr, bj in mol.neighbors(end)
                if bj != bi and bj in marked_set
            ]
            if len(local) == 2:
                (c1, b1), (c2, b2) = local
                o1 = 1 if mol.bonds[b1].a == c1 else -1
                o2 = 1 if mol.bonds[b2].a == c2 else -1
                constraints.append((b1, b2, -o1 * o2))

    adj: dict[int, list[tuple[int, int]]] = {bi: [] for bi in marked}
    for b1, b2, req in constraints:
        adj.setdefault(b1, []).append((b2, req))
        adj.setdefault(b2, []).append((b1, req))

    # seed each constraint component in canonical order with a rank-oriented
    # sign, so the emitted slashes do not depend on input atom order
    def bond_rank_key(bi: int) -> tuple[int, int]:
        a, b = mol.bonds[bi].a, mol.bonds[bi].b
        return (min(ranks[a], ranks[b]), max(ranks[a], ranks[b]))

    signs: dict[int, int] = {}
    for seed in sorted(marked, key=bond_rank_key):
        if seed in signs:
            continue
        bond = mol.bonds[seed]
        signs[seed] = 1 if ranks[bond.a] < ranks[bond.b] else -1
        queue = [seed]
        while queue:
            cur = queue.pop()
            for nxt, req in adj[cur]:
                want = signs[cur] * req
                if nxt in signs:
                    if signs[nxt] != want:
                        # inconsistent input geometry: drop all marks rather
                        # than emit a string that cannot re-parse
                        return {}
                else:
                    signs[nxt] = want
                    queue.append(nxt)
    return signs


def _component_smiles(mol: Molecule, comp: list[int], ranks: list[int],
                      stereo: bool) -> str:
    in_comp = set(comp)
    root = min(comp, key=lambda i: ranks[i])

    children: dict[int, list[tuple[int, int]]] = {i: [] for i in comp}
    closures: list[tuple[int, int, int]] = []  # (open atom, close atom, bond idx)
    emission: list[int] = []
    visited = {root}
    used_bonds: set[int] = set()

    def ordered_neighbors(u: int):
        return sorted(mol.neighbors(u), key=lambda p: ranks[p[0]])

    frames = [(root, -1, iter(ordered_neighbors(root)))]
    emission.append(root)
    while frames:
        u, parent_bond, it = frames[-1]
        for v, bi in it:
            if bi == parent_bond or bi in used_bonds:
                continue
            if v in visited:
                used_bonds.add(bi)
                closures.append((v, u, bi))
                continue
            used_bonds.add(bi)
            visited.add(v)
            children[u].append((v, bi))
            emission.append(v)
            frames.append((v, bi, iter(ordered_neighbors(v))))
            break
        else:
            frames.pop()

    emi = {atom: k for k, atom in enumerate(emission)}
    opens_at: dict[int, list[tuple[int, int, int]]] = {}
    closes_at: dict[int, list[tuple[int, int, int]]] = {}
    for open_atom, close_atom, bi in closures:
        opens_at.setdefault(open_atom, []).append((emi[close_atom], close_atom, bi))
        closes_at.setdefault(close_atom, []).append((emi[open_atom], open_atom, bi))
    for entries in opens_at.values():
        entries.sort()
    for entries in closes_at.values():
        entries.sort()

    free: list[int] = list(range(1, 100))
    heapq.heapify(free)
    digit_of: dict[int, int] = {}
    for u in emission:
        for _, _, bi in closes_at.get(u, ()):
            heapq.heappush(free, digit_of[bi])
        for _, _, bi in opens_at.get(u, ()):
            if not free:
                raise InvalidMoleculeError("more than 99 concurrently open rings")
            digit_of[bi] = heapq.heappop(free)

    signs = _solve_directions(mol, ranks, in_comp) if stereo else {}

    def bond_token(src: int, dst: int, bi: int) -> str:
        bond = mol.bonds[bi]
        if bi in signs:
            sign = signs[bi] if bond.a == src else -signs[bi]
            return "/" if sign == 1 else "\\"
        if bond.order == DOUBLE:
            return "="
        if bond.order == TRIPLE:
            return "#"
        if bond.order == SINGLE and mol.atoms[src].aromatic and mol.atoms[dst].aromatic:
            return "-"
        return ""

    parent_of: dict[int, Optional[int]] = {root: None}
    for u, kids in children.items():
        for v, _ in kids:
            parent_of[v] = u

    def chiral_tag(u: int) -> Optional[str]:
        if not stereo or u not in mol.chiral_orders:
            return None
        written: list = []
        if parent_of[u] is not None:
            written.append(parent_of[u])
        if mol.total_h(u) == 1:
            written.append(H_SLOT)
        for _, other, _bi in closes_at.get(u, ()):
            written.append(other)
        for _, other, _bi in opens_at.get(u, ()):
            written.append(other)
        for v, _ in children[u]:
            written.append(v)
        return _normalized_tag(mol, u, written)

    def atom_text(u: int) -> str:
        parts = [_atom_token(mol, u, chiral_tag(u))]
        for _, _, bi in closes_at.get(u, ()):
            parts.append(_digit_token(digit_of[bi]))
        for _, other, bi in opens_at.get(u, ()):
            parts.append(bond_token(u, other, bi))
            parts.append(_digit_token(digit_of[bi]))
        return "".join(parts)

    out: list[str] = []
    stack: list[tuple] = [("atom", root)]
    while stack:
        frame = stack.pop()
        if frame[0] == "text":
            out.append(frame[1])
            continue
        u = frame[1]
        out.append(atom_text(u))
        kids = children[u]
        for k in range(len(kids) - 1, -1, -1):
            v, bi = kids[k]
            last = k == len(kids) - 1
            if not last:
                stack.append(("text", ")"))
            stack.append(("atom", v))
            stack.append(("text", bond_token(u, v, bi)))
            if not last:
                stack.append(("text", "("))
    return "".join(out)


def fragment_smiles(mol: Molecule) -> str:
    """Canonical string for a substructure fragment.

    No validity gate, no stereo, and every atom is written in brackets with
    its carried hydrogen count, so incomplete neighborhoods (whose aromatic
    systems cannot kekulize on their own) still serialize deterministically.
    Output is order-invariant; it is meant as a hash key, not for re-parsing.
    """
    mol = mol.without_stereo()
    ranks = canonical_ranks(mol, stereo=False)
    pieces = [
        _component_smiles(mol, comp, ranks, stereo=False)
        for comp in mol.components()
    ]
    return ".".join(sorted(pieces))


def canonical_smiles(mol: Molecule, stereo: bool = True) -> str:
    """Canonical SMILES, invariant under input atom ordering.

    Raises InvalidMoleculeError for molecules that fail the validity check.
    """
    report = check_validity(mol)
    if not report.valid:
        reasons = ", ".join(f"{f.reason} (atom {f.atom_index})" for f in report.failures)
        raise InvalidMoleculeError(f"molecule is not valid: {reasons}")
    if not stereo:
        mol = mol.without_stereo()
    else:
        mol = _prune_degenerate_stereo(mol)
    ranks = canonical_ranks(mol, stereo)
    pieces = [
        _component_smiles(mol, comp, ranks, stereo)
        for comp in mol.components()
    ]
    return ".".join(sorted(pieces))
