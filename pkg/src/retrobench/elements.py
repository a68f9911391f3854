"""Periodic-table data: symbols, atomic weights, valence-electron counts.

The atomic weight table follows the IUPAC 2021 standard atomic weights
(conventional values for interval elements); elements without a stable
isotope carry the mass number of their longest-lived isotope. The table is
versioned because molecular-weight comparisons feed largest-fragment
tie-breaks and must be bit-stable across releases.
"""

from __future__ import annotations

ATOMIC_WEIGHTS_VERSION = "IUPAC-2021"

# symbol -> (atomic number, atomic weight, valence electrons)
_ELEMENTS: dict[str, tuple[int, float, int]] = {
    "H": (1, 1.008, 1), "He": (2, 4.0026, 2),
    "Li": (3, 6.94, 1), "Be": (4, 9.0122, 2), "B": (5, 10.81, 3),
    "C": (6, 12.011, 4), "N": (7, 14.007, 5), "O": (8, 15.999, 6),
    "F": (9, 18.998, 7), "Ne": (10, 20.180, 8),
    "Na": (11, 22.990, 1), "Mg": (12, 24.305, 2), "Al": (13, 26.982, 3),
    "Si": (14, 28.085, 4), "P": (15, 30.974, 5), "S": (16, 32.06, 6),
    "Cl": (17, 35.45, 7), "Ar": (18, 39.95, 8),
    "K": (19, 39.098, 1), "Ca": (20, 40.078, 2), "Sc": (21, 44.956, 3),
    "Ti": (22, 47.867, 4), "V": (23, 50.942, 5), "Cr": (24, 51.996, 6),
    "Mn": (25, 54.938, 7), "Fe": (26, 55.845, 8), "Co": (27, 58.933, 9),
    "Ni": (28, 58.693, 10), "Cu": (29, 63.546, 11), "Zn": (30, 65.38, 12),
    "Ga": (31, 69.723, 3), "Ge": (32, 72.630, 4), "As": (33, 74.922, 5),
    "Se": (34, 78.971, 6), "Br": (35, 79.904, 7), "Kr": (36, 83.798, 8),
    "Rb": (37, 85.468, 1), "Sr": (38, 87.62, 2), "Y": (39, 88.906, 3),
    "Zr": (40, 91.224, 4), "Nb": (41, 92.906, 5), "Mo": (42, 95.95, 6),
    "Tc": (43, 98.0, 7), "Ru": (44, 101.07, 8), "Rh": (45, 102.91, 9),
    "Pd": (46, 106.42, 10), "Ag": (47, 107.87, 11), "Cd": (48, 112.41, 12),
    "In": (49, 114.82, 3), "Sn": (50, 118.71, 4), "Sb": (51, 121.76, 5),
    "Te": (52, 127.60, 6), "I": (53, 126.90, 7), "Xe": (54, 131.29, 8),
    "Cs": (55, 132.91, 1), "Ba": (56, 137.33, 2), "La": (57, 138.91, 3),
    "Ce": (58, 140.12, 3), "Pr": (59, 140.91, 3), "Nd": (60, 144.24, 3),
    "Pm": (61, 145.0, 3), "Sm": (62, 150.36, 3), "Eu": (63, 151.96, 3),
    "Gd": (64, 157.25, 3), "Tb": (65, 158.93, 3), "Dy": (66, 162.50, 3),
    "Ho": (67, 164.93, 3), "Er": (68, 167.26, 3), "Tm": (69, 168.93, 3),
    "Yb": (70, 173.05, 3), "Lu": (71, 174.97, 3), "Hf": (72, 178.49, 4),
    "Ta": (73, 180.95, 5), "W": (74, 183.84, 6), "Re": (75, 186.21, 7),
    "Os": (76, 190.23, 8), "Ir": (77, 192.22, 9), "Pt": (78, 195.08, 10),
    "Au": (79, 196.97, 11), "Hg": (80, 200.59, 12), "Tl": (81, 204.38, 3),
    "Pb": (82, 207.2, 4), "Bi": (83, 208.98, 5), "Po": (84, 209.0, 6),
    "At": (85, 210.0, 7), "Rn": (86, 222.0, 8),
    "Fr": (87, 223.0, 1), "Ra": (88, 226.0, 2), "Ac": (89, 227.0, 3),
    "Th": (90, 232.04, 3), "Pa": (91, 231.04, 3), "U": (92, 238.03, 3),
    "Np": (93, 237.0, 3), "Pu": (94, 244.0, 3), "Am": (95, 243.0, 3),
    "Cm": (96, 247.0, 3), "Bk": (97, 247.0, 3), "Cf": (98, 251.0, 3),
    "Es": (99, 252.0, 3), "Fm": (100, 257.0, 3), "Md": (101, 258.0, 3),
    "No": (102, 259.0, 3), "Lr": (103, 262.0, 3), "Rf": (104, 267.0, 4),
    "Db": (105, 268.0, 5), "Sg": (106, 269.0, 6), "Bh": (107, 270.0, 7),
    "Hs": (108, 269.0, 8), "Mt": (109, 278.0, 9), "Ds": (110, 281.0, 10),
    "Rg": (111, 282.0, 11), "Cn": (112, 285.0, 12), "Nh": (113, 286.0, 3),
    "Fl": (114, 289.0, 4), "Mc": (115, 290.0, 5), "Lv": (116, 293.0, 6),
    "Ts": (117, 294.0, 7), "Og": (118, 294.0, 8),
}

ELEMENT_SYMBOLS: frozenset[str] = frozenset(_ELEMENTS)

# Elements allowed to appear in aromatic (lowercase) notation.
AROMATIC_ELEMENTS: frozenset[str] = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As"})

# Organic-subset symbols writable without brackets.
ORGANIC_SUBSET: frozenset[str] = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

# Daylight default valences used to fill implicit hydrogens on
# organic-subset atoms. Parser semantics; not overridable.
IMPLICIT_H_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,), "C": (4,), "N": (3, 5), "O": (2,),
    "P": (3, 5), "S": (2, 4, 6), "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}


def is_element(symbol: str) -> bool:
    return symbol in _ELEMENTS


def atomic_number(symbol: str) -> int:
    return _ELEMENTS[symbol][0]


def atomic_weight(symbol: str) -> float:
    return _ELEMENTS[symbol][1]


def valence_electrons(symbol: str) -> int:
    return _ELEMENTS[symbol][2]


def all_symbols() -> tuple[str, ...]:
    """All 118 element symbols, in atomic-number order."""
    return tuple(sorted(_ELEMENTS, key=lambda s: _ELEMENTS[s][0]))
