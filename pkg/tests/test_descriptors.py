import math
import random

import networkx as nx
import pytest

from chemgen import random_molecule
from retrobench.descriptors import (
    Descriptor, DescriptorRegistry, UnknownDescriptorError,
    build_default_registry,
)
from retrobench import elements
from retrobench.smiles import parse_smiles

REG = build_default_registry()


def test_water_molecular_weight():
    assert REG.compute(parse_smiles("O"), "molecular_weight") == pytest.approx(18.015)


def test_heavy_atom_count():
    assert REG.compute(parse_smiles("CCO"), "heavy_atom_count") == 3


def test_balaban_j_propane_hand_value():
    # path of 3: distance sums (3, 2, 3), two edges of (3*2)^(-1/2), q=2, mu=0
    assert REG.compute(parse_smiles("CCC"), "balaban_j") == pytest.approx(1.633, abs=1e-3)


def test_balaban_j_matches_shortest_path_oracle():
    """Independent all-pairs-shortest-path evaluation of the formula."""
    rng = random.Random(21)
    mols = [parse_smiles(s) for s in ("CCC", "CCCCC", "C1CCCCC1", "CC(C)CC(N)=O")]
    mols += [random_molecule(rng, n) for n in (6, 9, 12, 15)]
    for mol in mols:
        g = nx.Graph()
        heavy = [i for i, a in enumerate(mol.atoms) if a.element != "H"]
        g.add_nodes_from(heavy)
        for b in mol.bonds:
            g.add_edge(b.a, b.b)
        dist = dict(nx.all_pairs_shortest_path_length(g))
        s = {i: sum(dist[i].values()) for i in heavy}
        q = g.number_of_edges()
        mu = q - g.number_of_nodes() + 1
        expected = q / (mu + 1) * sum(
            1.0 / math.sqrt(s[a] * s[b]) for a, b in g.edges
        )
        assert REG.compute(mol, "balaban_j") == pytest.approx(expected, rel=1e-12)


def test_balaban_j_uses_largest_fragment_when_disconnected():
    joined = REG.compute(parse_smiles("CCC.O"), "balaban_j")
    assert joined == pytest.approx(REG.compute(parse_smiles("CCC"), "balaban_j"))


def test_valence_electron_formula():
    # ethanol: 2 C (4) + O (6) + 6 H = 20
    assert REG.compute(parse_smiles("CCO"), "valence_electron_count") == 20
    # acetate anion: 2 C + 2 O + 3 H, and the -1 charge adds one electron
    assert REG.compute(parse_smiles("CC(=O)[O-]"), "valence_electron_count") == \
        4 + 4 + 6 + 6 + 3 + 1


def test_nh_oh_and_n_o_counts():
    mol = parse_smiles("NCC(=O)O")  # glycine
    assert REG.compute(mol, "nh_oh_count") == 3  # NH2 + OH
    assert REG.compute(mol, "n_o_count") == 3


def test_ring_count_is_cyclomatic_number():
    assert REG.compute(parse_smiles("C1CC1C1CC1"), "ring_count") == 2
    assert REG.compute(parse_smiles("c1ccc2ccccc2c1"), "ring_count") == 2
    assert REG.compute(parse_smiles("CCO"), "ring_count") == 0


def test_rotatable_bonds():
    assert REG.compute(parse_smiles("CCCC"), "rotatable_bond_count") == 1
    assert REG.compute(parse_smiles("C1CCCCC1"), "rotatable_bond_count") == 0
    # amide C-N excluded: N-methylacetamide has zero rotatable bonds by the
    # shipped definition (terminal methyls have heavy-degree 1)
    assert REG.compute(parse_smiles("CC(=O)NC"), "rotatable_bond_count") == 0
    assert REG.compute(parse_smiles("CC(=O)OC"), "rotatable_bond_count") == 1


def test_halogen_and_aromatic_ring_counts():
    mol = parse_smiles("Clc1ccc(Br)cc1")
    assert REG.compute(mol, "halogen_count") == 2
    assert REG.compute(mol, "aromatic_ring_count") == 1
    assert REG.compute(parse_smiles("c1ccc2ccccc2c1"), "aromatic_ring_count") == 2


def test_integer_descriptors_return_ints():
    mol = parse_smiles("CCO")
    for ident in ("heavy_atom_count", "ring_count", "halogen_count",
                  "valence_electron_count", "wiener_index"):
        assert isinstance(REG.compute(mol, ident), int)


def test_registry_contract():
    reg = build_default_registry()
    assert len(reg) >= 10
    assert "balaban_j" in reg
    ids = [d.identifier for d in reg.list_descriptors()]
    assert ids == sorted(ids)
    before = len(reg)
    reg.register(Descriptor("custom_zero", "Always zero", "count", lambda m: 0))
    assert len(reg) == before + 1
    with pytest.raises(ValueError):
        reg.register(Descriptor("custom_zero", "dup", "count", lambda m: 0))
    with pytest.raises(UnknownDescriptorError):
        reg.compute(parse_smiles("C"), "no_such_descriptor")


def test_registry_export_text():
    text = REG.export_text()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert len(lines) == len(REG)
    assert any(l.startswith("balaban_j\t") for l in lines)


def test_permutation_invariance_of_all_descriptors():
    rng = random.Random(4)
    mols = [parse_smiles("CNc1nc(Cl)ncc1[N+](=O)[O-]"), random_molecule(rng, 12)]
    for mol in mols:
        base = {d.identifier: d.compute(mol) for d in REG.list_descriptors()}
        n = len(mol.atoms)
        for _ in range(10):
            perm = list(range(n))
            rng.shuffle(perm)
            permuted = mol.permute(perm)
            for ident, value in base.items():
                assert REG.compute(permuted, ident) == pytest.approx(value), ident


def test_element_weight_table_covers_118():
    assert len(elements.all_symbols()) == 118
