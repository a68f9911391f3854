import itertools
import random

import pytest

from chemgen import CASE_SMILES, CURATED_SMILES, fixture_molecules, random_molecule
from retrobench.smiles import (
    InvalidMoleculeError, canonical_smiles, check_validity, parse_smiles,
)


def canon(text: str) -> str:
    return canonical_smiles(parse_smiles(text))


def test_same_graph_same_string():
    assert canon("OCC") == canon("CCO") == canon("C(O)C")


def test_enantiomers_stay_distinct():
    assert canon("N[C@@H](C)C(=O)O") != canon("N[C@H](C)C(=O)O")


def test_cis_trans_stay_distinct():
    assert canon("F/C=C/F") != canon("F/C=C\\F")


def test_stereo_agnostic_projection_collapses():
    agn = lambda s: canonical_smiles(parse_smiles(s), stereo=False)
    assert agn("N[C@@H](C)C(=O)O") == agn("N[C@H](C)C(=O)O")
    assert agn("F/C=C/F") == agn("F/C=C\\F")
    assert "@" not in agn("N[C@@H](C)C(=O)O")
    assert "/" not in agn("F/C=C/F")


def test_meaningless_stereo_marks_are_dropped():
    assert canon("C[C@H](C)O") == canon("CC(C)O")
    assert canon("C/C=C(C)\\C") == canon("CC=C(C)C")


def test_invalid_molecule_is_an_error():
    with pytest.raises(InvalidMoleculeError):
        canonical_smiles(parse_smiles("C(C)(C)(C)(C)C"))


def test_round_trip_on_named_strings():
    for text in CASE_SMILES + CURATED_SMILES:
        mol = parse_smiles(text)
        if not check_validity(mol).valid:
            continue
        out = canonical_smiles(mol)
        assert canonical_smiles(parse_smiles(out)) == out, text


def test_brute_force_permutations_small():
    """All-permutation oracle on a handful of molecules (full sweep lives in
    the acceptance suite)."""
    for text in ["CCO", "c1ccoc1", "N[C@@H](C)O", "F/C=C/F", "CC(N)=O"]:
        mol = parse_smiles(text)
        want = canonical_smiles(mol)
        n = len(mol.atoms)
        for perm in itertools.permutations(range(n)):
            assert canonical_smiles(mol.permute(list(perm))) == want, (text, perm)


def test_random_permutations_medium():
    rng = random.Random(99)
    mols = [parse_smiles(s) for s in CASE_SMILES]
    mols += [random_molecule(rng, n) for n in (10, 14, 18, 22)]
    for mol in mols:
        if not check_validity(mol).valid:
            continue
        want = canonical_smiles(mol)
        n = len(mol.atoms)
        for _ in range(25):
            perm = list(range(n))
            rng.shuffle(perm)
            assert canonical_smiles(mol.permute(perm)) == want, mol.source


def test_fixture_generator_is_deterministic():
    a = [m.source for m in fixture_molecules(40)]
    b = [m.source for m in fixture_molecules(40)]
    assert a == b


def test_multi_fragment_canonical_sorts_components():
    assert canon("CCO.CN") == canon("CN.CCO")
