import pytest

from retrobench.smiles import (
    canonical_smiles, largest_fragment, parse_smiles, split_fragments,
)


def test_largest_fragment_by_heavy_atoms():
    frags = split_fragments("CN.O=[N+]([O-])c1cnc(Cl)nc1Cl")
    best = largest_fragment(frags)
    assert best.heavy_atom_count() == 11
    assert canonical_smiles(best) == canonical_smiles(
        parse_smiles("O=[N+]([O-])c1cnc(Cl)nc1Cl"))


def test_largest_fragment_identity():
    frags = split_fragments("CCO")
    assert largest_fragment(frags) is frags[0]


def test_largest_fragment_weight_tie_break():
    frags = split_fragments("CC.CO")
    best = largest_fragment(frags)
    # both have 2 heavy atoms; methanol (32.04) outweighs ethane (30.07)
    assert canonical_smiles(best) == canonical_smiles(parse_smiles("CO"))
    assert abs(frags[0].molecular_weight() - 30.07) < 0.005
    assert abs(frags[1].molecular_weight() - 32.04) < 0.005


def test_largest_fragment_empty_list_is_error():
    with pytest.raises(ValueError):
        largest_fragment([])


def test_molecular_weight_water():
    assert abs(parse_smiles("O").molecular_weight() - 18.015) < 1e-9
