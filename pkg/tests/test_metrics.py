import random

import pytest

from retrobench.metrics import (
    COVERAGE, GroundTruthPathway, INTERSECTION, MAXFRAG, PredictionSet,
    VALIDITY, audit_set, build_prediction_set, coverage_hit, emit_report,
    evaluate_dataset, intersection_hit, maxfrag_hit, parse_prediction,
    topk_score, validity_fraction, DatasetScores,
)
from retrobench.smiles import parse_smiles, split_fragments

CASE1_REACTANTS = "CN.O=[N+]([O-])c1cnc(Cl)nc1Cl"
CASE1_CONDITION = "C1COCC1"
CASE1_PRODUCT = "CNc1nc(Cl)ncc1[N+](=O)[O-]"


def gt(reactants: str, conditions: str = "") -> GroundTruthPathway:
    return GroundTruthPathway(
        tuple(split_fragments(reactants)),
        tuple(split_fragments(conditions)) if conditions else (),
    )


CASE1_GT = (gt(CASE1_REACTANTS, CASE1_CONDITION),)


# -- parse_prediction ----------------------------------------------------------


def test_parse_prediction_plain_molecules():
    p = parse_prediction(CASE1_REACTANTS)
    assert p.valid
    assert len(p.precursor_molecules) == 2
    assert p.condition_molecules == ()


def test_parse_prediction_full_reaction_shape():
    p = parse_prediction(f"{CASE1_REACTANTS}>{CASE1_CONDITION}>{CASE1_PRODUCT}")
    assert p.valid
    assert len(p.precursor_molecules) == 2  # only the R segment
    assert len(p.condition_molecules) == 1


def test_parse_prediction_two_segments():
    p = parse_prediction("CCO>CC=O")
    assert p.valid
    assert len(p.precursor_molecules) == 1
    assert p.condition_molecules == ()


def test_parse_prediction_garbage_is_invalid_not_raised():
    for raw in ("", "C1CC", "A>B>C>D", ">>", "C(C)(C)(C)(C)C", "xyzzy"):
        p = parse_prediction(raw)
        assert not p.valid, raw
        assert p.raw == raw


# -- hit operations ------------------------------------------------------------


def test_maxfrag_exact_echo_hits():
    assert maxfrag_hit(parse_prediction(CASE1_REACTANTS), CASE1_GT)


def test_maxfrag_small_fragment_change_still_hits():
    assert maxfrag_hit(
        parse_prediction("CCN.O=[N+]([O-])c1cnc(Cl)nc1Cl"), CASE1_GT)


def test_maxfrag_invalid_sample_misses():
    assert not maxfrag_hit(parse_prediction("C1CC"), CASE1_GT)


def test_coverage_exact_echo_hits():
    assert coverage_hit(parse_prediction(CASE1_REACTANTS), CASE1_GT)


def test_coverage_superset_hits():
    assert coverage_hit(parse_prediction(CASE1_REACTANTS + ".O"), CASE1_GT)


def test_coverage_missing_reactant_misses():
    assert not coverage_hit(
        parse_prediction("O=[N+]([O-])c1cnc(Cl)nc1Cl"), CASE1_GT)


def test_intersection_condition_match():
    sample = parse_prediction(f"{CASE1_REACTANTS}>{CASE1_CONDITION}>{CASE1_PRODUCT}")
    assert intersection_hit(sample, CASE1_GT) is True


def test_intersection_not_applicable_without_conditions():
    sample = parse_prediction(CASE1_REACTANTS)
    assert intersection_hit(sample, (gt(CASE1_REACTANTS),)) is None


def test_intersection_empty_prediction_conditions_miss():
    sample = parse_prediction(CASE1_REACTANTS)
    assert intersection_hit(sample, CASE1_GT) is False


def test_validity_fraction():
    echo = [parse_prediction(CASE1_REACTANTS)] * 4
    assert validity_fraction(echo) == 1.0
    half = [parse_prediction(CASE1_REACTANTS), parse_prediction("C1CC")] * 2
    assert validity_fraction(half) == 0.5
    ten = [parse_prediction("CCO")] * 9 + [parse_prediction("C(C)(C)(C)(C)C")]
    assert validity_fraction(ten) == pytest.approx(0.9)


# -- top-k ----------------------------------------------------------------------


def make_set(product_id: str, hit_position, k: int = 30) -> PredictionSet:
    """Samples are misses except one echo at hit_position (1-based)."""
    raws = ["C1CC"] * k
    if hit_position is not None:
        raws[hit_position - 1] = CASE1_REACTANTS
    return build_prediction_set(product_id, CASE1_PRODUCT, raws, list(CASE1_GT))


def test_topk_all_echo():
    sets = [make_set(f"p{i}", 1) for i in range(4)]
    assert topk_score(sets, MAXFRAG, 1) == 1.0
    assert topk_score(sets, COVERAGE, 10) == 1.0


def test_topk_never_valid_is_zero():
    sets = [make_set(f"p{i}", None) for i in range(3)]
    assert topk_score(sets, MAXFRAG, 10) == 0.0
    assert topk_score(sets, COVERAGE, 10) == 0.0


def test_topk_positions_1_11_none():
    sets = [make_set("a", 1), make_set("b", 11), make_set("c", None)]
    assert topk_score(sets, COVERAGE, 10) == pytest.approx(1 / 3)
    assert topk_score(sets, COVERAGE, 30) == pytest.approx(2 / 3)
    assert topk_score(sets, MAXFRAG, 10) == pytest.approx(1 / 3)
    assert topk_score(sets, MAXFRAG, 30) == pytest.approx(2 / 3)


def test_topk_unknown_metric():
    with pytest.raises(ValueError, match="unknown metric"):
        topk_score([make_set("a", 1)], "exactmatch", 10)


def test_topk_monotone_in_k():
    rng = random.Random(17)
    for _ in range(40):
        sets = []
        for i in range(rng.randrange(1, 5)):
            pos = rng.choice([None, 1, 2, 5, 11, 25])
            sets.append(make_set(f"p{i}", pos))
        for metric in (MAXFRAG, COVERAGE):
            scores = [topk_score(sets, metric, k) for k in (1, 3, 10, 30)]
            assert scores == sorted(scores)


def test_coverage_hit_implies_maxfrag_on_bounded_fixtures():
    """When predicted extras are strictly smaller than the true largest
    fragment, a coverage hit forces a maxfrag hit. (The unrestricted
    implication is false and deliberately not asserted.)"""
    samples = [
        parse_prediction(CASE1_REACTANTS),
        parse_prediction(CASE1_REACTANTS + ".O"),
        parse_prediction(CASE1_REACTANTS + ".CN.O"),
    ]
    for sample in samples:
        if coverage_hit(sample, CASE1_GT):
            assert maxfrag_hit(sample, CASE1_GT)


def test_stereo_sensitivity():
    reactants = "N[C@@H](C)C(=O)O.CCO"
    flipped = "N[C@H](C)C(=O)O.CCO"
    pathway = (gt(reactants),)
    sample = parse_prediction(flipped)
    assert not coverage_hit(sample, pathway, stereo=True)
    assert coverage_hit(sample, pathway, stereo=False)


# -- aggregation and reports -----------------------------------------------------


def test_prediction_set_invariants():
    with pytest.raises(ValueError, match="sample"):
        PredictionSet("p", parse_smiles("C"), (), CASE1_GT)
    with pytest.raises(ValueError, match="ground-truth"):
        PredictionSet("p", parse_smiles("C"),
                      (parse_prediction("C"),), ())
    with pytest.raises(ValueError, match="reactant"):
        GroundTruthPathway(())


def test_audit_covers_every_sample():
    pset = make_set("a", 2, k=5)
    audits = audit_set(pset)
    assert len(audits) == 5
    assert [a.sample_index for a in audits] == list(range(5))
    assert audits[1].maxfrag and audits[1].coverage
    assert not audits[0].valid


def test_evaluate_dataset_rows_and_echo():
    sets = [make_set(f"p{i}", 1, k=3) for i in range(2)]
    rows, audits = evaluate_dataset("demo", sets, ks=[1, 3])
    assert [r.k for r in rows] == [1, 3]
    assert rows[0].maxfrag == 1.0 and rows[0].coverage == 1.0
    assert rows[0].validity == 1.0  # first sample of each product is the echo
    assert len(audits) == 6


def test_emit_report_markdown_formatting():
    rows = [DatasetScores("eln_bh", 10, 500, 0.637, 0.608, None, 1.0, 1.0, 0)]
    text = emit_report(rows, "markdown")
    assert "| 60.8 |" in text
    assert "—" in text  # not-applicable intersection
    assert "| 100.0 |" in text


def test_emit_report_empty_has_header():
    text = emit_report([], "markdown")
    assert text.splitlines()[0].startswith("| Dataset")
    assert len(text.splitlines()) == 2


def test_emit_report_json_carries_fractions():
    rows = [DatasetScores("d", 10, 3, 1 / 3, 2 / 3, None, 0.9, 0.85, 1)]
    out = emit_report(rows, "json")
    assert '"maxfrag": 0.3333333333333333' in out
    assert '"intersection": null' in out
    with pytest.raises(ValueError):
        emit_report(rows, "html")
