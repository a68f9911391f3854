"""Scoring of sampled predictions against multi-pathway ground truth.

Four metrics: MaxFrag (largest predicted precursor fragment matches the
largest true-reactant fragment), Coverage (every true reactant appears
among the predicted precursors; predicted extras are allowed), Intersection
(at least one true condition molecule predicted; not applicable when no
pathway carries conditions), and Validity (fraction of sampled strings that
parse and obey valence rules).

A product with several recorded pathways scores a hit as soon as any
pathway matches. Top-k takes the first k samples per product; validity is
averaged instead of any-of. Comparisons use canonical SMILES, stereo-aware
by default.

Precursor extraction policy for raw samples: strings with two '>' are split
as R>C>P and only the R segment feeds Coverage/MaxFrag; a single '>' is
read as R>P; strings without '>' treat every molecule as a precursor with
no conditions. Anything else marks the sample invalid. The raw string is
always retained for audit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from retrobench.reactions import ReactionRecord
from retrobench.smiles import (
    Molecule, SmilesParseError, canonical_smiles, check_validity,
    largest_fragment, parse_smiles, split_fragments,
)

MAXFRAG = "maxfrag"
COVERAGE = "coverage"
INTERSECTION = "intersection"
VALIDITY = "validity"
METRICS = (MAXFRAG, COVERAGE, INTERSECTION, VALIDITY)


@dataclass(frozen=True)
class ParsedPrediction:
    raw: str
    precursor_molecules: tuple[Molecule, ...]
    condition_molecules: tuple[Molecule, ...]
    valid: bool


def parse_prediction(raw: str) -> ParsedPrediction:
    """Parse one sampled string into precursors/conditions plus a validity
    flag. Never raises: garbage output is a legitimate model behavior and is
    recorded as an invalid sample."""
    text = raw.strip()
    if not text:
        return ParsedPrediction(raw, (), (), False)

    segments = text.split(">")
    if len(segments) > 3 or any(not s for s in segments[:1]):
        return ParsedPrediction(raw, (), (), False)

    valid = True
    parsed_segments: list[tuple[Molecule, ...]] = []
    for segment in segments:
        mols: list[Molecule] = []
        if segment:
            try:
                mols = split_fragments(segment)
            except SmilesParseError:
                valid = False
                parsed_segments.append(())
                continue
            for mol in mols:
                if not check_validity(mol).valid:
                    valid = False
        parsed_segments.append(tuple(mols))

    precursors = parsed_segments[0]
    conditions: tuple[Molecule, ...] = ()
    if len(segments) == 3:
        conditions = parsed_segments[1]
        if not segments[2]:
            valid = False  # R>C> with no product is malformed
    elif len(segments) == 2 and not segments[1]:
        valid = False
    if not precursors:
        valid = False
    return ParsedPrediction(raw, precursors, conditions, valid)


@dataclass(frozen=True)
class GroundTruthPathway:
    reactants: tuple[Molecule, ...]
    conditions: tuple[Molecule, ...] = ()

    def __post_init__(self):
        if not self.reactants:
            raise ValueError("ground-truth pathway needs at least one reactant")

    @staticmethod
    def from_record(rec: ReactionRecord) -> "GroundTruthPathway":
        return GroundTruthPathway(rec.reactants, rec.conditions)


@dataclass(frozen=True)
class PredictionSet:
    product_id: str
    product: Molecule
    samples: tuple[ParsedPrediction, ...]
    ground_truths: tuple[GroundTruthPathway, ...]

    def __post_init__(self):
        if not self.samples:
            raise ValueError("prediction set needs at least one sample")
        if not self.ground_truths:
            raise ValueError("prediction set needs at least one ground-truth pathway")


# -- canonical views of one side --------------------------------------------


def _canon_set(mols: tuple[Molecule, ...], stereo: bool) -> frozenset[str]:
    return frozenset(canonical_smiles(m, stereo=stereo) for m in mols)


def _canon_largest(mols: tuple[Molecule, ...], stereo: bool) -> str:
    return canonical_smiles(largest_fragment(list(mols)), stereo=stereo)


def maxfrag_hit(sample: ParsedPrediction, gts: tuple[GroundTruthPathway, ...],
                stereo: bool = True) -> bool:
    """Largest predicted precursor equals the largest true reactant of at
    least one pathway. Invalid samples auto-miss."""
    if not sample.valid:
        return False
    predicted = _canon_largest(sample.precursor_molecules, stereo)
    return any(predicted == _canon_largest(gt.reactants, stereo) for gt in gts)


def coverage_hit(sample: ParsedPrediction, gts: tuple[GroundTruthPathway, ...],
                 stereo: bool = True) -> bool:
    """Every true reactant of some pathway appears among the predicted
    precursors (subset relation; predicted extras are allowed)."""
    if not sample.valid:
        return False
    predicted = _canon_set(sample.precursor_molecules, stereo)
    return any(_canon_set(gt.reactants, stereo) <= predicted for gt in gts)


def intersection_hit(sample: ParsedPrediction, gts: tuple[GroundTruthPathway, ...],
                     stereo: bool = True) -> Optional[bool]:
    """At least one true condition molecule predicted; None (not applicable)
    when every pathway lacks conditions."""
    applicable = [gt for gt in gts if gt.conditions]
    if not applicable:
        return None
    if not sample.valid:
        return False
    predicted = _canon_set(sample.condition_molecules, stereo)
    if not predicted:
        return False
    return any(predicted & _canon_set(gt.conditions, stereo) for gt in applicable)


def validity_fraction(samples: list[ParsedPrediction]) -> float:
    if not samples:
        return 0.0
    return sum(1 for s in samples if s.valid) / len(samples)


# -- per-sample audit and dataset-level aggregation ---------------------------


@dataclass(frozen=True)
class SampleAudit:
    product_id: str
    sample_index: int
    raw: str
    valid: bool
    maxfrag: bool
    coverage: bool
    intersection: Optional[bool]

    def to_json(self) -> dict:
        return {
            "product_id": self.product_id,
            "sample_index": self.sample_index,
            "raw": self.raw,
            "valid": self.valid,
            "maxfrag": self.maxfrag,
            "coverage": self.coverage,
            "intersection": self.intersection,
        }


def audit_set(pset: PredictionSet, stereo: bool = True) -> list[SampleAudit]:
    """Score every sample of one product once; all aggregation derives from
    these records."""
    gts = pset.ground_truths
    gt_largest = {_canon_largest(gt.reactants, stereo) for gt in gts}
    gt_reactant_sets = [_canon_set(gt.reactants, stereo) for gt in gts]
    gt_condition_sets = [_canon_set(gt.conditions, stereo) for gt in gts if gt.conditions]

    audits = []
    for index, sample in enumerate(pset.samples):
        valid = sample.valid
        mf = cov = False
        inter: Optional[bool] = None if not gt_condition_sets else False
        if valid:
            predicted_set = _canon_set(sample.precursor_molecules, stereo)
            predicted_largest = _canon_largest(sample.precursor_molecules, stereo)
            mf = predicted_largest in gt_largest
            cov = any(gt <= predicted_set for gt in gt_reactant_sets)
            if gt_condition_sets:
                cond_set = _canon_set(sample.condition_molecules, stereo)
                inter = bool(cond_set) and any(cond_set & g for g in gt_condition_sets)
        audits.append(SampleAudit(
            pset.product_id, index, sample.raw, valid, mf, cov, inter,
        ))
    return audits


def topk_score(sets: list[PredictionSet], metric: str, k: int,
               stereo: bool = True) -> Optional[float]:
    """Fraction of products with at least one hit among the first k samples
    (validity: averaged over the first k samples instead). Sets with fewer
    than k samples use all available samples."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if k < 1:
        raise ValueError("k must be positive")
    audits = {pset.product_id: audit_set(pset, stereo) for pset in sets}
    return _topk_from_audits(list(audits.values()), metric, k)


def _topk_from_audits(per_product: list[list[SampleAudit]], metric: str,
                      k: int) -> Optional[float]:
    if metric == VALIDITY:
        flags = [a.valid for audits in per_product for a in audits[:k]]
        return (sum(flags) / len(flags)) if flags else 0.0
    hits = 0
    denom = 0
    for audits in per_product:
        window = audits[:k]
        if metric == INTERSECTION:
            if window and window[0].intersection is None:
                continue  # not applicable for this product
            denom += 1
            hits += any(a.intersection for a in window)
        else:
            denom += 1
            hits += any(getattr(a, metric) for a in window)
    if denom == 0:
        return None if metric == INTERSECTION else 0.0
    return hits / denom


@dataclass(frozen=True)
class DatasetScores:
    dataset: str
    k: int
    n_products: int
    maxfrag: float
    coverage: float
    intersection: Optional[float]
    validity: float
    validity_per_product: float
    undersampled: int  # products with fewer than k samples


def evaluate_dataset(name: str, sets: list[PredictionSet], ks: list[int],
                     stereo: bool = True) -> tuple[list[DatasetScores], list[SampleAudit]]:
    per_product = [audit_set(pset, stereo) for pset in sets]
    flat = [a for audits in per_product for a in audits]
    rows = []
    for k in sorted(ks):
        per_product_validity = [
            sum(a.valid for a in audits[:k]) / len(audits[:k])
            for audits in per_product if audits[:k]
        ]
        rows.append(DatasetScores(
            dataset=name,
            k=k,
            n_products=len(sets),
            maxfrag=_topk_from_audits(per_product, MAXFRAG, k),
            coverage=_topk_from_audits(per_product, COVERAGE, k),
            intersection=_topk_from_audits(per_product, INTERSECTION, k),
            validity=_topk_from_audits(per_product, VALIDITY, k),
            validity_per_product=(
                sum(per_product_validity) / len(per_product_validity)
                if per_product_validity else 0.0
            ),
            undersampled=sum(1 for audits in per_product if len(audits) < k),
        ))
    return rows, flat


# -- report rendering ---------------------------------------------------------


def _cell(value: Optional[float]) -> str:
    return "—" if value is None else f"{100.0 * value:.1f}"


def render_markdown(rows: list[DatasetScores]) -> str:
    lines = [
        "| Dataset | k | Products | MaxFrag | Coverage | Intersection | Validity |",
        "|---|---|---|---|---|---|---|",
    ]
    for row in rows:
        lines.append(
            f"| {row.dataset} | {row.k} | {row.n_products} "
            f"| {_cell(row.maxfrag)} | {_cell(row.coverage)} "
            f"| {_cell(row.intersection)} | {_cell(row.validity)} |"
        )
    return "\n".join(lines) + "\n"


def render_json(rows: list[DatasetScores]) -> str:
    payload = []
    for row in rows:
        payload.append({
            "dataset": row.dataset,
            "k": row.k,
            "n_products": row.n_products,
            "maxfrag": row.maxfrag,
            "coverage": row.coverage,
            "intersection": row.intersection,
            "validity": row.validity,
            "validity_per_product": row.validity_per_product,
            "undersampled_products": row.undersampled,
            "coverage_policy": "subset",
            "stereo_note": "comparisons use canonical SMILES",
        })
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_report(rows: list[DatasetScores], format: str) -> str:
    if format == "markdown":
        return render_markdown(rows)
    if format == "json":
        return render_json(rows)
    raise ValueError(f"unknown report format {format!r}")


def build_prediction_set(product_id: str, product_smiles: str,
                         raw_predictions: list[str],
                         pathways: list[GroundTruthPathway]) -> PredictionSet:
    return PredictionSet(
        product_id=product_id,
        product=parse_smiles(product_smiles),
        samples=tuple(parse_prediction(raw) for raw in raw_predictions),
        ground_truths=tuple(pathways),
    )
