"""Instruction-tuning data generation from reaction records.

Five tasks: retrosynthesis (two subtasks), product inference (two),
molecule design (three), molecule description (nine) and yield prediction.
Prompt wording lives in an external catalog (templates.txt ships as the
default), so corpora are regenerable under any catalog; every entry
records its template id and seed.

Generators are pure given (record, catalog, seed): the same inputs always
produce the same bytes. Completions carry molecule SMILES in record order
using each molecule's original spelling, so augmentation (seeded list
shuffling) changes surface order without touching canonical content.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from retrobench.descriptors import DescriptorRegistry
from retrobench.reactions import ReactionRecord
from retrobench.smiles import Molecule, check_validity, parse_smiles

log = logging.getLogger(__name__)

TASKS = ("retro", "forward", "design", "description", "yield")

_PLACEHOLDER = re.compile(r"\{(reactants|conditions|products|yield|properties|"
                          r"name_en|name_zh|description|iupac|smiles)\}")


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    template_id: str
    task: str
    subtask: int
    prompt: str
    completion: str


@dataclass(frozen=True)
class TemplateCatalog:
    templates: dict[str, Template]

    def get(self, task: str, subtask: int) -> Template:
        for template in self.templates.values():
            if template.task == task and template.subtask == subtask:
                return template
        raise CatalogError(f"no template for task {task!r} subtask {subtask}")


def parse_catalog(text: str) -> TemplateCatalog:
    templates: dict[str, Template] = {}
    for block in re.split(r"\n\s*\n", text):
        lines = [ln for ln in block.splitlines() if ln and not ln.startswith("#")]
        if not lines:
            continue
        fields: dict[str, str] = {}
        for line in lines:
            key, sep, value = line.partition(":")
            if not sep:
                raise CatalogError(f"malformed catalog line {line!r}")
            fields[key.strip()] = value.strip()
        missing = {"id", "task", "subtask", "prompt", "completion"} - set(fields)
        if missing:
            raise CatalogError(f"template block missing {sorted(missing)}")
        if fields["task"] not in TASKS:
            raise CatalogError(f"unknown task {fields['task']!r}")
        template_id = fields["id"]
        if template_id in templates:
            raise CatalogError(f"duplicate template id {template_id!r}")
        templates[template_id] = Template(
            template_id=template_id,
            task=fields["task"],
            subtask=int(fields["subtask"]),
            prompt=fields["prompt"],
            completion=fields["completion"],
        )
    return TemplateCatalog(templates)


def load_catalog(path: Optional[Path | str] = None) -> TemplateCatalog:
    if path is None:
        text = resources.files("retrobench").joinpath("data/templates.txt") \
            .read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_catalog(text)


def _render(pattern: str, values: dict[str, str]) -> str:
    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise CatalogError(f"placeholder {{{key}}} has no value")
        return values[key]

    return _PLACEHOLDER.sub(sub, pattern)


def _render_completion(pattern: str, values: dict[str, str]) -> str:
    """Like _render, but '; '-separated segments whose placeholders lack
    values are dropped instead of failing."""
    segments = []
    for segment in pattern.split("; "):
        needed = _PLACEHOLDER.findall(segment)
        if all(key in values for key in needed):
            segments.append(_PLACEHOLDER.sub(lambda m: values[m.group(1)], segment))
    return "; ".join(segments)


@dataclass(frozen=True)
class InstructionEntry:
    task: str
    subtask: int
    prompt: str
    completion: str
    source_record_id: str
    template_id: str
    seed: int

    def __post_init__(self):
        if not self.prompt or not self.completion:
            raise ValueError("prompt and completion must be non-empty")

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "subtask": self.subtask,
            "prompt": self.prompt,
            "completion": self.completion,
            "source_record_id": self.source_record_id,
            "template_id": self.template_id,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MoleculeMeta:
    smiles: Optional[str] = None
    iupac: Optional[str] = None
    name_en: Optional[str] = None
    name_zh: Optional[str] = None
    description: Optional[str] = None
    is_drug: bool = False
    meta_id: str = ""

    def __post_init__(self):
        if self.smiles is not None:
            mol = parse_smiles(self.smiles)
            if not check_validity(mol).valid:
                raise ValueError(f"meta SMILES is not valid: {self.smiles!r}")


def _mol_text(mol: Molecule) -> str:
    if mol.source is not None:
        return mol.source
    from retrobench.smiles import canonical_smiles
    return canonical_smiles(mol)


def _join(mols: tuple[Molecule, ...]) -> str:
    return ".".join(_mol_text(m) for m in mols)


def _reaction_values(rec: ReactionRecord) -> dict[str, str]:
    return {
        "reactants": _join(rec.reactants),
        "conditions": _join(rec.conditions),
        "products": _join(rec.products),
    }


def augment(rec: ReactionRecord, n: int, seed: int) -> list[ReactionRecord]:
    """n copies with independently shuffled reactant/condition/product
    lists; canonical keys are unchanged by construction."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = random.Random(f"augment:{seed}")
    out = []
    for _ in range(n):
        reactants = list(rec.reactants)
        conditions = list(rec.conditions)
        products = list(rec.products)
        rng.shuffle(reactants)
        rng.shuffle(conditions)
        rng.shuffle(products)
        out.append(ReactionRecord(
            tuple(reactants), tuple(conditions), tuple(products),
            rec.yield_percent, rec.source, rec.record_id, rec.invalid_fragments,
        ))
    return out


def gen_retro(rec: ReactionRecord, catalog: TemplateCatalog,
              seed: int = 0) -> list[InstructionEntry]:
    """Subtask 1 (predict reactants and catalysts) always; subtask 2
    (reactants given the catalyst) only when conditions exist."""
    values = _reaction_values(rec)
    entries = [_entry(catalog.get("retro", 1), values, rec.record_id, seed)]
    if rec.conditions:
        entries.append(_entry(catalog.get("retro", 2), values, rec.record_id, seed))
    return entries


def gen_forward(rec: ReactionRecord, catalog: TemplateCatalog,
                seed: int = 0) -> list[InstructionEntry]:
    values = _reaction_values(rec)
    entries = [_entry(catalog.get("forward", 1), values, rec.record_id, seed)]
    if rec.conditions:
        entries.append(_entry(catalog.get("forward", 2), values, rec.record_id, seed))
    return entries


def _entry(template: Template, values: dict[str, str], record_id: str,
           seed: int) -> InstructionEntry:
    return InstructionEntry(
        task=template.task,
        subtask=template.subtask,
        prompt=_render(template.prompt, values),
        completion=_render_completion(template.completion, values),
        source_record_id=record_id,
        template_id=template.template_id,
        seed=seed,
    )


_DESIGN_ROLES = {1: ("conditions",), 2: ("reactants", "conditions"),
                 3: ("reactants", "conditions", "products")}
_ROLE_LABEL = {"reactants": "reactant", "conditions": "catalyst",
               "products": "product"}


def _format_value(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:.3f}"


def gen_design(rec: ReactionRecord, catalog: TemplateCatalog,
               registry: DescriptorRegistry, rng: random.Random,
               seed: int = 0) -> Optional[InstructionEntry]:
    """Pick one of the three design subtasks uniformly, draw 1-20 distinct
    descriptors, compute each on a random molecule of the in-scope roles and
    render the name=value constraints into the prompt."""
    subtask = rng.randrange(1, 4)
    if subtask in (1, 2) and not rec.conditions:
        log.warning("design subtask %d skipped for %s: record has no conditions",
                    subtask, rec.record_id or "<record>")
        return None
    roles = [r for r in _DESIGN_ROLES[subtask] if rec.molecules(r)]
    slots = [
        (role, index)
        for role in roles
        for index in range(len(rec.molecules(role)))
    ]
    count = min(rng.randint(1, 20), len(registry))
    drawn = rng.sample(registry.identifiers(), count)
    constraints = []
    for ident in drawn:
        role, index = slots[rng.randrange(len(slots))]
        value = registry.compute(rec.molecules(role)[index], ident)
        label = _ROLE_LABEL[role]
        constraints.append(f"{label} {index + 1} {ident} = {_format_value(value)}")
    values = _reaction_values(rec)
    values["properties"] = "; ".join(constraints)
    return _entry(catalog.get("design", subtask), values, rec.record_id, seed)


_DESCRIPTION_FIELDS = {
    1: ("name_zh",), 2: ("name_en",), 3: ("description",),
    4: ("description",), 5: ("smiles",), 6: ("iupac",),
    7: ("name_zh",), 8: ("name_en",), 9: ("description",),
}
_DRUG_SUBTASKS = (7, 8, 9)


def gen_description(meta: MoleculeMeta, catalog: TemplateCatalog,
                    seed: int = 0) -> list[InstructionEntry]:
    """One entry per subtask whose prompt fields are present and whose
    completion adds at least one field beyond the prompt; missing-field
    subtasks are skipped silently."""
    present = {
        key: value for key, value in (
            ("smiles", meta.smiles), ("iupac", meta.iupac),
            ("name_en", meta.name_en), ("name_zh", meta.name_zh),
            ("description", meta.description),
        ) if value
    }
    entries = []
    for subtask in range(1, 10):
        if subtask in _DRUG_SUBTASKS and not meta.is_drug:
            continue
        prompt_fields = _DESCRIPTION_FIELDS[subtask]
        if any(f not in present for f in prompt_fields):
            continue
        template = catalog.get("description", subtask)
        completion_fields = set(_PLACEHOLDER.findall(template.completion))
        informative = completion_fields - set(prompt_fields)
        if not (informative & set(present)):
            continue
        entries.append(_entry(template, present, meta.meta_id, seed))
    return entries


def gen_yield(rec: ReactionRecord, catalog: TemplateCatalog,
              seed: int = 0) -> Optional[InstructionEntry]:
    if rec.yield_percent is None:
        return None
    values = _reaction_values(rec)
    values["yield"] = f"{rec.yield_percent:.1f}%"
    return _entry(catalog.get("yield", 1), values, rec.record_id, seed)


def generate_corpus(
    records: list[ReactionRecord],
    catalog: TemplateCatalog,
    registry: DescriptorRegistry,
    root_seed: int = 0,
    design_rate: float = 1.0,
    augment_n: int = 1,
    metas: Optional[list[MoleculeMeta]] = None,
) -> list[InstructionEntry]:
    """Deterministic corpus generation; per-record seeds derive from the
    root seed by record index, so generation parallelizes by record while
    staying byte-reproducible."""
    entries: list[InstructionEntry] = []
    for index, rec in enumerate(records):
        seed = root_seed * 1_000_003 + index
        copies = [rec] if augment_n == 1 else augment(rec, augment_n, seed)
        for copy_index, copy in enumerate(copies):
            rng = random.Random(f"{seed}:{copy_index}")
            entries.extend(gen_retro(copy, catalog, seed))
            entries.extend(gen_forward(copy, catalog, seed))
            if design_rate > 0 and rng.random() < design_rate:
                design = gen_design(copy, catalog, registry, rng, seed)
                if design is not None:
                    entries.append(design)
            yield_entry = gen_yield(copy, catalog, seed)
            if yield_entry is not None:
                entries.append(yield_entry)
    for index, meta in enumerate(metas or []):
        seed = root_seed * 1_000_003 + len(records) + index
        entries.extend(gen_description(meta, catalog, seed))
    return entries
