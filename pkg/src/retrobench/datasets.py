"""Dataset manifests, ingestion (CSV / JSON-lines) and record serialization."""

from __future__ import annotations

import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from retrobench.reactions import (
    ReactionParseError, ReactionRecord, parse_reaction,
)

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    path: Path
    format: str  # "csv" | "jsonl"
    columns: dict[str, str]  # roles: reactants, products, conditions?, id?, yield?
    count: Optional[int] = None
    aliases: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.format not in ("csv", "jsonl"):
            raise DatasetError(f"unsupported dataset format {self.format!r}")
        for required in ("reactants", "products"):
            if required not in self.columns:
                raise DatasetError(f"manifest must map a {required!r} column")


def load_manifest(path: Path | str) -> DatasetManifest:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    try:
        data_path = Path(raw["path"])
        if not data_path.is_absolute():
            data_path = path.parent / data_path
        return DatasetManifest(
            name=raw["name"],
            path=data_path,
            format=raw["format"],
            columns={k: str(v) for k, v in raw["columns"].items()},
            count=raw.get("count"),
            aliases=tuple(raw.get("aliases", ())),
        )
    except KeyError as exc:
        raise DatasetError(f"manifest {path} is missing field {exc}") from exc


def _iter_rows(manifest: DatasetManifest):
    if manifest.format == "csv":
        with open(manifest.path, newline="", encoding="utf-8") as fh:
            for row_num, row in enumerate(csv.DictReader(fh), start=1):
                yield row_num, row
    else:
        with open(manifest.path, encoding="utf-8") as fh:
            for row_num, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                yield row_num, json.loads(line)


def ingest_dataset(manifest: DatasetManifest) -> list[ReactionRecord]:
    """One record per row; rows that fail to parse (or whose molecules are
    chemically invalid, useless as ground truth) are logged and skipped."""
    if not manifest.path.exists():
        raise DatasetError(f"dataset file not found: {manifest.path}")
    columns = manifest.columns
    records: list[ReactionRecord] = []
    skipped = 0
    for row_num, row in _iter_rows(manifest):
        try:
            reactants = str(row[columns["reactants"]] or "")
            products = str(row[columns["products"]] or "")
        except KeyError as exc:
            raise DatasetError(
                f"{manifest.name} row {row_num}: missing column {exc}") from exc
        conditions = ""
        if "conditions" in columns:
            conditions = str(row.get(columns["conditions"]) or "")
        record_id = manifest.name + f":{row_num}"
        if "id" in columns and row.get(columns["id"]):
            record_id = str(row[columns["id"]])
        text = f"{reactants}>{conditions}>{products}"
        try:
            rec = parse_reaction(text, source=manifest.name, record_id=record_id)
        except ReactionParseError as exc:
            log.warning("%s row %d skipped: %s", manifest.name, row_num, exc)
            skipped += 1
            continue
        if rec.invalid_fragments:
            reasons = "; ".join(
                f"{i.role}[{i.index}] {','.join(i.reasons)}" for i in rec.invalid_fragments
            )
            log.warning("%s row %d skipped (invalid molecules): %s",
                        manifest.name, row_num, reasons)
            skipped += 1
            continue
        yield_percent = None
        if "yield" in columns and row.get(columns["yield"]) not in (None, ""):
            try:
                yield_percent = float(row[columns["yield"]])
            except (TypeError, ValueError):
                log.warning("%s row %d: unreadable yield %r ignored",
                            manifest.name, row_num, row.get(columns["yield"]))
            else:
                if not 0.0 <= yield_percent <= 100.0:
                    clamped = min(100.0, max(0.0, yield_percent))
                    log.warning("%s row %d: yield %.3f clamped to %.1f",
                                manifest.name, row_num, yield_percent, clamped)
                    yield_percent = clamped
        if yield_percent is not None:
            rec = ReactionRecord(
                rec.reactants, rec.conditions, rec.products,
                yield_percent, rec.source, rec.record_id, rec.invalid_fragments,
            )
        records.append(rec)
    if manifest.count is not None and len(records) != manifest.count:
        log.warning("%s: ingested %d records, manifest declares %d (%d skipped)",
                    manifest.name, len(records), manifest.count, skipped)
    return records


# -- JSON-lines record serialization ----------------------------------------


def record_to_json(rec: ReactionRecord) -> dict:
    from retrobench.smiles import canonical_smiles

    def strs(mols) -> list[str]:
        out = []
        for m in mols:
            try:
                out.append(canonical_smiles(m))
            except ValueError:
                out.append(m.source or "")
        return out

    return {
        "id": rec.record_id,
        "source": rec.source,
        "reactants": strs(rec.reactants),
        "conditions": strs(rec.conditions),
        "products": strs(rec.products),
        "yield": rec.yield_percent,
    }


def write_records_jsonl(records: list[ReactionRecord], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")


def read_records_jsonl(path: Path | str) -> list[ReactionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            text = ">".join((
                ".".join(row["reactants"]),
                ".".join(row.get("conditions", [])),
                ".".join(row["products"]),
            ))
            rec = parse_reaction(text, source=row.get("source", ""),
                                 record_id=row.get("id", ""))
            if row.get("yield") is not None:
                rec = ReactionRecord(
                    rec.reactants, rec.conditions, rec.products,
                    float(row["yield"]), rec.source, rec.record_id,
                    rec.invalid_fragments,
                )
            records.append(rec)
    return records
