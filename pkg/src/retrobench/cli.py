"""Command-line harness: ingestion, generation, tokenization, sampling,
evaluation and reporting as reproducible runs.

Subcommands: canonicalize, validate, evaluate, sample, gen-instruct,
train-vocab, tokenize, overlap, fingerprint. Global flags mirror config
keys and win over the config file. Exit codes: 0 success, 2 config error,
3 input data error, 4 endpoint failure.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from retrobench import bpe
from retrobench import fingerprint as fp
from retrobench.config import ConfigError, Settings, load_settings
from retrobench.datasets import (
    DatasetError, ingest_dataset, load_manifest,
)
from retrobench.descriptors import build_default_registry
from retrobench.instruct import (
    CatalogError, MoleculeMeta, generate_corpus, load_catalog,
)
from retrobench.metrics import (
    GroundTruthPathway, PredictionSet, evaluate_dataset, parse_prediction,
    render_json, render_markdown,
)
from retrobench.reactions import (
    WITH_CONDITIONS, WITHOUT_CONDITIONS, canonical_key, group_by_product,
    overlap as overlap_records, product_key,
)
from retrobench.runio import RunManifest, atomic_write_bytes, atomic_write_text
from retrobench.sampling import EndpointError, sample_prompts
from retrobench.smiles import (
    InvalidMoleculeError, SmilesParseError, canonical_smiles, check_validity,
    parse_smiles,
)

log = logging.getLogger("retrobench")


class DataError(Exception):
    """Problems in input data files; maps to exit code 3."""


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML run configuration; flags override its keys.")
@click.option("--seed", type=int, default=None, help="root RNG seed")
@click.option("--out", type=click.Path(), default=None, help="output directory")
@click.option("--stereo", type=click.Choice(["aware", "agnostic"]), default=None,
              help="stereo-aware or stereo-agnostic comparisons")
@click.option("-k", "k_values", default=None,
              help="comma-separated Top-k list, e.g. 1,10,30")
@click.option("-v", "--verbose", is_flag=True, default=False)
@click.pass_context
def cli(ctx, config_path, seed, out, stereo, k_values, verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    settings = load_settings(config_path)
    settings.set_override("run", "seed", seed)
    settings.set_override("run", "out", out)
    settings.set_override("run", "stereo", stereo)
    settings.set_override("run", "k", k_values)
    ctx.obj = settings


def _read_lines(source: str) -> list[str]:
    if source == "-":
        return [line.rstrip("\n") for line in sys.stdin]
    path = Path(source)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return path.read_text(encoding="utf-8").splitlines()


# -- stream commands -----------------------------------------------------------


@cli.command()
@click.argument("source", default="-")
@click.pass_obj
def canonicalize(settings: Settings, source: str):
    """Canonicalize SMILES, one per line (file or '-' for stdin)."""
    stereo = settings.stereo()
    failures = 0
    for line_num, line in enumerate(_read_lines(source), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            click.echo(canonical_smiles(parse_smiles(text), stereo=stereo))
        except (SmilesParseError, InvalidMoleculeError) as exc:
            failures += 1
            click.echo(f"line {line_num}: {exc}", err=True)
    if failures:
        raise DataError(f"{failures} line(s) failed to canonicalize")


@cli.command()
@click.argument("source", default="-")
def validate(source: str):
    """Validity-check SMILES, one JSON report per line."""
    for line in _read_lines(source):
        text = line.strip()
        if not text:
            continue
        try:
            mol = parse_smiles(text)
        except SmilesParseError as exc:
            click.echo(json.dumps({
                "smiles": text, "valid": False,
                "failures": [{"atom": None, "reason": f"parse error: {exc}"}],
            }, sort_keys=True))
            continue
        report = check_validity(mol)
        click.echo(json.dumps({
            "smiles": text,
            "valid": report.valid,
            "failures": [
                {"atom": f.atom_index, "reason": f.reason} for f in report.failures
            ],
        }, sort_keys=True))


@cli.command()
@click.option("--table", "table_path", type=click.Path(), required=True,
              help="merge-table file from train-vocab")
@click.argument("source", default="-")
def tokenize(table_path: str, source: str):
    """Tokenize text lines with a trained merge table (tokens space-joined)."""
    if not Path(table_path).exists():
        raise DataError(f"merge table not found: {table_path}")
    table = bpe.read_merge_table(table_path)
    for line in _read_lines(source):
        click.echo(" ".join(bpe.encode(line, table)))


# -- dataset helpers -------------------------------------------------------------


def _load_manifests(settings: Settings, flags: tuple[str, ...]):
    if flags:
        settings.overrides["dataset.manifests"] = list(flags)
    paths = settings.dataset_manifests()
    if not paths:
        raise ConfigError("no dataset manifests given (--manifest or [[dataset]])")
    manifests = []
    for path in paths:
        if not Path(path).exists():
            raise DataError(f"manifest not found: {path}")
        try:
            manifests.append(load_manifest(path))
        except DatasetError as exc:
            raise ConfigError(str(exc)) from exc
    return manifests


def _ingest(manifest) -> list:
    try:
        return ingest_dataset(manifest)
    except DatasetError as exc:
        raise DataError(str(exc)) from exc


# -- evaluate ---------------------------------------------------------------------


def _read_prediction_rows(path: Path) -> list[dict]:
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for row_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise DataError(f"predictions row {row_num}: bad JSON ({exc})") from exc
            missing = {"product_id", "product", "predictions"} - set(row)
            if missing:
                raise DataError(
                    f"predictions row {row_num}: missing fields {sorted(missing)}")
            if not isinstance(row["predictions"], list):
                raise DataError(f"predictions row {row_num}: predictions must be a list")
            row["_row"] = row_num
            rows.append(row)
    return rows


@cli.command()
@click.option("--manifest", "manifests", multiple=True, type=click.Path(),
              help="dataset manifest (repeatable)")
@click.option("--predictions", "predictions_path", type=click.Path(), default=None)
@click.pass_obj
def evaluate(settings: Settings, manifests, predictions_path):
    """Score predictions against ground-truth datasets; write reports."""
    if predictions_path:
        settings.set_override("predictions", "file", predictions_path)
    if settings.predictions_file() is not None and settings.endpoint() is not None:
        raise ConfigError("exactly one prediction source: remove [endpoint] "
                          "or [predictions] from the config")
    pred_file = settings.predictions_file()
    if pred_file is None:
        raise ConfigError("evaluate needs a predictions file "
                          "(--predictions or [predictions].file)")
    out_dir = settings.out_dir()
    stereo = settings.stereo()
    ks = settings.ks()
    loaded = _load_manifests(settings, manifests)

    manifest = RunManifest("evaluate", settings.snapshot())
    manifest.note(f"stereo={'aware' if stereo else 'agnostic'}")
    manifest.start("evaluate")

    rows = _read_prediction_rows(pred_file)
    pred_index: dict[str, dict] = {}
    for row in rows:
        try:
            key = canonical_smiles(parse_smiles(str(row["product"])), stereo=stereo)
        except (SmilesParseError, InvalidMoleculeError) as exc:
            raise DataError(f"predictions row {row['_row']}: bad product ({exc})")
        if key in pred_index:
            log.warning("predictions row %d: duplicate product, first row wins",
                        row["_row"])
            continue
        pred_index[key] = row
    manifest.record_input("prediction_rows", len(rows))

    all_scores = []
    all_audits = []
    for ds in loaded:
        records = _ingest(ds)
        manifest.record_input(ds.name, len(records))
        groups = group_by_product(records, stereo=stereo)
        missing = []
        sets = []
        for pkey in sorted(groups):
            group = groups[pkey]
            row = pred_index.get(pkey)
            if row is None:
                missing.append(group[0].record_id)
                continue
            pathways = tuple(GroundTruthPathway.from_record(r) for r in group)
            samples = tuple(parse_prediction(str(raw)) for raw in row["predictions"])
            if not samples:
                raise DataError(
                    f"predictions row {row['_row']}: empty predictions list")
            sets.append(PredictionSet(
                product_id=str(row["product_id"]),
                product=group[0].products[0],
                samples=samples,
                ground_truths=pathways,
            ))
        if missing:
            preview = ", ".join(missing[:10])
            raise DataError(
                f"dataset {ds.name}: no predictions for {len(missing)} product(s): "
                f"{preview}{'...' if len(missing) > 10 else ''}")
        scores, audits = evaluate_dataset(ds.name, sets, ks, stereo=stereo)
        all_scores.extend(scores)
        all_audits.extend(audits)

    manifest.stop("evaluate")
    markdown = render_markdown(all_scores)
    atomic_write_text(out_dir / "report.md", markdown)
    atomic_write_text(out_dir / "report.json", render_json(all_scores))
    audit_lines = "".join(
        json.dumps(audit.to_json(), sort_keys=True) + "\n" for audit in all_audits
    )
    atomic_write_text(out_dir / "audit.jsonl", audit_lines)
    for name in ("report.md", "report.json", "audit.jsonl"):
        manifest.record_file(out_dir / name)
    manifest.write(out_dir)
    click.echo(markdown, nl=False)


# -- sample -----------------------------------------------------------------------


@cli.command()
@click.option("--prompts", "prompts_path", type=click.Path(), required=True,
              help="JSONL rows {product_id, product, prompt}")
@click.pass_obj
def sample(settings: Settings, prompts_path):
    """Sample n predictions per prompt from the configured endpoint."""
    endpoint = settings.endpoint()
    if endpoint is None:
        raise ConfigError("sample needs an [endpoint] section with a url")
    if settings.predictions_file() is not None:
        raise ConfigError("exactly one prediction source: remove [predictions] "
                          "from the config when sampling")
    out_dir = settings.out_dir()
    path = Path(prompts_path)
    if not path.exists():
        raise DataError(f"prompts file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for row_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise DataError(f"prompts row {row_num}: bad JSON ({exc})") from exc
            if "prompt" not in row:
                raise DataError(f"prompts row {row_num}: missing 'prompt'")
            rows.append(row)
    if not rows:
        raise DataError("prompts file is empty")

    manifest = RunManifest("sample", settings.snapshot())
    manifest.record_input("prompts", len(rows))
    manifest.start("sample")
    results = sample_prompts([str(r["prompt"]) for r in rows], endpoint)
    manifest.stop("sample")

    out_lines = []
    failures = []
    for row, result in zip(rows, results):
        payload = {
            "product_id": row.get("product_id", f"prompt-{result.prompt_index + 1}"),
            "predictions": result.samples,
        }
        if "product" in row:
            payload["product"] = row["product"]
        if result.error:
            payload["error"] = result.error
            failures.append((result.prompt_index + 1, result.error))
        out_lines.append(json.dumps(payload, sort_keys=True) + "\n")
    manifest.record_input("requests", sum(r.requests for r in results))
    manifest.record_input("retries", sum(r.retries for r in results))

    target = out_dir / "predictions.jsonl"
    if failures:
        target = out_dir / "predictions.partial.jsonl"
    atomic_write_text(target, "".join(out_lines))
    manifest.record_file(target)
    manifest.write(out_dir)
    if failures:
        for prompt_num, error in failures[:10]:
            click.echo(f"prompt {prompt_num}: {error}", err=True)
        raise EndpointError(
            f"{len(failures)} prompt(s) failed permanently; partial output in {target}")
    click.echo(f"wrote {target} ({len(rows)} prompts x {endpoint.n} samples)")


# -- gen-instruct --------------------------------------------------------------------


@cli.command("gen-instruct")
@click.option("--manifest", "manifests", multiple=True, type=click.Path())
@click.option("--meta", "meta_path", type=click.Path(), default=None,
              help="JSONL molecule metadata for description tasks")
@click.option("--templates", "templates_path", type=click.Path(), default=None)
@click.option("--design-rate", type=float, default=None,
              help="fraction of records that spawn a design entry (default 1.0)")
@click.option("--augment", "augment_n", type=int, default=None,
              help="shuffled copies per record (default 1)")
@click.pass_obj
def gen_instruct(settings: Settings, manifests, meta_path, templates_path,
                 design_rate, augment_n):
    """Generate instruction prompt/completion pairs from reaction datasets."""
    settings.set_override("instruct", "design_rate", design_rate)
    settings.set_override("instruct", "augment", augment_n)
    settings.set_override("instruct", "templates", templates_path)
    out_dir = settings.out_dir()
    loaded = _load_manifests(settings, manifests)

    templates = settings.get("instruct", "templates")
    try:
        catalog = load_catalog(templates)
    except (CatalogError, OSError) as exc:
        raise ConfigError(f"bad template catalog: {exc}") from exc
    registry = build_default_registry()

    metas = []
    if meta_path:
        if not Path(meta_path).exists():
            raise DataError(f"meta file not found: {meta_path}")
        with open(meta_path, encoding="utf-8") as fh:
            for row_num, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    metas.append(MoleculeMeta(
                        smiles=row.get("smiles"), iupac=row.get("iupac"),
                        name_en=row.get("name_en"), name_zh=row.get("name_zh"),
                        description=row.get("description"),
                        is_drug=bool(row.get("is_drug", False)),
                        meta_id=str(row.get("id", f"meta:{row_num}")),
                    ))
                except (ValueError, SmilesParseError) as exc:
                    raise DataError(f"meta row {row_num}: {exc}") from exc

    manifest = RunManifest("gen-instruct", settings.snapshot())
    manifest.start("generate")
    records = []
    for ds in loaded:
        ds_records = _ingest(ds)
        manifest.record_input(ds.name, len(ds_records))
        records.extend(ds_records)
    entries = generate_corpus(
        records, catalog, registry,
        root_seed=settings.seed(),
        design_rate=float(settings.get("instruct", "design_rate", 1.0)),
        augment_n=int(settings.get("instruct", "augment", 1)),
        metas=metas,
    )
    manifest.stop("generate")

    corpus_path = out_dir / "corpus.jsonl"
    atomic_write_text(corpus_path, "".join(
        json.dumps(e.to_json(), sort_keys=True) + "\n" for e in entries
    ))
    # registry export for prompt-template authors
    atomic_write_text(out_dir / "descriptors.txt", registry.export_text())
    manifest.record_input("entries", len(entries))
    manifest.record_file(corpus_path)
    manifest.record_file(out_dir / "descriptors.txt")
    manifest.write(out_dir)
    counts: dict[str, int] = {}
    for entry in entries:
        counts[entry.task] = counts.get(entry.task, 0) + 1
    click.echo(f"wrote {corpus_path}: " + ", ".join(
        f"{task}={count}" for task, count in sorted(counts.items())))


# -- train-vocab / overlap / fingerprint ----------------------------------------------


@cli.command("train-vocab")
@click.option("--input", "inputs", multiple=True, type=click.Path(), required=True,
              help="text file(s), one training string per line")
@click.option("--merges", "n_merges", type=int, default=None,
              help="number of merges to learn (default 1000)")
@click.pass_obj
def train_vocab(settings: Settings, inputs, n_merges):
    """Train a chemical BPE merge table."""
    settings.set_override("vocab", "merges", n_merges)
    out_dir = settings.out_dir()
    corpus = []
    for source in inputs:
        corpus.extend(line for line in _read_lines(source) if line)
    if not corpus:
        raise DataError("training corpus is empty")
    merges = int(settings.get("vocab", "merges", 1000))

    manifest = RunManifest("train-vocab", settings.snapshot())
    manifest.record_input("corpus_lines", len(corpus))
    manifest.start("train")
    table = bpe.train(corpus, merges)
    manifest.stop("train")

    table_path = out_dir / "merges.txt"
    out_dir.mkdir(parents=True, exist_ok=True)
    bpe.write_merge_table(table, table_path)
    manifest.record_input("learned_merges", len(table.merges))
    manifest.record_input("vocab_size", len(table.vocab))
    manifest.record_file(table_path)
    manifest.write(out_dir)
    click.echo(f"wrote {table_path}: {len(table.merges)} merges, "
               f"vocab {len(table.vocab)}")


@cli.command()
@click.option("--a", "manifest_a", type=click.Path(), required=True)
@click.option("--b", "manifest_b", type=click.Path(), required=True)
@click.pass_obj
def overlap(settings: Settings, manifest_a, manifest_b):
    """Audit reaction overlap between two datasets (both key modes)."""
    out_dir = settings.out_dir()
    stereo = settings.stereo()
    loaded = []
    for path in (manifest_a, manifest_b):
        if not Path(path).exists():
            raise DataError(f"manifest not found: {path}")
        loaded.append(load_manifest(path))
    records_a = _ingest(loaded[0])
    records_b = _ingest(loaded[1])

    manifest = RunManifest("overlap", settings.snapshot())
    manifest.record_input(loaded[0].name, len(records_a))
    manifest.record_input(loaded[1].name, len(records_b))
    manifest.start("overlap")
    reports = {
        mode: overlap_records(records_a, records_b, mode, stereo=stereo)
        for mode in (WITHOUT_CONDITIONS, WITH_CONDITIONS)
    }
    manifest.stop("overlap")

    payload = {
        "a": loaded[0].name,
        "b": loaded[1].name,
        "note": "keys use canonicalized SMILES",
        "modes": {
            mode: {
                "count": rep.count,
                "distinct_a": rep.distinct_a,
                "distinct_b": rep.distinct_b,
                "matching_keys": list(rep.matching_keys),
            }
            for mode, rep in reports.items()
        },
    }
    lines = [
        f"| Mode | Overlap | Distinct in {loaded[0].name} | Distinct in {loaded[1].name} |",
        "|---|---|---|---|",
    ]
    for mode, rep in reports.items():
        lines.append(f"| {mode} | {rep.count} | {rep.distinct_a} | {rep.distinct_b} |")
    markdown = "\n".join(lines) + "\n"

    atomic_write_text(out_dir / "overlap.json",
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")
    atomic_write_text(out_dir / "overlap.md", markdown)
    manifest.record_file(out_dir / "overlap.json")
    manifest.record_file(out_dir / "overlap.md")
    manifest.write(out_dir)
    click.echo(markdown, nl=False)


@cli.command()
@click.option("--manifest", "manifests", multiple=True, type=click.Path())
@click.option("--radius", type=int, default=None)
@click.option("--n-bits", type=int, default=None)
@click.option("--knn", "knn_k", type=int, default=None,
              help="emit a k-nearest-neighbor edge list")
@click.option("--threads", type=int, default=1)
@click.pass_obj
def fingerprint(settings: Settings, manifests, radius, n_bits, knn_k, threads):
    """Compute differential reaction fingerprints (and optional k-NN edges)."""
    settings.set_override("fingerprint", "radius", radius)
    settings.set_override("fingerprint", "n_bits", n_bits)
    settings.set_override("fingerprint", "knn", knn_k)
    out_dir = settings.out_dir()
    loaded = _load_manifests(settings, manifests)
    radius = int(settings.get("fingerprint", "radius", fp.DEFAULT_RADIUS))
    n_bits = int(settings.get("fingerprint", "n_bits", fp.DEFAULT_N_BITS))
    knn_k = settings.get("fingerprint", "knn")

    manifest = RunManifest("fingerprint", settings.snapshot())
    records = []
    for ds in loaded:
        ds_records = _ingest(ds)
        manifest.record_input(ds.name, len(ds_records))
        records.extend(ds_records)
    if not records:
        raise DataError("no records to fingerprint")

    manifest.start("fingerprint")
    fps = fp.drfp_many(records, radius=radius, n_bits=n_bits, threads=threads)
    manifest.stop("fingerprint")
    ids = [rec.record_id for rec in records]

    out_dir.mkdir(parents=True, exist_ok=True)
    fp.write_fingerprints(fps, out_dir / "fingerprints.drfp", record_ids=ids)
    fp.write_fingerprints_jsonl(fps, out_dir / "fingerprints.jsonl", record_ids=ids)
    manifest.record_file(out_dir / "fingerprints.drfp")
    manifest.record_file(out_dir / "fingerprints.jsonl")
    if knn_k is not None:
        manifest.start("knn")
        edges = fp.knn_edges(fps, int(knn_k))
        manifest.stop("knn")
        fp.write_edges_csv(edges, out_dir / "edges.csv")
        manifest.record_file(out_dir / "edges.csv")
    manifest.write(out_dir)
    click.echo(f"wrote {len(fps)} fingerprints to {out_dir}")


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        click.echo("aborted", err=True)
        return 2
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except (DataError, DatasetError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 3
    except EndpointError as exc:
        click.echo(f"endpoint error: {exc}", err=True)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
