import json
import subprocess
import sys

import pytest

from retrobench.cli import main
from stub_server import StubServer

CASE1_REACTANTS = "CN.O=[N+]([O-])c1cnc(Cl)nc1Cl"
CASE1_CONDITION = "C1COCC1"
CASE1_PRODUCT = "CNc1nc(Cl)ncc1[N+](=O)[O-]"


def write_dataset(tmp_path, name="demo", rows=None):
    """CSV dataset + manifest; default three condition-bearing reactions."""
    if rows is None:
        rows = [
            (CASE1_REACTANTS, CASE1_CONDITION, CASE1_PRODUCT),
            ("CCO.CC(=O)O", "OS(=O)(=O)O", "CCOC(C)=O"),
            ("c1ccccc1.ClCl", "[Fe]", "Clc1ccccc1"),
        ]
    csv_path = tmp_path / f"{name}.csv"
    lines = ["reactants,conditions,products"]
    for r, c, p in rows:
        lines.append(f"{r},{c},{p}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest = tmp_path / f"{name}.toml"
    manifest.write_text(
        f'name = "{name}"\npath = "{name}.csv"\nformat = "csv"\n'
        "[columns]\nreactants = \"reactants\"\nconditions = \"conditions\"\n"
        "products = \"products\"\n",
        encoding="utf-8",
    )
    return manifest, rows


def write_echo_predictions(tmp_path, rows, k=1, name="preds.jsonl"):
    path = tmp_path / name
    with open(path, "w", encoding="utf-8") as fh:
        for index, (r, c, p) in enumerate(rows):
            fh.write(json.dumps({
                "product_id": f"p{index}",
                "product": p,
                "predictions": [f"{r}>{c}>{p}"] * k,
            }) + "\n")
    return path


def test_evaluate_echo_scores_100(tmp_path, capsys):
    manifest, rows = write_dataset(tmp_path)
    preds = write_echo_predictions(tmp_path, rows)
    out = tmp_path / "run"
    code = main(["--out", str(out), "-k", "1", "evaluate",
                 "--manifest", str(manifest), "--predictions", str(preds)])
    assert code == 0
    report = (out / "report.md").read_text()
    assert "| demo | 1 | 3 | 100.0 | 100.0 | 100.0 | 100.0 |" in report
    assert (out / "report.json").exists()
    assert (out / "audit.jsonl").exists()
    assert (out / "run_manifest.json").exists()
    audits = [json.loads(l) for l in (out / "audit.jsonl").read_text().splitlines()]
    assert len(audits) == 3
    assert all(a["maxfrag"] and a["coverage"] for a in audits)


def test_evaluate_is_byte_deterministic(tmp_path):
    manifest, rows = write_dataset(tmp_path)
    preds = write_echo_predictions(tmp_path, rows, k=3)
    outs = []
    for run in ("run1", "run2"):
        out = tmp_path / run
        code = main(["--out", str(out), "-k", "1,3", "evaluate",
                     "--manifest", str(manifest), "--predictions", str(preds)])
        assert code == 0
        outs.append(out)
    for name in ("report.md", "report.json", "audit.jsonl"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_evaluate_missing_predictions_exit_3(tmp_path, capsys):
    manifest, rows = write_dataset(tmp_path)
    preds = write_echo_predictions(tmp_path, rows[:1])
    code = main(["--out", str(tmp_path / "run"), "evaluate",
                 "--manifest", str(manifest), "--predictions", str(preds)])
    assert code == 3
    err = capsys.readouterr().err
    assert "no predictions" in err and "demo:" in err


def test_evaluate_malformed_prediction_row_exit_3(tmp_path, capsys):
    manifest, rows = write_dataset(tmp_path)
    preds = tmp_path / "bad.jsonl"
    preds.write_text('{"product_id": "x"}\n', encoding="utf-8")
    code = main(["--out", str(tmp_path / "run"), "evaluate",
                 "--manifest", str(manifest), "--predictions", str(preds)])
    assert code == 3
    assert "row 1" in capsys.readouterr().err


def test_evaluate_without_predictions_exit_2(tmp_path, capsys):
    manifest, _ = write_dataset(tmp_path)
    code = main(["--out", str(tmp_path / "run"), "evaluate",
                 "--manifest", str(manifest)])
    assert code == 2


def test_evaluate_intersection_na_rendering(tmp_path):
    rows = [("CCO.CN", "", "CCNC")]
    manifest, _ = write_dataset(tmp_path, name="nocond", rows=rows)
    preds = write_echo_predictions(tmp_path, rows)
    out = tmp_path / "run"
    code = main(["--out", str(out), "-k", "1", "evaluate",
                 "--manifest", str(manifest), "--predictions", str(preds)])
    assert code == 0
    assert "—" in (out / "report.md").read_text()


def test_config_file_with_flag_override(tmp_path):
    manifest, rows = write_dataset(tmp_path)
    preds = write_echo_predictions(tmp_path, rows)
    config = tmp_path / "run.toml"
    config.write_text(
        f'[run]\nout = "cfgout"\nk = [1]\n\n'
        f'[[dataset]]\nmanifest = "demo.toml"\n\n'
        f'[predictions]\nfile = "preds.jsonl"\n',
        encoding="utf-8",
    )
    out = tmp_path / "flagout"
    code = main(["--config", str(config), "--out", str(out), "evaluate"])
    assert code == 0
    assert (out / "report.md").exists()
    assert not (tmp_path / "cfgout").exists()


def test_canonicalize_stream(tmp_path, capsys):
    source = tmp_path / "in.txt"
    source.write_text("OCC\nCCO\n", encoding="utf-8")
    code = main(["canonicalize", str(source)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == lines[1]


def test_canonicalize_bad_line_exit_3(tmp_path, capsys):
    source = tmp_path / "in.txt"
    source.write_text("CCO\nC1CC\n", encoding="utf-8")
    code = main(["canonicalize", str(source)])
    assert code == 3
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 1
    assert "line 2" in captured.err


def test_validate_stream(tmp_path, capsys):
    source = tmp_path / "in.txt"
    source.write_text("CCO\nC(C)(C)(C)(C)C\nC1CC\n", encoding="utf-8")
    code = main(["validate", str(source)])
    assert code == 0
    rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert [r["valid"] for r in rows] == [True, False, False]
    assert rows[1]["failures"][0]["reason"] == "valence exceeded"


def test_gen_instruct_counts(tmp_path, capsys):
    rows = [(CASE1_REACTANTS, CASE1_CONDITION, CASE1_PRODUCT)] * 10
    csv_path = tmp_path / "ten.csv"
    lines = ["reactants,conditions,products,yield"]
    for r, c, p in rows:
        lines.append(f'"{r}","{c}","{p}",87.0')
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest = tmp_path / "ten.toml"
    manifest.write_text(
        'name = "ten"\npath = "ten.csv"\nformat = "csv"\ncount = 10\n'
        "[columns]\nreactants = \"reactants\"\nconditions = \"conditions\"\n"
        "products = \"products\"\nyield = \"yield\"\n",
        encoding="utf-8",
    )
    out = tmp_path / "run"
    code = main(["--out", str(out), "--seed", "7", "gen-instruct",
                 "--manifest", str(manifest)])
    assert code == 0
    entries = [json.loads(l) for l in (out / "corpus.jsonl").read_text().splitlines()]
    by_task = {}
    for e in entries:
        by_task.setdefault(e["task"], []).append(e)
    assert len(by_task["retro"]) == 20
    assert len(by_task["forward"]) == 20
    assert len(by_task["yield"]) == 10

    out2 = tmp_path / "run2"
    code = main(["--out", str(out2), "--seed", "7", "gen-instruct",
                 "--manifest", str(manifest)])
    assert code == 0
    assert (out / "corpus.jsonl").read_bytes() == (out2 / "corpus.jsonl").read_bytes()


def test_train_vocab_and_tokenize(tmp_path, capsys):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("CCO\nCCO\nCCN\nClCCl\n", encoding="utf-8")
    out = tmp_path / "vocab"
    code = main(["--out", str(out), "train-vocab",
                 "--input", str(corpus), "--merges", "2"])
    assert code == 0
    table = out / "merges.txt"
    assert table.exists()
    assert "C\tC" in table.read_text()

    source = tmp_path / "tok.txt"
    source.write_text("CCCC\nClCCl\n", encoding="utf-8")
    capsys.readouterr()
    code = main(["tokenize", "--table", str(table), str(source)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "CC CC"
    assert lines[1].split() == ["Cl", "C", "Cl"]


def test_overlap_self(tmp_path, capsys):
    manifest, rows = write_dataset(tmp_path)
    out = tmp_path / "run"
    code = main(["--out", str(out), "overlap",
                 "--a", str(manifest), "--b", str(manifest)])
    assert code == 0
    payload = json.loads((out / "overlap.json").read_text())
    assert payload["modes"]["without_conditions"]["count"] == 3
    assert payload["modes"]["with_conditions"]["count"] == 3
    assert (out / "overlap.md").exists()


def test_fingerprint_outputs(tmp_path):
    manifest, rows = write_dataset(tmp_path)
    out = tmp_path / "run"
    code = main(["--out", str(out), "fingerprint",
                 "--manifest", str(manifest), "--knn", "1"])
    assert code == 0
    assert (out / "fingerprints.drfp").exists()
    assert (out / "fingerprints.jsonl").exists()
    assert (out / "edges.csv").exists()
    out2 = tmp_path / "run2"
    code = main(["--out", str(out2), "fingerprint",
                 "--manifest", str(manifest), "--knn", "1"])
    assert code == 0
    assert (out / "fingerprints.drfp").read_bytes() == \
        (out2 / "fingerprints.drfp").read_bytes()


def write_endpoint_config(tmp_path, url, n=3):
    config = tmp_path / "endpoint.toml"
    config.write_text(
        f'[endpoint]\nurl = "{url}"\nn = {n}\nmax_retries = 1\n'
        'response_path = "choices.*.text"\n',
        encoding="utf-8",
    )
    return config


def write_prompts(tmp_path, prompts):
    path = tmp_path / "prompts.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for index, prompt in enumerate(prompts):
            fh.write(json.dumps({
                "product_id": f"p{index}", "product": "CCO", "prompt": prompt,
            }) + "\n")
    return path


def test_sample_against_stub(tmp_path, capsys):
    prompts = write_prompts(tmp_path, ["make this", "make that"])
    with StubServer() as server:
        config = write_endpoint_config(tmp_path, server.url, n=3)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        for out in (out1, out2):
            code = main(["--config", str(config), "--out", str(out), "sample",
                         "--prompts", str(prompts)])
            assert code == 0
    rows = [json.loads(l) for l in (out1 / "predictions.jsonl").read_text().splitlines()]
    assert [len(r["predictions"]) for r in rows] == [3, 3]
    assert (out1 / "predictions.jsonl").read_bytes() == \
        (out2 / "predictions.jsonl").read_bytes()


def test_sample_endpoint_failure_exit_4(tmp_path, capsys):
    prompts = write_prompts(tmp_path, ["ALWAYS_500"])
    with StubServer() as server:
        config = write_endpoint_config(tmp_path, server.url)
        out = tmp_path / "s"
        code = main(["--config", str(config), "--out", str(out), "sample",
                     "--prompts", str(prompts)])
    assert code == 4
    assert (out / "predictions.partial.jsonl").exists()


def test_sample_rejects_two_prediction_sources(tmp_path):
    prompts = write_prompts(tmp_path, ["x"])
    config = tmp_path / "both.toml"
    config.write_text(
        '[endpoint]\nurl = "http://localhost:1"\n\n'
        '[predictions]\nfile = "preds.jsonl"\n',
        encoding="utf-8",
    )
    code = main(["--config", str(config), "--out", str(tmp_path / "o"),
                 "sample", "--prompts", str(prompts)])
    assert code == 2


def test_unknown_command_exit_2():
    assert main(["frobnicate"]) == 2


def test_console_script_help():
    result = subprocess.run(
        [sys.executable, "-m", "retrobench.cli", "--help"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    for command in ("canonicalize", "validate", "evaluate", "sample",
                    "gen-instruct", "train-vocab", "tokenize", "overlap",
                    "fingerprint"):
        assert command in result.stdout
