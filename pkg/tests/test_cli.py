import json
from pathlib import Path

from click.testing import CliRunner

from thyrostruct.cli import main
from thyrostruct.corpus import load_corpus
from thyrostruct.model import record_to_json
from tests.conftest import SAMPLE_DOCUMENT


def run(*args, input=None):
    return CliRunner().invoke(main, list(args), input=input)


def test_gen_corpus_then_split_reference_sizes(tmp_path):
    corpus_dir = tmp_path / "corpus"
    result = run("gen-corpus", "--seed", "7", "-n", "741", "--out", str(corpus_dir))
    assert result.exit_code == 0, result.output
    assert len(load_corpus(corpus_dir)) == 741

    out_dir = tmp_path / "splits"
    result = run("split", "0.8", "0.1", "0.1", "--corpus", str(corpus_dir),
                 "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    sizes = tuple(len(load_corpus(out_dir / name)) for name in ("train", "valid", "test"))
    assert sizes == (592, 74, 75)


def test_extract_single_transcript_stdin():
    result = run("extract", "--backend", "rule", input=SAMPLE_DOCUMENT)
    assert result.exit_code == 0, result.output
    record = json.loads(result.output)
    assert record["Age"] == 50
    assert record["Drainage tube insertion, or not"] == "Inserted"


def test_extract_corpus_then_eval_scores_100(tmp_path):
    corpus_dir = tmp_path / "corpus"
    run("gen-corpus", "--seed", "12", "-n", "20", "--out", str(corpus_dir),
        "--noise-negated-dissection", "0.3", "--noise-synonym-swap", "0.3")
    records_dir = tmp_path / "pred"
    result = run("extract", "--backend", "rule", "--corpus", str(corpus_dir),
                 "--out-dir", str(records_dir), "--jobs", "4")
    assert result.exit_code == 0, result.output
    assert len(list(records_dir.glob("*.json"))) == 20

    result = run("eval", "--gold", str(corpus_dir), "--pred", str(records_dir),
                 "--kind", "records", "--format", "json")
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["record"]["mean_accuracy"] == 100.0


def test_eval_markdown_table_shape(tmp_path):
    corpus_dir = tmp_path / "corpus"
    run("gen-corpus", "--seed", "1", "-n", "8", "--out", str(corpus_dir))
    result = run("eval", "--gold", str(corpus_dir), "--pred", str(corpus_dir),
                 "--kind", "spans", "--format", "markdown")
    assert result.exit_code == 0, result.output
    assert "| Tag | Details | P | R | F1 | Support |" in result.output
    assert "| Macro |" in result.output


def test_render_deterministic(tmp_path):
    record_json = record_to_json(
        __import__("thyrostruct.model", fromlist=["OperationRecord"]).OperationRecord()
    )
    first = run("render", input=record_json)
    second = run("render", input=record_json)
    assert first.exit_code == 0
    assert first.output == second.output
    assert "<svg" in first.output


def test_structure_command_round_trip(tmp_path):
    corpus_dir = tmp_path / "corpus"
    run("gen-corpus", "--seed", "2", "-n", "3", "--out", str(corpus_dir))
    lines = []
    for doc in load_corpus(corpus_dir):
        lines.append(json.dumps({
            "id": doc.transcript.id,
            "text": doc.transcript.text,
            "spans": [{"tag": s.tag, "start": s.start, "end": s.end}
                      for s in doc.gold_spans],
        }))
    result = run("structure", input="\n".join(lines) + "\n")
    assert result.exit_code == 0, result.output
    outputs = [json.loads(line) for line in result.output.splitlines() if line.strip()]
    expected = [json.loads(record_to_json(d.gold_record)) for d in load_corpus(corpus_dir)]
    assert outputs == expected


def test_usage_error_exit_code_2():
    result = run("extract", "--backend", "nonsense")
    assert result.exit_code == 2


def test_data_error_exit_code_1(tmp_path):
    result = run("render", input="{not json")
    assert result.exit_code == 1
    result = run("split", "0.5", "0.1", "0.1", "--corpus", str(tmp_path / "missing"),
                 "--out", str(tmp_path / "o"))
    assert result.exit_code != 0


def test_gen_corpus_rejects_bad_noise(tmp_path):
    result = run("gen-corpus", "--seed", "1", "-n", "2", "--out", str(tmp_path / "c"),
                 "--noise-synonym-swap", "1.5")
    assert result.exit_code == 1
