import json
from pathlib import Path

import pytest

from b1calc.cli import DEMOS, main
from b1calc.runner import RunConfig, run_source

jsonschema = pytest.importorskip("jsonschema")

ROOT = Path(__file__).resolve().parents[1]
SCHEMAS = ROOT / "docs" / "schemas" / "v1"
CORPUS = Path(__file__).parent / "corpus"


def _validator(name):
    schema = json.loads((SCHEMAS / name).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


@pytest.mark.parametrize("script", sorted(CORPUS.glob("*.b1")), ids=lambda p: p.stem)
def test_corpus_reports_match_schema(script):
    v = _validator("report.schema.json")
    res = run_source(script.read_text(), RunConfig(), base_dir=CORPUS)
    for rep in res.reports:
        # round-trip through JSON so the check sees what the CLI prints
        v.validate(json.loads(json.dumps(rep)))


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_demo_reports_match_schema(name):
    v = _validator("report.schema.json")
    for rep in run_source(DEMOS[name], RunConfig()).reports:
        v.validate(json.loads(json.dumps(rep)))


def test_topology_files_match_schema():
    v = _validator("topology.schema.json")
    for p in CORPUS.glob("*.json"):
        v.validate(json.loads(p.read_text()))


def test_check_finite_output_matches_schema(tmp_path, capsys):
    v = _validator("check_finite.schema.json")
    assert main(["check", "finite", str(CORPUS / "chain3.json")]) == 0
    v.validate(json.loads(capsys.readouterr().out))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"points": ["a", "b"], "opens": [[], ["a"], ["b"], ["a", "b"]][:3]}))
    assert main(["check", "finite", str(bad)]) == 1
    out = json.loads(capsys.readouterr().out)
    v.validate(out)
    assert out["violation"] == "full"
