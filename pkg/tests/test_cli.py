import csv
import io
import json

import pytest

from keb_lab.channels import ChannelRep, werner_holevo
from keb_lab.cli import main, run
from keb_lab.linalg import BipartiteOperator, omega_projector
from keb_lab.serialization import SCHEMA, channel_to_spec, dumps, state_to_dict


def family_spec(name, **params):
    return {"body": {"family": {"name": name, "params": params}}}


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)

    return _write


def run_json(argv):
    text, code, _ = run(argv)
    assert code == 0
    return json.loads(text)


def by_name(report):
    return {v["name"]: v for v in report["verdicts"]}


def test_analyze_werner(write):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.4, "d": 3}))
    rep = run_json(["analyze", p])
    assert rep["schema"] == SCHEMA and rep["command"] == "analyze"
    assert rep["inputsDigest"].startswith("sha256:")
    v = by_name(rep)
    assert v["CP"]["verdict"] == "HOLDS"
    assert v["PPT"]["verdict"] == "FAILS"
    assert v["2-EB"]["verdict"] == "HOLDS"
    assert v["3-EB"]["verdict"] == "FAILS"
    assert rep["toleranceProfile"]["eps_psd"] == 1e-9
    assert "timings" not in rep


def test_analyze_identity_and_gap(write):
    v = by_name(run_json(["analyze", write("i.json", family_spec("Identity", d=2))]))
    assert (v["CP"]["verdict"], v["PPT"]["verdict"], v["2-EB"]["verdict"]) == ("HOLDS", "FAILS", "FAILS")
    v = by_name(run_json(["analyze", write("p.json", family_spec("PhiLambda", **{"lambda": -0.28, "d": 4})), "--k-max", "2"]))
    assert v["2-EB"]["verdict"] == "UNKNOWN"
    assert "gap" in v["2-EB"]["flags"] and "open gap" in v["2-EB"]["evidence"]["note"]


def test_analyze_choi_body(write):
    # an opaque Choi body carries no family label, so only numerical routes apply
    p = write("c.json", channel_to_spec(ChannelRep(3, 3, choi=werner_holevo(0.6, 3).choi)))
    v = by_name(run_json(["analyze", p]))
    assert v["2-EB"]["verdict"] == "FAILS"
    assert v["2-EB"]["route"] in ("ProjectionWitness", "CompositionWitness")


def test_determinism_byte_identical(write):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.6, "d": 3}))
    a, _, _ = run(["analyze", p, "--seed", "7"])
    b, _, _ = run(["analyze", p, "--seed", "7"])
    assert a == b
    p2 = write("s.json", state_to_dict(BipartiteOperator(omega_projector(2) / 2, 2, 2)))
    assert run(["sep", p2])[0] == run(["sep", p2])[0]


def test_timings_opt_in(write):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.4, "d": 3}))
    rep = run_json(["analyze", p, "--timings"])
    assert rep["timings"]["analyze"] >= 0


def test_threshold_tables():
    rep = run_json(["threshold", "WernerHolevo", "--dim", "4"])
    rows = rep["rows"]
    assert [r["certified"] for r in rows] == [[-1.0, 1.0], [-1.0, 0.5], [-1.0, 1 / 3], [-1.0, 0.25]]
    rep = run_json(["threshold", "PhiLambda", "-d", "3", "--k", "2"])
    (row,) = rep["rows"]
    assert row["certified"] == [-0.25, 1.0]
    assert row["necessary"] == pytest.approx([-1 / 3, 1.0])
    assert not row["exact"]


def test_threshold_csv():
    text, code, _ = run(["threshold", "WernerHolevo", "--dim", "3", "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 3 and rows[0]["certified_hi"] == "1.0" and rows[1]["certified_hi"] == "0.5"
    assert rows[0]["status"] == "exact"


def test_threshold_probe():
    rep = run_json(["threshold", "WernerHolevo", "--dim", "3", "--k", "2", "--probe", "0.05"])
    verdicts = {round(v["lambda"], 10): v["verdict"] for v in rep["verdicts"]}
    assert verdicts[0.55] == "FAILS" and verdicts[0.45] == "HOLDS"


def test_sep_maximally_entangled(write):
    p = write("s.json", state_to_dict(BipartiteOperator(omega_projector(2) / 2, 2, 2)))
    rep = run_json(["sep", p])
    (v,) = rep["verdicts"]
    assert v["label"] == "ENTANGLED" and v["method"] == "PPT"


def test_sep_fixture():
    rep = run_json(["sep", "--fixture", "horodecki_2x4"])
    assert rep["verdicts"][0]["label"] == "ENTANGLED"
    assert rep["verdicts"][0]["method"] == "edge witness"


def test_twirl_product():
    rep = run_json(["twirl", "--product", "e1", "e2", "--dim", "3", "--samples", "20000"])
    c = rep["coefficients"]
    assert (c["a"], c["b"], c["c"]) == pytest.approx((2 / 15, -1 / 30, -1 / 30), abs=1e-14)
    assert rep["closed_form_gap"] <= 1e-12
    assert "independent b and c" in rep["form"]
    assert rep["monte_carlo"]["frobenius_gap"] <= 2e-2
    assert rep["verdicts"][0]["verdict"] == "HOLDS"


def test_power_and_majorize(write):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.5, "d": 3}))
    rep = run_json(["power", p, "--k", "2"])
    assert rep["power"] == 2 and rep["verdicts"][0]["verdict"] == "HOLDS"
    rep = run_json(["majorize", p, "--k", "2"])
    assert rep["verdicts"][0]["verdict"] == "HOLDS"
    assert rep["verdicts"][0]["evidence"]["factor"] == 2


def test_text_format(write):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.4, "d": 3}))
    text, _, _ = run(["analyze", p, "--format", "text"])
    assert "3-EB: FAILS via FamilyThreshold" in text


# ------------------------------------------------------------ exit codes

def test_malformed_json_exit_2(write, capsys):
    p = write("bad.json", '{"body": {"family": \n  {"name": "Identity",, }}}')
    assert main(["analyze", p]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_bad_schema_exit_2(write, capsys):
    assert main(["analyze", write("x.json", {"body": {"family": {"name": "Nope"}}})]) == 2
    assert main(["analyze", write("y.json", family_spec("WernerHolevo", **{"lambda": 0.4}))]) == 2
    assert main(["analyze", "/nonexistent/spec.json"]) == 2
    assert main(["threshold", "Schur", "--dim", "3"]) == 2
    assert main(["analyze"]) == 2


def test_dimension_limit_exit_3(write):
    p = write("big.json", family_spec("WernerHolevo", **{"lambda": 0.1, "d": 7}))
    assert main(["analyze", p]) == 3
    assert main(["threshold", "WernerHolevo", "--dim", "9"]) == 3
    assert main(["threshold", "WernerHolevo", "--dim", "9", "--max-dim", "9", "--k", "1"]) == 0


def test_uncertified_majorize_is_input_error(write):
    assert main(["majorize", write("i.json", family_spec("Identity", d=3)), "--k", "2"]) == 2


def test_env_overrides_and_flag_precedence(write, monkeypatch):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.4, "d": 3}))
    monkeypatch.setenv("KEB_LAB_SEED", "11")
    monkeypatch.setenv("KEB_LAB_TOL_PSD", "1e-8")
    rep = run_json(["analyze", p])
    assert rep["toleranceProfile"]["seed"] == 11 and rep["toleranceProfile"]["eps_psd"] == 1e-8
    rep = run_json(["analyze", p, "--seed", "3"])
    assert rep["toleranceProfile"]["seed"] == 3
    rep = run_json(["--seed", "4", "analyze", p])
    assert rep["toleranceProfile"]["seed"] == 4
    monkeypatch.setenv("KEB_LAB_FORMAT", "text")
    assert run(["analyze", p])[0].startswith("keb-lab analyze")
    monkeypatch.setenv("KEB_LAB_SEED", "x")
    assert main(["analyze", p]) == 2


def test_output_file(write, tmp_path):
    p = write("w.json", family_spec("WernerHolevo", **{"lambda": 0.4, "d": 3}))
    out = tmp_path / "r.json"
    assert main(["analyze", p, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["command"] == "analyze"


# ----------------------------------------------------------------- replay

@pytest.mark.parametrize("spec", [
    family_spec("WernerHolevo", **{"lambda": 0.6, "d": 3}),
    family_spec("Identity", d=2),
    family_spec("WernerHolevo", **{"lambda": 1.5, "d": 3}),
    family_spec("PhiLambda", **{"lambda": -0.6, "d": 3}),
])
def test_verify_replays_all_failures(write, tmp_path, spec):
    out = tmp_path / "r.json"
    assert main(["analyze", write("s.json", spec), "-o", str(out)]) == 0
    text, code, _ = run(["--verify", str(out)])
    rep = json.loads(text)
    assert code == 0 and rep["all_ok"]
    assert rep["replays"]
    assert all(r["ok"] for r in rep["replays"] if r["replayed"])


def test_verify_sep_reports(write, tmp_path):
    out = tmp_path / "r.json"
    assert main(["sep", "--fixture", "horodecki_2x4", "-o", str(out)]) == 0
    rep = json.loads(run(["--verify", str(out)])[0])
    assert rep["replays"][0]["replayed"] and rep["replays"][0]["ok"]


def test_verify_detects_tampering(write, tmp_path):
    out = tmp_path / "r.json"
    assert main(["analyze", write("s.json", family_spec("Identity", d=2)), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    for v in rep["verdicts"]:
        if v["name"] == "PPT":
            # replace the witness by a vector on which the partial transpose is positive
            v["evidence"]["vector"] = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    out.write_text(dumps(rep))
    text, code, _ = run(["--verify", str(out)])
    assert code == 1 and not json.loads(text)["all_ok"]


def test_verify_rejects_non_report(write):
    assert main(["--verify", write("x.json", {"schema": "other"})]) == 2
