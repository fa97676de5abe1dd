import csv
import io
import json

import pytest

from pandora_market.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema: pandora-market/")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_equilibrium_posted(capsys):
    code, out, _ = run(capsys, "equilibrium", "--cdf-points", "5")
    assert code == 0
    table = rows(out)
    assert len(table) == 5
    assert float(table[0]["price_low"]) == pytest.approx(0.4) and float(table[0]["price_high"]) == pytest.approx(0.8)
    assert float(table[0]["firm_profit"]) == pytest.approx(0.2)
    assert float(table[0]["price_cdf"]) == pytest.approx(0.0, abs=1e-12)
    assert float(table[-1]["price_cdf"]) == 1.0


def test_equilibrium_hidden(capsys):
    code, out, _ = run(capsys, "equilibrium", "--regime", "hidden", "--n", "10")
    table = rows(out)
    assert code == 0 and len(table) == 1
    assert table[0]["signal"] == "none"
    assert float(table[0]["consumer_welfare"]) == pytest.approx(0.4)
    assert float(table[0]["firm_profit"]) == 0.0


@pytest.mark.parametrize("argv", [["--c", "0.5"], ["--n", "1"], ["--mu", "1.2"], ["--config", "/nonexistent/cfg"]])
def test_invalid_input_exits_2(capsys, argv):
    code, out, err = run(capsys, "equilibrium", *argv)
    assert code == 2 and out == "" and err.startswith("error:")


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# market\nn = 3\nmu = 0.4\nc = 0.05\n")
    _, out, _ = run(capsys, "equilibrium", "--config", str(cfg))
    assert rows(out)[0]["n"] == "3" and rows(out)[0]["mu"] == "0.4"
    _, out, _ = run(capsys, "equilibrium", "--config", str(cfg), "--n", "7")
    assert rows(out)[0]["n"] == "7" and rows(out)[0]["mu"] == "0.4"
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "equilibrium", "--config", str(cfg))[0] == 2


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("PANDORA_MARKET_SEED", "17")
    _, out, _ = run(capsys, "simulate", "--reps", "2000")
    assert rows(out)[0]["master_seed"] == "17"
    _, out, _ = run(capsys, "simulate", "--reps", "2000", "--seed", "3")
    assert rows(out)[0]["master_seed"] == "3"


def test_simulate_reruns_are_byte_identical(capsys, tmp_path):
    paths = []
    for workers in ("1", "3"):
        path = tmp_path / f"sim{workers}.csv"
        assert main(["simulate", "--reps", "70000", "--seed", "5", "--workers", workers, "--out", str(path)]) == 0
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    row = rows(paths[0].read_text())[0]
    assert abs(float(row["z_firm_profit"])) < 4


def test_json_matches_csv(capsys):
    _, out_csv, _ = run(capsys, "welfare", "--n-max", "6")
    _, out_json, _ = run(capsys, "welfare", "--n-max", "6", "--format", "json")
    doc = json.loads(out_json)
    assert doc["schema"] == "pandora-market/welfare/v1"
    table = rows(out_csv)
    assert doc["columns"] == list(table[0].keys())
    assert len(doc["rows"]) == len(table) == 5
    for a, b in zip(doc["rows"], table):
        assert a["posted_welfare"] == pytest.approx(float(b["posted_welfare"]), rel=1e-11)


def test_welfare_sweep(capsys):
    _, out, _ = run(capsys, "welfare", "--n-max", "8")
    table = rows(out)
    assert {r["hidden_welfare"] for r in table} == {"0.4"}
    posted = [float(r["posted_welfare"]) for r in table]
    assert posted == sorted(posted) and posted[0] == pytest.approx(0.2)
    assert [r["posting_benefits_consumer"] for r in table] == ["false", "false"] + ["true"] * 5
    assert table[0]["posting_threshold"] == "4"


def test_verify_certifies_and_flags(capsys):
    code, out, err = run(capsys, "verify", "--price-grid", "60", "--support-grid", "60", "--majorization-prices", "5")
    assert code == 0 and err == ""
    row = rows(out)[0]
    assert row["certified"] == "true" and row["majorized"] == "true"
    code, out, err = run(
        capsys, "verify", "--price-grid", "60", "--support-grid", "60", "--majorization-prices", "3", "--benchmark-profit", "0.15"
    )
    assert code == 1 and "certification failed" in err
    assert rows(out)[0]["certified"] == "false"


def test_verify_with_ternary(capsys):
    code, out, _ = run(
        capsys, "verify", "--price-grid", "50", "--support-grid", "50", "--include-ternary", "--ternary-grid", "12",
        "--majorization-prices", "3",
    )
    assert code == 0
    assert rows(out)[0]["include_ternary"] == "true"
