import csv
import json

import pytest

from ibptc.cli import main
from ibptc.errors import ConfigError
from ibptc.sim import (CSV_COLUMNS, RunStats, latency_report, load_config, run_ber, run_latency,
                       validate_config, wilson_interval)

TINY = {"code": {"L": 48}, "run": {"sweep": [1.0, 40.0], "blocks_per_run": 8},
        "decoder": {"iterations": 4, "d_max": 8}}


def test_empty_document_gives_defaults():
    cfg, errors = validate_config({})
    assert errors == []
    assert cfg.code.L == 400 and cfg.code.S == 1 and cfg.code.crc.k == 8
    assert cfg.decoder.d_max == 30 and str(cfg.decoder.tt) == "hybrid:2"
    assert cfg.decoder.m_max is None
    assert validate_config(None)[0] == cfg and validate_config("")[0] == cfg


def test_negative_span_names_key():
    cfg, errors = validate_config({"ibpi": {"span": -1}})
    assert cfg is None and errors[0].startswith("ibpi.span")


def test_ctc_mode_forces_span():
    cfg, errors = validate_config({"code.mode": "ctc", "ibpi.span": 2})
    assert cfg is None and any(e.startswith("ibpi.span") for e in errors)
    cfg, errors = validate_config({"code.mode": "ctc"})
    assert cfg.code.S == 0


def test_errors_collected_with_paths():
    _, errors = validate_config({"decoder.tt": "bogus:2", "run.sweep": [], "code.L": "x",
                                 "nonsense": 1})
    keys = {e.split(":")[0] for e in errors}
    assert keys == {"decoder.tt", "run.sweep", "code.L", "nonsense"}


def test_memory_floor():
    _, errors = validate_config({"decoder.m_max": 4})
    assert errors and errors[0].startswith("decoder.m_max")
    cfg, errors = validate_config({"decoder.m_max": 5})
    assert not errors and cfg.decoder.m_max == 5


def test_bad_json_text():
    cfg, errors = validate_config("{nope")
    assert cfg is None and "JSON" in errors[0]


def test_load_config_raises():
    with pytest.raises(ConfigError):
        load_config(None, {"ibpi.span": -3})


def test_wilson():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and 0 < hi < 0.005
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)


def test_stats_consistency():
    st = RunStats(1.0, bits=100, bit_errors=3, blocks=10, block_errors=1, drs=55)
    assert st.ber == 0.03 and st.bler == 0.1 and st.avg_dr == 5.5


def test_run_ber_csv_and_determinism(tmp_path):
    cfg, _ = validate_config({**TINY, "decoder": {**TINY["decoder"], "tt": "genie"}})
    rows = run_ber(cfg, tmp_path / "a")
    run_ber(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "ber.csv").read_text()
    assert a == (tmp_path / "b" / "ber.csv").read_text()
    table = list(csv.reader(a.splitlines()))
    assert tuple(table[0]) == CSV_COLUMNS and len(table) == 3
    assert rows[1].ber == 0.0 and table[2][1] == "0.000000e+00"
    summary = json.loads((tmp_path / "a" / "ber_summary.json").read_text())
    assert "Philox" in summary["rng"] and len(summary["points"][0]["ber_ci95"]) == 2
    for r in rows:
        assert 0 <= r.bit_errors <= r.bits and 0 <= r.avg_dr <= cfg.decoder.round_cap


def test_parallel_matches_serial(tmp_path):
    cfg, _ = validate_config({**TINY, "run": {**TINY["run"], "threads": 2}})
    run_ber(cfg, tmp_path / "p")
    cfg1, _ = validate_config(TINY)
    run_ber(cfg1, tmp_path / "s")
    assert (tmp_path / "p" / "ber.csv").read_text() == (tmp_path / "s" / "ber.csv").read_text()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg, _ = validate_config(TINY)
    with pytest.raises(OSError):
        run_ber(cfg, blocker / "sub")


def test_latency_report():
    cfg, _ = validate_config({"run.blocks_per_run": 7, "decoder.iterations": 2})
    rep = latency_report(cfg)
    assert rep["ibptc"]["tdd"] == rep["ctc"]["tdd"] == 28
    assert rep["ctc"]["fbdd"] == 4
    cfg4, _ = validate_config({"run.blocks_per_run": 7, "decoder.iterations": 2,
                               "decoder.n_adus": 4})
    assert latency_report(cfg4)["ibptc"]["tdd"] < 28


def test_run_latency_files(tmp_path):
    cfg, _ = validate_config({"run.blocks_per_run": 7, "decoder.iterations": 2})
    run_latency(cfg, tmp_path)
    lines = (tmp_path / "latency.csv").read_text().splitlines()
    assert lines[0] == "mode,block,completion_cycle" and len(lines) == 15
    assert json.loads((tmp_path / "latency_summary.json").read_text())["modes"]["ibptc"]["fbdd"] == 10


# -------------------------------------------------------------------- CLI


def test_cli_validate(capsys, tmp_path):
    assert main(["validate"]) == 0
    assert json.loads(capsys.readouterr().out)["ibpi.span"] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"ibpi": {"span": -1}}')
    assert main(["validate", "--config", str(bad)]) == 2
    assert "ibpi.span" in capsys.readouterr().err


def test_cli_latency_and_ber(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"run": {"blocks_per_run": 7}, "decoder": {"iterations": 2}}))
    assert main(["latency", "--config", str(cfg), "--out", str(tmp_path / "lat")]) == 0
    assert "TDD 28" in capsys.readouterr().out
    cfg.write_text(json.dumps(TINY))
    assert main(["ber", "--config", str(cfg), "--out", str(tmp_path / "ber"), "--seed", "3",
                 "--mode", "ctc"]) == 0
    summary = json.loads((tmp_path / "ber" / "ber_summary.json").read_text())
    assert summary["config"]["run.seed"] == 3 and summary["config"]["ibpi.span"] == 0


def test_cli_reports_config_errors(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"decoder": {"m_max": 2}}')
    assert main(["ber", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "decoder.m_max" in capsys.readouterr().err
