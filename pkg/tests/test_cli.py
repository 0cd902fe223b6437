"""CLI: config parsing, serialization round trips, outputs, exit codes."""

import json

import pytest

from qstirling.cli import (CSV_HEADER, EXIT_IO, EXIT_OK, EXIT_PARSE, ConfigError,
                           build_manifest, config_digest, main, parse_config,
                           records_to_csv, serialize_config)
from qstirling.sweep import SweepRecord

SMALL = "sigma = 5\ngap_tolerance = 0.7\nr = 10\n"


def test_defaults_from_empty_config():
    cfg = parse_config("")
    assert cfg.T_h == 0.1 and cfg.T_c == 0.05
    assert cfg.model.a == 20e-9
    assert cfg.sigma == 50.0 and cfg.r == 100
    assert cfg.gap_tolerance == 0.05


def test_parse_units_and_comments():
    cfg = parse_config("""
        # operating point
        T_h = 0.2 K
        T_c = 0.08 K    # cold bath
        a = 25 nm
        m = electron
        sigma = 12.5
        quench_model = project
        coherence_mode = drop-coherences
    """)
    assert cfg.T_h == 0.2 and cfg.T_c == 0.08
    assert cfg.model.a == pytest.approx(25e-9)
    assert cfg.quench_model == "project"
    assert cfg.dissipator.coherence_mode == "drop-coherences"


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("sigma = 5\nT_h = 0.1\n")          # missing unit
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("sigm = 5\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("sigma = 5\nsigma = 6\n")
    with pytest.raises(ConfigError, match="unit"):
        parse_config("a = 20\n")
    with pytest.raises(ConfigError, match="number"):
        parse_config("sigma = fast\n")
    with pytest.raises(ConfigError, match="integer"):
        parse_config("r = 10.5\n")
    with pytest.raises(ConfigError, match="one of"):
        parse_config("coherence_mode = maybe\n")
    with pytest.raises(ConfigError, match="'key = value'"):
        parse_config("just words\n")
    with pytest.raises(ConfigError, match="T_c < T_h"):
        parse_config("T_h = 0.05 K\nT_c = 0.1 K\n")


def test_serialize_round_trip():
    cfg = parse_config("T_h = 0.17 K\nsigma = 7.3\ngap_tolerance = 0.61\n")
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert config_digest(again) == config_digest(cfg)


def test_digest_changes_with_any_value():
    base = config_digest(parse_config(""))
    assert config_digest(parse_config("sigma = 49\n")) != base
    assert config_digest(parse_config("tau_divisor = 9999\n")) != base


def test_csv_format():
    rec = SweepRecord(r=10, sigma=5.0, W_over_kTc=1 / 3, eta=0.5, P_attowatts=2.0,
                      Q_ins=1e-25, Q_hc=-2e-25, Q_rem=3e-25, Q_ch=-4e-25,
                      n_steps=100, leakage=1e-9, engine_flag=True)
    text = records_to_csv([rec])
    lines = text.split("\n")
    assert lines[0] == CSV_HEADER
    fields = lines[1].split(",")
    assert fields[-1] == "true"
    # 17 significant digits: floats survive a text round trip bit-exactly
    assert float(fields[2]) == 1 / 3
    assert text.endswith("\n") and "\r" not in text


def test_manifest_contents():
    cfg = parse_config(SMALL)
    man = build_manifest(cfg, "cycle", SMALL, 0.0, 1.0)
    assert man["constants"]["codata"] == "2018"
    assert man["constants"]["hbar"]["value"] == 1.054571817e-34
    assert man["constants"]["kB"]["value"] == 1.380649e-23
    assert man["constants"]["electron_mass"]["value"] == 9.1093837015e-31
    assert man["config"]["sigma"] == 5.0
    assert man["config"]["delta_tau"]["unit"] == "s"
    assert "gap_tolerance_sensitivity" in man["notes"]
    assert man["config_digest"] == config_digest(cfg)


def test_cycle_command_writes_csv_and_manifest(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(SMALL)
    out = tmp_path / "out.csv"
    code = main(["cycle", "--config", str(conf), "--out", str(out)])
    assert code == EXIT_OK
    text = out.read_text()
    assert text.splitlines()[0] == CSV_HEADER
    assert len(text.splitlines()) == 2
    man = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert man["command"] == "cycle"
    assert man["config"]["r"] == 10


def test_reruns_byte_identical(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(SMALL)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep-r", "--config", str(conf), "--out", str(out1),
                 "--r", "20,60"]) == EXIT_OK
    assert main(["sweep-r", "--config", str(conf), "--out", str(out2),
                 "--r", "20,60"]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    m1 = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    m2 = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    for m in (m1, m2):
        m.pop("started"), m.pop("finished")
    assert m1 == m2


def test_exit_code_parse_error(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("sigma = banana\n")
    out = tmp_path / "out.csv"
    assert main(["cycle", "--config", str(conf), "--out", str(out)]) == EXIT_PARSE
    assert not out.exists()


def test_exit_code_missing_sweep_args(tmp_path):
    out = tmp_path / "out.csv"
    assert main(["sweep-r", "--out", str(out)]) == EXIT_PARSE
    assert main(["sweep-sigma", "--out", str(out)]) == EXIT_PARSE
    assert main(["contour", "--out", str(out)]) == EXIT_PARSE


def test_exit_code_unreadable_config(tmp_path):
    out = tmp_path / "out.csv"
    missing = tmp_path / "nope.conf"
    assert main(["cycle", "--config", str(missing), "--out", str(out)]) == EXIT_IO


def test_exit_code_unwritable_output(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(SMALL)
    out = tmp_path / "no" / "such" / "dir" / "out.csv"
    assert main(["cycle", "--config", str(conf), "--out", str(out)]) == EXIT_IO


def test_contour_command(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("gap_tolerance = 0.7\nr = 10\n")
    out = tmp_path / "grid.csv"
    code = main(["contour", "--config", str(conf), "--out", str(out),
                 "--r", "20 60", "--sigma", "4 5"])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    assert lines[1].startswith("20,4") and lines[4].startswith("60,5")
