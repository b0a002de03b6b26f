import subprocess
import sys

import pytest

from hdgcontrol.cli import main
from hdgcontrol.config import ConfigError, parse_config


def write(tmp_path, text, name="study.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_config_defaults_and_comments():
    cfg = parse_config("# comment\nk = 0   # trailing\n\nbeta = 1, 0.5\n")
    assert cfg.k == 0
    assert cfg.beta == (1.0, 0.5)
    assert cfg.study_levels == [2, 4, 8, 16]
    assert cfg.reference_n == 128


@pytest.mark.parametrize(
    "text, line",
    [
        ("k = 1\nfoo = 2\n", 2),
        ("k = 3\n", 1),
        ("k = 1\nk = 0\n", 2),
        ("\n\ntau2 = -1\n", 3),
        ("beta = 1\n", 1),
        ("problem = square\n", 1),
        ("just text\n", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_levels_must_be_nested():
    with pytest.raises(ConfigError, match="powers of two"):
        parse_config("study_levels = 2, 6\nreference_n = 64\n")


def test_reference_rule_for_corner_problem():
    with pytest.raises(ConfigError, match="8 x max"):
        parse_config("study_levels = 2, 4\nreference_n = 16\n")
    assert parse_config("study_levels = 2, 4\nreference_n = 32\n").reference_n == 32


def test_zero_study(tmp_path, capsys):
    cfg = write(tmp_path, f"problem = zero\nk = 0\nstudy_levels = 1, 2\nreference_n = 16\noutput_dir = {tmp_path}\n")
    assert main(["run-study", str(cfg), "--quiet"]) == 0
    csv = (tmp_path / "study_zero_k0.csv").read_text().splitlines()
    assert csv[0].startswith("level,n,h,err_q")
    for row in csv[1:]:
        cells = row.split(",")
        errs = [cells[i] for i in (3, 5, 7, 9, 11)]
        assert all(float(e) == 0.0 for e in errs)
    gp = (tmp_path / "study_zero_k0.gp").read_text()
    assert "study_zero_k0.csv" in gp


def test_study_no_plot(tmp_path):
    cfg = write(tmp_path, f"problem = zero\nk = 0\nstudy_levels = 1\nreference_n = 8\noutput_dir = {tmp_path}\n")
    assert main(["run-study", str(cfg), "--quiet", "--no-plot"]) == 0
    assert not (tmp_path / "study_zero_k0.gp").exists()


def test_study_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        cfg = write(tmp_path, f"k = 0\nstudy_levels = 1, 2\nreference_n = 16\noutput_dir = {d}\n")
        assert main(["run-study", str(cfg), "--quiet"]) == 0
    assert (a / "study_paper_k0.csv").read_bytes() == (b / "study_paper_k0.csv").read_bytes()


def test_reference_too_small_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "study_levels = 2, 4\nreference_n = 8\n")
    assert main(["run-study", str(cfg)]) == 2
    assert "reference_n" in capsys.readouterr().err


def test_invalid_problem_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, f"tau2 = 0.5\nstudy_levels = 1\nreference_n = 8\noutput_dir = {tmp_path}\n")
    assert main(["run-study", str(cfg), "--quiet"]) == 2
    assert "A3" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["run-study", str(tmp_path / "nope.cfg")]) == 2


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["verify-identities", "--k", "7"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_verify_identities_pass(capsys):
    assert main(["verify-identities", "--k", "0", "--n", "2", "--seed", "3", "--trials", "5"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "adjoint" in out


def test_verify_identities_break_a2(capsys):
    assert main(["verify-identities", "--n", "2", "--trials", "3", "--break-a2"]) == 1
    assert "FAIL  adjoint" in capsys.readouterr().out


def test_mms_single_level(capsys):
    assert main(["run-mms", "--k", "0", "--levels", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "level,n,h,err_q,rate_q,err_y,rate_y,J"
    cells = lines[1].split(",")
    assert cells[4] == "" and cells[6] == "" and cells[7] == ""
    assert float(cells[3]) > 0 and float(cells[5]) > 0


def test_mms_to_file(tmp_path):
    out = tmp_path / "mms.csv"
    assert main(["run-mms", "--k", "0", "--levels", "4,8", "-o", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 3 and rows[2].split(",")[4] != ""


def test_mms_bad_levels():
    assert main(["run-mms", "--levels", "x"]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "hdgcontrol.cli", "verify-identities",
                        "--n", "2", "--trials", "2"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


@pytest.mark.parametrize("name", ["corner_k0.cfg", "corner_k1.cfg", "mms_k1.cfg"])
def test_shipped_configs_parse(name):
    from pathlib import Path
    from hdgcontrol.config import load_config
    cfg = load_config(Path(__file__).parent.parent / "configs" / name)
    assert cfg.output_dir == "results"
