import csv
import json
import math
from pathlib import Path

import pytest

from synthlab import __version__
from synthlab.cli import SCHEMA_VERSION, main, run_experiment
from synthlab.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / f"{command}.conf"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


def test_spectrum_report_schema(tmp_path):
    code, out = run(tmp_path, "spectrum", "manifold = torus2\nlambda_max = 20\n", "--no-plots")
    assert code == 0
    recs = read_jsonl(out / "spectrum.jsonl")
    head, summary = recs[0], recs[-1]
    assert head["type"] == "header"
    assert head["version"] == __version__
    assert head["schema_version"] == SCHEMA_VERSION
    assert head["seed"] == head["config"]["seed"]
    assert parse_config(head["config_text"], "spectrum") == parse_config("manifold = torus2\nlambda_max = 20\n", "spectrum")
    assert summary["type"] == "summary" and summary["passed"]
    for a in recs[1:-1]:
        assert a["type"] == "assertion"
        assert {"name", "value", "bound", "relation", "tolerance", "slack", "pass"} <= set(a)
    with open(out / "spectrum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    for r in rows:
        for v in r.values():
            if v != "":
                assert math.isfinite(float(v))


def test_profile_columns(tmp_path):
    code, out = run(tmp_path, "profile", (CONFIGS / "profile_equator.conf").read_text(), "--no-plots")
    assert code == 0
    with open(out / "profile.csv") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames
        rows = list(reader)
    for c in ("l", "lambda", "norm2_closed_form", "norm2_quadrature", "abs_diff"):
        assert c in cols
    assert int(rows[-1]["l"]) == 64


def test_approx_summary_compares_mean(tmp_path):
    code, out = run(tmp_path, "approx", (CONFIGS / "approx_two_lines.conf").read_text(), "--no-plots")
    assert code == 0
    summary = read_jsonl(out / "approx.jsonl")[-1]
    assert summary["predicted_mean"] == pytest.approx(0.4)
    assert abs(summary["mean_error2"] - summary["predicted_mean"]) <= 4 * summary["stderr"]


def test_usage_errors_exit_one(tmp_path, capsys):
    code, _ = run(tmp_path, "stability", "manifold = torus2\np = 1.5\nR = 8\n[measure]\nkind = segment\n")
    assert code == 1
    assert "p must exceed 2" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.conf")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["nonsense", "--config", "x"])
    assert exc.value.code == 1


def test_trials_out_of_range(tmp_path, capsys):
    text = "manifold = torus2\nlambda_max = 5\nfunction = lines\nlines = 0\nk = 1\ntrials = 0\n"
    code, _ = run(tmp_path, "approx", text)
    assert code == 1
    assert "line 6: trials must be at least 1" in capsys.readouterr().err


def test_module_error_names_operation(tmp_path, capsys):
    code, _ = run(tmp_path, "kuznecov", "manifold = sphere2\nlambda_max = 2\n[measure]\nkind = equator\n")
    assert code == 1
    assert "ratio.kuznecov_fit: ArgumentError" in capsys.readouterr().err


def test_single_R_stability(tmp_path):
    text = "manifold = torus2\np = 3\nR = 4\n[measure]\nkind = segment\n"
    code, out = run(tmp_path, "stability", text, "--no-plots")
    assert code == 0


def test_assertion_failure_exits_two(tmp_path):
    text = "manifold = sphere2\nlambda_max = 60\ntolerance = 1e-9\n[measure]\nkind = atom-set\npoints = 0.3, 0.2; 2.0, 4.0\n"
    code, out = run(tmp_path, "kuznecov", text, "--no-plots")
    assert code == 2
    summary = read_jsonl(out / "kuznecov.jsonl")[-1]
    assert not summary["passed"]
    assert "growth_exponent" in summary["failed"]


@pytest.mark.parametrize("name", ["volume_subtorus", "approx_two_lines"])
def test_byte_identical_across_threads(tmp_path, name):
    command = name.split("_")[0]
    text = (CONFIGS / f"{name}.conf").read_text()
    outs = []
    for threads in ("1", "4"):
        d = tmp_path / threads
        d.mkdir()
        code, out = run(d, command, text, "--threads", threads, "--seed", "99")
        assert code == 0
        outs.append(out)
    for ext in ("csv", "jsonl", "png"):
        assert (outs[0] / f"{command}.{ext}").read_bytes() == (outs[1] / f"{command}.{ext}").read_bytes()


def test_seed_changes_results():
    text = (CONFIGS / "volume_subtorus.conf").read_text()
    a = run_experiment(parse_config(text, "volume"))
    cfg = parse_config(text, "volume")
    cfg.seed = 12345
    b = run_experiment(cfg)
    assert a.rows[0]["hits"] != b.rows[0]["hits"]


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.conf")), ids=lambda p: p.stem)
def test_shipped_configs_pass(tmp_path, path):
    command = path.stem.split("_")[0]
    code, out = run(tmp_path, command, path.read_text(), "--no-plots")
    assert code == 0
    assert read_jsonl(out / f"{command}.jsonl")[-1]["passed"]
