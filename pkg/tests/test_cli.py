"""Tests for the command-line interface and its argument helpers."""

import json
import sys
import tempfile
from pathlib import Path

import pytest
from loguru import logger

from caimbench.cli import build_parser, main
from caimbench.data_models import InsertionPlan
from caimbench.runner.utils import parse_folds, parse_plan, prepare_output


@pytest.fixture(autouse=True)
def restore_logging():
    """main() re-points the log sink at the captured stderr; put it back afterwards."""
    yield
    logger.remove()
    logger.add(sys.stderr)


# ----------------------------------------------------------------------
# Argument helpers
# ----------------------------------------------------------------------


def test_parse_folds():
    assert parse_folds(None, 5) == [0, 1, 2, 3, 4]
    assert parse_folds("all", 3) == [0, 1, 2]
    assert parse_folds("2", 5) == [2]
    assert parse_folds("3,0,3", 5) == [0, 3]
    assert parse_folds("1-3", 5) == [1, 2, 3]


@pytest.mark.parametrize("bad", ["5", "0-7", "3-1", "x", "1,,2"])
def test_parse_folds_rejects(bad):
    with pytest.raises(ValueError, match="Invalid fold specification"):
        parse_folds(bad, 5)


def test_parse_plan():
    assert parse_plan("none") == InsertionPlan(positions=())
    assert parse_plan("") == InsertionPlan(positions=())
    assert parse_plan("2").positions == (2,)
    assert parse_plan("1,3,5").positions == (1, 3, 5)
    assert parse_plan("1-3").positions == (1, 2, 3)
    assert parse_plan("1-3").label() == "1-3"
    assert parse_plan("1,3").label() == "1,3"


def test_parse_plan_rejects():
    with pytest.raises(ValueError, match="Invalid insertion plan"):
        parse_plan("a-b")
    with pytest.raises(ValueError):
        parse_plan("3,1")
    with pytest.raises(ValueError):
        parse_plan("0")


def test_prepare_output_refuses_results():
    with tempfile.TemporaryDirectory() as tmpdir:
        target = Path(tmpdir) / "out"
        prepare_output(target, force=False)
        (target / "result.json").write_text("{}")
        with pytest.raises(FileExistsError, match="--force"):
            prepare_output(target, force=False)
        prepare_output(target, force=True)
        assert target.exists()
        assert not any(target.iterdir())


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def test_parser_requires_a_command():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([])
    assert exc.value.code == 2


def test_parser_rejects_unknown_variant():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--variant", "bn"])


def test_cost_command(capsys):
    """Test the cost table on the default geometry."""
    with tempfile.TemporaryDirectory() as tmpdir:
        main(["cost", "--out", tmpdir])
        out = capsys.readouterr().out
        assert "Computational cost" in out
        assert "backbone" in out
        assert "+{1-5}" in out

        report = json.loads((Path(tmpdir) / "cost" / "cost.json").read_text())
        rows = report["rows"]
        assert [r["label"] for r in rows] == ["backbone", "+{1}", "+{1-2}", "+{1-3}", "+{1-4}", "+{1-5}"]
        assert rows[0]["cost"]["caim_params"] == 0
        caim_flops = [r["cost"]["caim_flops"] for r in rows]
        assert caim_flops == sorted(caim_flops)
        assert (Path(tmpdir) / "cost" / "cost.csv").exists()
        assert json.loads((Path(tmpdir) / "config.json").read_text())["output_dir"] == tmpdir


def test_existing_results_need_force(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        main(["cost", "--out", tmpdir])
        capsys.readouterr()

        with pytest.raises(SystemExit) as exc:
            main(["cost", "--out", tmpdir])
        assert exc.value.code == 1
        err = capsys.readouterr().err
        assert "error: FileExistsError" in err
        assert "--force" in err

        main(["cost", "--out", tmpdir, "--force"])


def test_missing_inputs_name_the_command(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(SystemExit) as exc:
            main(["train", "--out", tmpdir])
        assert exc.value.code == 1
        err = capsys.readouterr().err
        assert "error: FileNotFoundError" in err
        assert "caimbench gen-data" in err


def test_unknown_config_key_is_rejected(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        config = Path(tmpdir) / "config.json"
        config.write_text(json.dumps({"train": {"epochs": 1, "momentum": 0.9}}))
        with pytest.raises(SystemExit) as exc:
            main(["cost", "--config", str(config), "--out", str(Path(tmpdir) / "run")])
        assert exc.value.code == 1
        assert "ValidationError" in capsys.readouterr().err


def test_plan_beyond_backbone_is_rejected(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(SystemExit):
            main(["train", "--out", tmpdir, "--plan", "1-7"])
        assert "exceeds" in capsys.readouterr().err


def test_ablate_worker_bounds(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(SystemExit) as exc:
            main(["ablate", "--out", tmpdir, "--workers", "0"])
        assert exc.value.code == 1
        assert "--workers" in capsys.readouterr().err
