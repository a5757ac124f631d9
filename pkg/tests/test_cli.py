"""Command-line driver: exit codes, file outputs, determinism."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ultradiffusion.cli import main
from ultradiffusion.fitting import UltradiffusionParams, sample_events
from ultradiffusion.serialize import write_trace_csv

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE = REPO_ROOT / "data" / "synthetic_t50_mu02.csv"

FIT_KEYS = {
    "story_id", "h1", "h2", "h3", "r2", "t_N", "mu", "M", "mode", "r2_simulated",
}


def sampled_story(story_id, seed, m=200):
    params = UltradiffusionParams(t_N=50, mu=0.2, M=m)
    return sample_events(params, seed=seed, story_id=story_id)


def write_linear_story(path, m=120, horizon=600.0):
    lines = ["story_id,timestamp"]
    lines.extend(f"line,{k * horizon / m}" for k in range(1, m + 1))
    path.write_text("\n".join(lines) + "\n")
    return path


class TestFit:
    def test_bundled_fixture_recovers_parameters(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["fit", "--input", str(FIXTURE), "--out-dir", str(out)])
        assert code == 0
        (record,) = json.loads((out / "fits.json").read_text())
        assert set(record) == FIT_KEYS
        assert record["t_N"] == 50
        assert record["r2_simulated"] >= 0.95
        assert record["M"] == 1000
        curve = out / "synthetic_t50_curve.tsv"
        assert curve.read_text().splitlines()[0] == "t\tobserved\tfitted\tsimulated"

    def test_small_story_is_skipped_with_notice(self, tmp_path, capsys):
        csv = tmp_path / "mixed.csv"
        big = sampled_story("big", seed=11)
        lines = ["story_id,timestamp", "tiny,1.0", "tiny,2.0", "tiny,3.0"]
        lines.extend(f"big,{t:.9g}" for t in big.events)
        csv.write_text("\n".join(lines) + "\n")
        out = tmp_path / "out"
        code = main(["fit", "--input", str(csv), "--out-dir", str(out)])
        assert code == 0
        assert "below the minimum" in capsys.readouterr().err
        records = json.loads((out / "fits.json").read_text())
        assert [r["story_id"] for r in records] == ["big"]

    def test_empty_csv_exits_one(self, tmp_path, capsys):
        csv = tmp_path / "empty.csv"
        csv.write_text("story_id,timestamp\n")
        code = main(["fit", "--input", str(csv), "--out-dir", str(tmp_path / "o")])
        assert code == 1
        assert not (tmp_path / "o").exists()

    def test_missing_input_exits_one(self, tmp_path, capsys):
        code = main(
            ["fit", "--input", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]
        )
        assert code == 1

    def test_fully_filtered_input_exits_one(self, tmp_path, capsys):
        csv = tmp_path / "tiny.csv"
        csv.write_text("story_id,timestamp\ns,1.0\ns,2.0\n")
        out = tmp_path / "out"
        code = main(["fit", "--input", str(csv), "--out-dir", str(out)])
        assert code == 1
        assert not out.exists()

    def test_unfittable_story_exits_two_without_partial_files(self, tmp_path, capsys):
        # Sixty simultaneous events against a far horizon make a constant
        # curve, which has no dynamics to fit.
        csv = tmp_path / "flat.csv"
        rows = "\n".join("flat,1.0" for _ in range(60))
        csv.write_text("story_id,timestamp\n" + rows + "\n")
        out = tmp_path / "out"
        code = main(
            ["fit", "--input", str(csv), "--out-dir", str(out), "--horizon", "1000"]
        )
        assert code == 2
        assert "no dynamics" in capsys.readouterr().err
        assert not out.exists()

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["fit", "--input", str(FIXTURE), "--out-dir", str(out_a)]) == 0
        assert main(["fit", "--input", str(FIXTURE), "--out-dir", str(out_b)]) == 0
        assert (out_a / "fits.json").read_bytes() == (out_b / "fits.json").read_bytes()
        assert (
            (out_a / "synthetic_t50_curve.tsv").read_bytes()
            == (out_b / "synthetic_t50_curve.tsv").read_bytes()
        )

    def test_paper_mapping_degenerates_on_this_fixture(self, tmp_path, capsys):
        # The published mapping reads the decay rate as the amplitude; on a
        # slowly decaying trace it maps every story below the 2-state floor.
        out = tmp_path / "out"
        code = main(
            ["fit", "--input", str(FIXTURE), "--out-dir", str(out), "--mapping", "paper"]
        )
        assert code == 2
        assert "degenerates" in capsys.readouterr().err

    def test_story_names_are_sanitized_and_deduplicated(self, tmp_path, capsys):
        csv = tmp_path / "names.csv"
        write_trace_csv(
            csv,
            [sampled_story("a b", seed=21), sampled_story("a_b", seed=23)],
        )
        out = tmp_path / "out"
        code = main(
            ["fit", "--input", str(csv), "--out-dir", str(out), "--min-events", "10"]
        )
        assert code == 0
        assert (out / "a_b_curve.tsv").exists()
        assert (out / "a_b_2_curve.tsv").exists()


class TestAggregate:
    def test_two_identical_stories_match_the_single_fit(self, tmp_path, capsys):
        story = sampled_story("solo", seed=33)
        single = tmp_path / "single.csv"
        double = tmp_path / "double.csv"
        write_trace_csv(single, [story])
        lines = ["story_id,timestamp"]
        for sid in ("one", "two"):
            lines.extend(f"{sid},{t:.9g}" for t in story.events)
        double.write_text("\n".join(lines) + "\n")

        out_single = tmp_path / "out_single"
        out_double = tmp_path / "out_double"
        assert main(["fit", "--input", str(single), "--out-dir", str(out_single)]) == 0
        assert (
            main(["aggregate", "--input", str(double), "--out-dir", str(out_double)])
            == 0
        )
        (fit,) = json.loads((out_single / "fits.json").read_text())
        agg = json.loads((out_double / "aggregate_fit.json").read_text())
        assert agg["n_stories"] == 2
        assert agg["h1"] == pytest.approx(fit["h1"], abs=1e-9)
        assert agg["h2"] == pytest.approx(fit["h2"], abs=1e-9)
        assert agg["r2"] == pytest.approx(fit["r2"], abs=1e-9)
        assert agg["M"] == 2 * fit["M"]

    def test_aggregate_curve_has_the_four_columns(self, tmp_path, capsys):
        csv = tmp_path / "in.csv"
        write_trace_csv(csv, [sampled_story("s1", seed=7), sampled_story("s2", seed=8)])
        out = tmp_path / "out"
        code = main(["aggregate", "--input", str(csv), "--out-dir", str(out)])
        assert code == 0
        header = (out / "aggregate_curve.tsv").read_text().splitlines()[0]
        assert header == "t\tobserved\tfitted\tsimulated"


class TestSimulate:
    def test_writes_trace_model_curve_and_spectrum(self, tmp_path, capsys):
        out = tmp_path / "sim"
        code = main(
            [
                "simulate", "--out-dir", str(out),
                "--t-n", "20", "--mu", "0.1", "--m-events", "100",
                "--stories", "2", "--seed", "5",
            ]
        )
        assert code == 0
        trace = (out / "trace.csv").read_text()
        assert trace.splitlines()[0] == "story_id,timestamp"
        assert "story_001" in trace and "story_002" in trace
        assert (out / "model_curve.tsv").exists()
        spectrum = (out / "spectrum.tsv").read_text().splitlines()
        assert spectrum[0] == "j\tlambda"
        assert len(spectrum) == 21

    def test_same_seed_is_reproducible(self, tmp_path, capsys):
        args = ["simulate", "--t-n", "10", "--mu", "0.2", "--m-events", "50",
                "--stories", "3", "--seed", "9"]
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(args + ["--out-dir", str(out_a)]) == 0
        assert main(args + ["--out-dir", str(out_b)]) == 0
        assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()

    def test_different_seeds_differ(self, tmp_path, capsys):
        base = ["simulate", "--t-n", "10", "--mu", "0.2", "--m-events", "50"]
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(base + ["--out-dir", str(out_a), "--seed", "1"]) == 0
        assert main(base + ["--out-dir", str(out_b), "--seed", "2"]) == 0
        assert (out_a / "trace.csv").read_bytes() != (out_b / "trace.csv").read_bytes()

    def test_simulated_traces_feed_back_into_fit(self, tmp_path, capsys):
        sim = tmp_path / "sim"
        assert (
            main(
                ["simulate", "--out-dir", str(sim), "--t-n", "50", "--mu", "0.2",
                 "--m-events", "1000", "--stories", "2", "--seed", "4"]
            )
            == 0
        )
        out = tmp_path / "fits"
        code = main(["fit", "--input", str(sim / "trace.csv"), "--out-dir", str(out)])
        assert code == 0
        records = json.loads((out / "fits.json").read_text())
        assert [r["story_id"] for r in records] == ["story_001", "story_002"]

    def test_rejects_invalid_chain_length(self, tmp_path, capsys):
        code = main(["simulate", "--out-dir", str(tmp_path / "o"), "--t-n", "1"])
        assert code == 1


class TestCompare:
    def test_saturating_verdict_on_the_fixture(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["compare", "--input", str(FIXTURE), "--out-dir", str(out)])
        assert code == 0
        (record,) = json.loads((out / "comparison.json").read_text())
        assert record["verdict"] == "saturating"
        assert record["r2_exponential"] > record["r2_linear"]

    def test_memoryless_verdict_on_evenly_spaced_events(self, tmp_path, capsys):
        csv = write_linear_story(tmp_path / "line.csv")
        out = tmp_path / "out"
        code = main(
            ["compare", "--input", str(csv), "--out-dir", str(out),
             "--grid-points", "120"]
        )
        assert code == 0
        (record,) = json.loads((out / "comparison.json").read_text())
        assert record["verdict"] == "memoryless"
        assert record["r2_linear"] > record["r2_exponential"]

    def test_matrix_export_writes_distance_and_rates(self, tmp_path, capsys):
        csv = tmp_path / "in.csv"
        write_trace_csv(csv, [sampled_story("story", seed=13, m=100)])
        out = tmp_path / "out"
        code = main(
            ["compare", "--input", str(csv), "--out-dir", str(out),
             "--min-events", "10", "--export-matrices"]
        )
        assert code == 0
        distance = (out / "story_distance.tsv").read_text().splitlines()
        assert distance[0].startswith("state\tX_")
        assert (out / "story_generator.tsv").exists()

    def test_matrix_export_honors_the_state_cap(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            ["compare", "--input", str(FIXTURE), "--out-dir", str(out),
             "--export-matrices"]
        )
        assert code == 0
        assert "cap" in capsys.readouterr().err
        assert not list(out.glob("*_distance.tsv"))
        assert (out / "comparison.json").exists()

    def test_rescaled_export_has_unit_maximum(self, tmp_path, capsys):
        csv = tmp_path / "in.csv"
        write_trace_csv(csv, [sampled_story("story", seed=13, m=100)])
        out = tmp_path / "out"
        code = main(
            ["compare", "--input", str(csv), "--out-dir", str(out),
             "--min-events", "10", "--export-matrices", "--rescale-distances"]
        )
        assert code == 0
        rows = (out / "story_distance.tsv").read_text().splitlines()[1:]
        top = max(float(cell) for row in rows for cell in row.split("\t")[1:])
        assert top == 1.0


class TestOracleCheck:
    def test_fresh_run_passes_and_prints_the_worked_matrix(self, tmp_path, capsys):
        out = tmp_path / "report"
        code = main(["oracle-check", "--out-dir", str(out)])
        text = capsys.readouterr().out
        assert code == 0
        assert "10/10 checks passed" in text
        assert "X_17" in text
        report = json.loads((out / "oracle_report.json").read_text())
        assert len(report) == 10
        assert all(entry["passed"] for entry in report)
        assert sum(entry["runtime_s"] for entry in report) < 60.0

    def test_tampered_tolerance_fails_the_suite(self, capsys):
        code = main(["oracle-check", "--override-tolerance", "survival-identity=1e-30"])
        text = capsys.readouterr().out
        assert code == 3
        assert "FAIL" in text

    def test_unknown_check_name_exits_one(self, capsys):
        code = main(["oracle-check", "--override-tolerance", "bogus=1"])
        assert code == 1

    def test_malformed_override_exits_one(self, capsys):
        code = main(["oracle-check", "--override-tolerance", "survival-identity=abc"])
        assert code == 1


class TestArgumentHandling:
    def test_no_arguments_is_an_input_error(self, capsys):
        assert main([]) == 1

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == 0

    def test_unknown_subcommand_is_an_input_error(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_bad_mapping_choice_is_an_input_error(self, tmp_path, capsys):
        code = main(
            ["fit", "--input", "x.csv", "--out-dir", str(tmp_path), "--mapping", "best"]
        )
        assert code == 1

    def test_bad_grid_points_is_an_input_error(self, tmp_path, capsys):
        code = main(
            ["fit", "--input", str(FIXTURE), "--out-dir", str(tmp_path / "o"),
             "--grid-points", "1"]
        )
        assert code == 1


class TestEntryPoints:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "ultradiffusion.cli", "simulate",
             "--out-dir", str(tmp_path / "o"), "--t-n", "5", "--m-events", "20"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "o" / "trace.csv").exists()

    def test_console_script(self, tmp_path):
        result = subprocess.run(
            ["ultradiffusion", "fit", "--input", str(FIXTURE),
             "--out-dir", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "o" / "fits.json").exists()
