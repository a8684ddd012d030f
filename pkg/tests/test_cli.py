"""Command-line surface: fit, frontier, budget and simulate."""

import json

import numpy as np
import pytest

from pipeline.cli import main
from pipeline.law_store import load_law, published_document, persist_law
from pipeline.records import ExperimentRecord, append_records, load_records
from pipeline.tsv import read_tsv
from scaling.laws import PUBLISHED_LAWS

DATA_SIZES = [1000, 2000, 5000, 10000, 20000, 50000, 100000, 500000, 1000000]

SIMULATE_FLAGS = ["--train-pairs", "32", "--encode-dim", "2", "--ambient-dim", "4",
                  "--steps", "3", "--batch", "4", "--negatives", "4",
                  "--test-queries", "8", "--eval-negatives", "8"]


@pytest.fixture
def data_records(tmp_path):
    """Records following the published MS MARCO data-size laws at one model size"""
    ood = PUBLISHED_LAWS["data/msmarco/ood"]
    eff = PUBLISHED_LAWS["data/msmarco/effectiveness"]
    records = [ExperimentRecord("standard", 82000000, d, eff(d), ood(d)) for d in DATA_SIZES]
    # a smaller model that the data-size fit must ignore
    records += [ExperimentRecord("standard", 1000000, d, 1.5 * eff(d), 1.5 * ood(d))
                for d in DATA_SIZES[:3]]
    path = tmp_path / "records.csv"
    append_records(path, records)
    return path


@pytest.fixture
def joint_records(tmp_path):
    rob = PUBLISHED_LAWS["joint/standard/robustness"]
    eff = PUBLISHED_LAWS["joint/standard/effectiveness"]
    records = [ExperimentRecord(strategy, int(f), int(d), eff(f, d), rob(f, d), rob(f, d))
               for strategy in ("standard", "pareto")
               for f in (1e6, 1e7, 1e8) for d in (1e3, 1e4, 1e5)]
    path = tmp_path / "joint.csv"
    append_records(path, records)
    return path


class TestFit:

    def test_recovers_data_law(self, data_records, tmp_path):
        out = tmp_path / "law.json"
        code = main(["fit", "--input", str(data_records), "--variable", "data",
                     "--aspect", "ood", "--output", str(out)])
        assert code == 0
        document = load_law(out)
        assert document.kind == "power"
        assert document.coefficients["exponent"] == pytest.approx(0.83, rel=1e-2)
        assert document.coefficients["scale"] == pytest.approx(4.34e3, rel=5e-2)
        assert document.coefficients["offset"] == pytest.approx(0.08, abs=1e-3)
        assert document.r_squared > 0.999
        assert "records.csv" in document.provenance

    def test_stdout(self, data_records, capsys):
        code = main(["-q", "fit", "--input", str(data_records), "--variable", "data",
                     "--aspect", "effectiveness"])
        assert code == 0
        document = json.loads(capsys.readouterr().out)
        assert document["aspect"] == "effectiveness"
        assert document["coefficients"]["exponent"] == pytest.approx(1.11, rel=1e-2)

    def test_joint(self, joint_records, tmp_path):
        out = tmp_path / "joint_law.json"
        code = main(["fit", "--input", str(joint_records), "--variable", "joint",
                     "--aspect", "robustness", "--strategy", "pareto", "--output", str(out)])
        assert code == 0
        document = load_law(out)
        assert document.kind == "joint"
        assert document.r_squared > 0.9

    def test_aspect_without_losses(self, data_records, capsys):
        code = main(["fit", "--input", str(data_records), "--variable", "data",
                     "--aspect", "adversarial"])
        assert code == 1
        assert "✗" in capsys.readouterr().err


class TestFrontier:

    def test_report_and_normalized_series(self, tmp_path):
        path = tmp_path / "points.csv"
        append_records(path, [
            ExperimentRecord("a", 10, 10, 1.0, 3.0),
            ExperimentRecord("b", 10, 10, 1.2, 1.2),
            ExperimentRecord("c", 10, 10, 3.0, 1.0),
            ExperimentRecord("d", 10, 10, 3.0, 3.0),
        ])
        report_path, tsv_path = tmp_path / "report.json", tmp_path / "points.tsv"
        code = main(["frontier", "--input", str(path), "--report", str(report_path),
                     "--emit-normalized", str(tsv_path)])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert [p["label"] for p in report["frontier"]] == \
            ["a/f=10/D=10", "b/f=10/D=10", "c/f=10/D=10"]
        assert report["knee"]["label"] == "b/f=10/D=10"
        assert report["omega0"] == pytest.approx(0.99)
        assert report["omega0_unclamped"] == pytest.approx(1.0)
        assert report["fronts"][1] == ["d/f=10/D=10"]
        series = read_tsv(tsv_path)
        assert list(series.columns) == ["label", "x", "y"]
        assert len(series) == 4


class TestBudget:

    def test_published_laws(self, capsys, tmp_path):
        sweep = tmp_path / "sweep.tsv"
        code = main(["-q", "budget", "--robustness-law", "preset:joint/standard/robustness",
                     "--effectiveness-law", "preset:joint/standard/effectiveness",
                     "--budget", "5000", "--sweep", str(sweep)])
        assert code == 0
        allocation = json.loads(capsys.readouterr().out)
        assert allocation["cost"] <= 5000
        assert allocation["model_size"] >= 1 and allocation["data_size"] >= 1
        series = read_tsv(sweep)
        assert list(series.columns) == ["model_size", "robustness_ce", "effectiveness_ce",
                                        "data_size"]
        assert len(series) > 0

    def test_law_files_and_cost_flags(self, tmp_path, capsys):
        rob, eff = tmp_path / "rob.json", tmp_path / "eff.json"
        persist_law(published_document("joint/pareto/robustness"), rob)
        persist_law(published_document("joint/pareto/effectiveness"), eff)
        code = main(["-q", "budget", "--robustness-law", str(rob), "--effectiveness-law",
                     str(eff), "--budget", "5000", "--model-unit", "1.0", "--weight", "1.0"])
        assert code == 0
        allocation = json.loads(capsys.readouterr().out)
        assert allocation["model_size"] < (5000 - 0.6) / 0.43
        assert allocation["weight"] == 1.0

    def test_cost_model_from_config(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"cost_model": {"z_data": 1.0, "model_unit": 1.0}}))
        code = main(["-q", "budget", "--robustness-law", "preset:joint/standard/robustness",
                     "--effectiveness-law", "preset:joint/standard/effectiveness",
                     "--budget", "5000", "--config", str(config)])
        assert code == 0
        allocation = json.loads(capsys.readouterr().out)
        assert allocation["cost"] == pytest.approx(
            1.0 * allocation["data_size"] + 0.4300000322 * allocation["model_size"])

    def test_power_law_rejected(self, tmp_path, capsys):
        law = tmp_path / "power.json"
        persist_law(published_document("model/msmarco/ood"), law)
        code = main(["budget", "--robustness-law", str(law),
                     "--effectiveness-law", "preset:joint/standard/effectiveness",
                     "--budget", "5000"])
        assert code == 1
        assert "joint" in capsys.readouterr().err

    def test_infeasible_budget(self):
        code = main(["-q", "budget", "--robustness-law", "preset:joint/standard/robustness",
                     "--effectiveness-law", "preset:joint/standard/effectiveness",
                     "--budget", "0.5"])
        assert code == 1


class TestErrors:

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(["fit", "--input", "x.csv"]) == 2
        assert main(["budget", "--robustness-law", "a", "--effectiveness-law", "b",
                     "--budget", "lots"]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["frontier", "--input", str(tmp_path / "absent.csv")]) == 1

    def test_parse_error_names_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("strategy,model_size,data_size,ce_effectiveness,ce_ood,ce_adversarial\n"
                        "standard,ten,10,0.3,0.5,\n")
        assert main(["frontier", "--input", str(path)]) == 1
        err = capsys.readouterr().err
        assert "✗" in err
        assert "line 2" in err and "model_size" in err


class TestSimulate:

    def test_deterministic_output(self, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"
        for out in (first, second):
            code = main(["-q", "simulate", "--seed", "0", "--strategy", "standard",
                         *SIMULATE_FLAGS, "--output", str(out)])
            assert code == 0
        assert first.read_bytes() == second.read_bytes()
        result = json.loads(first.read_text())
        assert result["model_size"] == 8
        assert result["data_size"] == 32
        assert result["omega_trajectory"] == [0.0]

    def test_pareto_with_given_omega0(self, tmp_path, capsys):
        code = main(["-q", "simulate", "--seed", "1", "--strategy", "pareto",
                     "--omega0", "0.3", *SIMULATE_FLAGS])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["omega_trajectory"][0] == 0.3
        assert len(result["omega_trajectory"]) == 4

    def test_config_sections(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"simulate": {
            "task": {"ambient_dim": 6, "encode_dim": 3, "train_pairs": 16, "test_queries": 4,
                     "eval_negatives": 4, "corpus_size": 64},
            "train": {"steps": 2, "batch": 2, "negatives": 3},
        }}))
        code = main(["-q", "simulate", "--seed", "2", "--config", str(config),
                     "--encode-dim", "2"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["model_size"] == 12
        assert result["data_size"] == 16
        assert len(result["loss_trajectory"]) == 2

    def test_epoch_budget_and_step_override(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"simulate": {
            "task": {"ambient_dim": 6, "encode_dim": 3, "train_pairs": 16, "test_queries": 4,
                     "eval_negatives": 4, "corpus_size": 64},
            "train": {"epochs": 2, "lr_decay": True, "batch": 4, "negatives": 3},
        }}))
        assert main(["-q", "simulate", "--seed", "2", "--config", str(config)]) == 0
        assert len(json.loads(capsys.readouterr().out)["loss_trajectory"]) == 8
        assert main(["-q", "simulate", "--seed", "2", "--config", str(config),
                     "--steps", "3"]) == 0
        assert len(json.loads(capsys.readouterr().out)["loss_trajectory"]) == 3
        assert main(["-q", "simulate", "--seed", "2", "--config", str(config),
                     "--epochs", "1"]) == 0
        assert len(json.loads(capsys.readouterr().out)["loss_trajectory"]) == 4

    def test_malformed_config(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text("{not json")
        assert main(["simulate", "--seed", "0", "--config", str(config)]) == 1
        assert "✗" in capsys.readouterr().err

    def test_pipeline_closure(self, tmp_path, capsys):
        """Simulated records feed fit, frontier and budget end to end."""
        records = tmp_path / "records.csv"
        for strategy in ("standard", "adversarial", "pareto"):
            for pairs in (16, 32, 64):
                for encode_dim in (2, 3):
                    flags = ["--train-pairs", str(pairs), "--encode-dim", str(encode_dim),
                             "--ambient-dim", "4", "--steps", "3", "--batch", "4",
                             "--negatives", "4", "--test-queries", "8",
                             "--eval-negatives", "8"]
                    code = main(["-q", "simulate", "--seed", "0", "--strategy", strategy,
                                 *flags, "--append", str(records),
                                 "--output", str(tmp_path / "run.json")])
                    assert code == 0
        assert len(load_records(records)) == 18

        laws = {}
        for aspect in ("robustness", "effectiveness"):
            laws[aspect] = tmp_path / f"{aspect}.json"
            assert main(["-q", "fit", "--input", str(records), "--variable", "joint",
                         "--aspect", aspect, "--output", str(laws[aspect])]) == 0
        assert main(["-q", "frontier", "--input", str(records),
                     "--report", str(tmp_path / "frontier.json")]) == 0
        capsys.readouterr()
        assert main(["-q", "budget", "--robustness-law", str(laws["robustness"]),
                     "--effectiveness-law", str(laws["effectiveness"]),
                     "--budget", "5000"]) == 0
        allocation = json.loads(capsys.readouterr().out)
        assert allocation["cost"] <= 5000
        assert np.isfinite(allocation["objective"])
