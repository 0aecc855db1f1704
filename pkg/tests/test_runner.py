import csv
import json
import math
import os

import numpy as np
import pytest

from latentcl import runner as R
from latentcl.classifiers import Hyperparams
from latentcl.cli import main as cli_main
from latentcl.errors import BadConfig, UnknownKey
from latentcl.featurestore import write_lcf

from factories import toy_dataset

SYNTH = {
    "latent_dim": 32,
    "n_classes": 6,
    "samples_per_class": 40,
    "test_samples_per_class": 0,
    "target_similarity": 0.3,
    "within_class_noise": 0.2,
    "seed": 0,
}


def base_config(tmp_path, **overrides):
    raw = {
        "datasets": [{"name": "toy", "synth": dict(SYNTH)}],
        "n_tasks": 3,
        "ordering_seeds": [0],
        "er_sizes": [2],
        "classifiers": ["mlp", "nmc", "slda"],
        "grid": [{"learning_rate": 0.05, "batch_size": 32}],
        "epochs": 2,
        "hidden": 32,
        "k": 5,
        "output_dir": str(tmp_path / "out"),
    }
    raw.update(overrides)
    return raw


class TestConfigParsing:
    def test_round_trip(self, tmp_path):
        cfg = R.config_from_dict(base_config(tmp_path))
        assert cfg.n_tasks == 3
        assert cfg.datasets[0].name == "toy"
        assert cfg.grid[0].learning_rate == 0.05

    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(UnknownKey):
            R.config_from_dict(base_config(tmp_path, typo_key=1))

    def test_unknown_synth_key(self, tmp_path):
        raw = base_config(tmp_path)
        raw["datasets"][0]["synth"]["bogus"] = 1
        with pytest.raises(UnknownKey):
            R.config_from_dict(raw)

    def test_unknown_grid_key(self, tmp_path):
        raw = base_config(tmp_path, grid=[{"lr": 0.1}])
        with pytest.raises(UnknownKey):
            R.config_from_dict(raw)

    def test_dataset_needs_exactly_one_source(self, tmp_path):
        raw = base_config(tmp_path)
        raw["datasets"][0]["path"] = "x.lcf"
        with pytest.raises(BadConfig):
            R.config_from_dict(raw)
        del raw["datasets"][0]["path"]
        del raw["datasets"][0]["synth"]
        with pytest.raises(BadConfig):
            R.config_from_dict(raw)

    def test_epochs_propagates_into_grid(self, tmp_path):
        cfg = R.config_from_dict(base_config(tmp_path, epochs=7))
        assert cfg.grid[0].epochs == 7

    def test_grid_epochs_override_kept(self, tmp_path):
        raw = base_config(tmp_path, epochs=7,
                          grid=[{"learning_rate": 0.05, "epochs": 3}])
        cfg = R.config_from_dict(raw)
        assert cfg.grid[0].epochs == 3

    def test_parse_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(base_config(tmp_path)))
        cfg = R.parse_config(path)
        assert cfg.n_tasks == 3

    def test_validation_failures(self, tmp_path):
        with pytest.raises(BadConfig):
            R.config_from_dict(base_config(tmp_path, datasets=[]))
        with pytest.raises(BadConfig):
            R.config_from_dict(base_config(tmp_path, er_sizes=[-1]))
        with pytest.raises(BadConfig):
            R.config_from_dict(base_config(tmp_path, stream="bogus"))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRunExperiment:
    def test_cell_enumeration_and_csv_schema(self, tmp_path):
        raw = base_config(tmp_path, er_sizes=[0, 2], ordering_seeds=[0, 1])
        out = R.run_experiment(R.config_from_dict(raw))
        # per ordering: 2 MLP er-cells + nmc + slda
        assert len(out["cells"]) == 2 * (2 + 2)
        rows = read_csv(out["csv_path"])
        assert rows[0] == R.CSV_COLUMNS
        assert len(rows) == 1 + len(out["cells"])
        assert out["failures"] == []

    def test_metric_cells_ignore_er_sizes(self, tmp_path):
        out = R.run_experiment(R.config_from_dict(
            base_config(tmp_path, er_sizes=[0, 2, 5])))
        kinds = [c["classifier"] for c in out["cells"]]
        assert kinds.count("nmc") == 1 and kinds.count("slda") == 1
        assert kinds.count("mlp") == 3

    def test_metric_identities_hold_in_cells(self, tmp_path):
        out = R.run_experiment(R.config_from_dict(base_config(tmp_path)))
        mlp = [c for c in out["cells"] if c["classifier"] == "mlp"][0]
        assert mlp["forgetting"] == pytest.approx(mlp["a_task_cl"] - mlp["a_cl"])
        assert mlp["transfer"] == pytest.approx(mlp["a_cl"] - mlp["a_cl_reinit"])
        assert mlp["interference"] == pytest.approx(mlp["a_task_iid"] - mlp["a_task_cl"])
        assert mlp["interference_total"] == pytest.approx(mlp["a_task_iid"] - mlp["a_iid"])
        assert mlp["end2end_flops"] >= mlp["latent_flops"] > 0

    def test_byte_identical_reruns(self, tmp_path):
        raw_a = base_config(tmp_path, output_dir=str(tmp_path / "a"))
        raw_b = base_config(tmp_path, output_dir=str(tmp_path / "b"))
        out_a = R.run_experiment(R.config_from_dict(raw_a))
        out_b = R.run_experiment(R.config_from_dict(raw_b))
        with open(out_a["csv_path"], "rb") as fa, open(out_b["csv_path"], "rb") as fb:
            assert fa.read() == fb.read()
        with open(out_a["summary_path"], "rb") as fa, open(out_b["summary_path"], "rb") as fb:
            assert fa.read() == fb.read()

    def test_per_cell_json_written(self, tmp_path):
        out = R.run_experiment(R.config_from_dict(base_config(tmp_path)))
        names = os.listdir(R.config_from_dict(base_config(tmp_path)).output_dir)
        jsons = [n for n in names if n.endswith(".json")]
        assert len(jsons) == len(out["cells"])
        with open(os.path.join(str(tmp_path / "out"), sorted(jsons)[0])) as fh:
            cell = json.load(fh)
        assert "accuracy_matrix" in cell

    def test_summary_groups_across_orderings(self, tmp_path):
        raw = base_config(tmp_path, ordering_seeds=[0, 1, 2])
        out = R.run_experiment(R.config_from_dict(raw))
        rows = read_csv(out["summary_path"])
        header, body = rows[0], rows[1:]
        n_idx = header.index("n_orderings")
        mlp_rows = [r for r in body if r[2] == "mlp"]
        assert all(r[n_idx] == "3" for r in mlp_rows)

    def test_failure_isolated_per_dataset(self, tmp_path):
        raw = base_config(tmp_path)
        raw["datasets"].append({"name": "missing", "path": str(tmp_path / "nope.lcf")})
        cfg = R.config_from_dict(raw)
        out = R.run_experiment(cfg)
        assert any(c["dataset"] == "toy" for c in out["cells"])
        assert out["failures"]

    def test_lcf_dataset_source(self, tmp_path):
        ds = toy_dataset(n_classes=6, per_class=30, d=16)
        path = tmp_path / "toy.lcf"
        write_lcf(ds, path)
        raw = base_config(tmp_path, datasets=[{"name": "file", "path": str(path)}],
                          k=4)
        out = R.run_experiment(R.config_from_dict(raw))
        assert out["failures"] == []
        assert all(c["dataset"] == "file" for c in out["cells"])

    def test_multi_dataset_stream(self, tmp_path):
        second = dict(SYNTH, seed=1, n_classes=4)
        raw = base_config(
            tmp_path, stream="multi_dataset",
            datasets=[{"name": "a", "synth": dict(SYNTH)},
                      {"name": "b", "synth": second}],
            n_tasks=2,
        )
        out = R.run_experiment(R.config_from_dict(raw))
        assert out["failures"] == []
        assert all(c["dataset"].startswith("multi:") for c in out["cells"])


class TestCLI:
    def test_synth_info_similarity(self, tmp_path, capsys):
        scfg = tmp_path / "synth.json"
        scfg.write_text(json.dumps(SYNTH))
        lcf = str(tmp_path / "data.lcf")
        assert cli_main(["synth", str(scfg), lcf]) == 0
        assert cli_main(["info", lcf]) == 0
        captured = capsys.readouterr().out
        assert "dim:      32" in captured
        matrix_csv = str(tmp_path / "matrix.csv")
        assert cli_main(["similarity", lcf, "--tasks", "3", "--k", "5",
                         "--out", matrix_csv]) == 0
        assert os.path.exists(matrix_csv)

    def test_run_subcommand(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(base_config(tmp_path)))
        assert cli_main(["run", str(cfg)]) == 0
        assert os.path.exists(tmp_path / "out" / "cells.csv")

    def test_compute_model(self, tmp_path, capsys):
        params = tmp_path / "params.json"
        params.write_text(json.dumps({
            "c_enc": 1.76e10, "latent_dim": 768, "n_tasks": 5,
            "classes_per_task": 20, "samples_per_class": 100,
            "epochs": 10, "er_size": 20,
        }))
        assert cli_main(["compute-model", str(params)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "task,latent_flops,end2end_flops,ratio"
        assert len(lines) == 6
        final_ratio = float(lines[-1].split(",")[-1])
        assert final_ratio >= 50
