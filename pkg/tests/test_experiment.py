import csv
import json
import os

import numpy as np
import pytest

from maxreg import experiment
from maxreg.experiment import ExperimentConfig, expand_widths, run_experiment


def small_config(tmp_path, **overrides):
    doc = {
        "arch": {"n0": 2, "widths": [[3]], "rank": 2, "out_dim": 1},
        "init": {"scheme": "maxout_he"},
        "window": {"half": 50},
        "trials": 3,
        "counters": ["exact", "grid"],
        "grid_pts": 128,
        "out": str(tmp_path / "run"),
        "seed": 7,
    }
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestExpandWidths:
    def test_paper_example(self):
        assert expand_widths(3, 110) == (37, 37, 36)

    def test_even_split(self):
        assert expand_widths(2, 10) == (5, 5)

    def test_remainder_goes_to_lower_layers(self):
        assert expand_widths(4, 7) == (2, 2, 2, 1)

    def test_validation(self):
        with pytest.raises(ValueError):
            expand_widths(3, 2)


class TestConfigParsing:
    def test_grid_expansion(self):
        cfg = ExperimentConfig.from_dict(
            {
                "arch": {
                    "n0": [1, 2],
                    "widths": [[3]],
                    "depth_total": [[2, 4]],
                    "rank": [2, 3],
                },
            }
        )
        shapes = {(a.n0, a.widths, a.rank) for a in cfg.arch_points}
        assert (1, (3,), 2) in shapes
        assert (2, (2, 2), 3) in shapes
        assert len(cfg.arch_points) == 2 * 2 * 2

    def test_default_trials(self):
        cfg = ExperimentConfig.from_dict({"arch": {"widths": [[2]]}})
        assert cfg.trials == 30

    def test_unknown_counter(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(
                {"arch": {"widths": [[2]]}, "counters": ["bogus"]}
            )

    def test_needs_widths(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"arch": {}})

    def test_trial_seed_is_stable(self):
        cfg = ExperimentConfig.from_dict({"arch": {"widths": [[2]]}, "seed": 3})
        assert cfg.trial_seed(0, 1) == cfg.trial_seed(0, 1)
        assert cfg.trial_seed(0, 1) != cfg.trial_seed(1, 0)


class TestRunExperiment:
    def test_rows_and_summary(self, tmp_path):
        cfg = small_config(tmp_path)
        csv_path, summary_path = run_experiment(cfg)
        rows = read_rows(csv_path)
        assert len(rows) == 3
        assert [r["trial"] for r in rows] == ["0", "1", "2"]
        for r in rows:
            assert r["error"] == ""
            assert int(r["grid_regions"]) <= int(r["exact_regions"])
            assert int(r["exact_regions"]) <= int(r["trivial_upper"])
        summary = read_rows(summary_path)
        assert len(summary) == 1
        vals = [int(r["exact_regions"]) for r in rows]
        assert float(summary[0]["exact_regions_mean"]) == pytest.approx(
            np.mean(vals), abs=1e-12
        )
        assert float(summary[0]["exact_regions_std"]) == pytest.approx(
            np.std(vals), abs=1e-12
        )

    def test_resume_skips_completed(self, tmp_path):
        cfg = small_config(tmp_path)
        run_experiment(cfg)
        partial = cfg.out + ".partial.csv"
        before = read_rows(partial)
        # rerun with more trials: only the new ones are executed
        cfg2 = small_config(tmp_path, trials=5)
        csv_path, _ = run_experiment(cfg2)
        after = read_rows(partial)
        assert len(before) == 3 and len(after) == 5
        assert after[:3] == before
        rows = read_rows(csv_path)
        assert [(r["config_idx"], r["trial"]) for r in rows] == [
            ("0", str(t)) for t in range(5)
        ]

    def test_worker_count_irrelevant(self, tmp_path):
        cfg1 = small_config(tmp_path, out=str(tmp_path / "w1"), workers=1)
        cfg2 = small_config(tmp_path, out=str(tmp_path / "w2"), workers=3)
        p1, _ = run_experiment(cfg1)
        p2, _ = run_experiment(cfg2)
        assert experiment.stable_csv_text(p1) == experiment.stable_csv_text(p2)

    def test_trial_errors_recorded(self, tmp_path):
        # db counter on a single-output net fails per trial, not globally
        cfg = small_config(tmp_path, counters=["db"])
        csv_path, _ = run_experiment(cfg)
        rows = read_rows(csv_path)
        assert len(rows) == 3
        assert all("ValueError" in r["error"] for r in rows)

    def test_schema_stable(self, tmp_path):
        cfg = small_config(tmp_path)
        csv_path, _ = run_experiment(cfg)
        with open(csv_path) as fh:
            header = fh.readline().strip().split(",")
        assert header == experiment.CSV_COLUMNS
