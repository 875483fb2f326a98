import json

import numpy as np
import pytest

from maxreg import cli, net
from maxreg.net import Architecture, Parameters


@pytest.fixture
def rank1_net(tmp_path):
    gen = np.random.default_rng(0)
    arch = Architecture(2, (3,), 1, 1)
    params = Parameters(
        (gen.normal(size=(3, 1, 2)),),
        (gen.normal(size=(3, 1)),),
        gen.normal(size=(1, 3)),
        gen.normal(size=1),
    )
    path = tmp_path / "net.json"
    path.write_text(net.to_json(arch, params))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestWindowParsing:
    def test_single_interval_broadcast(self):
        w = cli.parse_window("-2:2", 3)
        assert w.bounds == ((-2.0, 2.0),) * 3

    def test_explicit_intervals(self):
        w = cli.parse_window("-1:1,0:5", 2)
        assert w.bounds == ((-1.0, 1.0), (0.0, 5.0))

    def test_wrong_count(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_window("-1:1,0:5", 3)

    def test_garbage(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_window("abc", 1)


class TestCount:
    def test_rank1_single_region(self, rank1_net, capsys):
        code, out, _ = run(capsys, "count", "--net", rank1_net, "--window", "-50:50")
        assert code == 0
        doc = json.loads(out)
        assert doc["regions"] == 1

    def test_missing_file_exit_2(self, capsys):
        code, _, err = run(capsys, "count", "--net", "/nonexistent.json")
        assert code == 2
        assert "not found" in err

    def test_reports_identical_minus_wall_time(self, rank1_net, capsys):
        docs = []
        for _ in range(2):
            code, out, _ = run(capsys, "count", "--net", rank1_net, "--seed", "1")
            assert code == 0
            doc = json.loads(out)
            doc.pop("wall_time_s")
            docs.append(doc)
        assert docs[0] == docs[1]

    def test_malformed_file_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "count", "--net", str(bad))
        assert code == 2
        assert "bad.json" in err


class TestCountDb:
    def test_one_output_exit_2(self, rank1_net, capsys):
        code, _, err = run(capsys, "count-db", "--net", rank1_net)
        assert code == 2


class TestApprox:
    def test_rank1(self, rank1_net, capsys):
        code, out, _ = run(
            capsys, "approx", "--net", rank1_net, "--grid", "64"
        )
        assert code == 0
        assert json.loads(out)["regions"] == 1

    def test_cap_exceeded_exit_2(self, rank1_net, capsys):
        code, _, _ = run(capsys, "approx", "--net", rank1_net, "--grid", "9999")
        assert code == 2


class TestRegionmap:
    def test_rows_and_determinism(self, rank1_net, tmp_path, capsys):
        out1 = tmp_path / "m1.csv"
        out2 = tmp_path / "m2.csv"
        for out in (out1, out2):
            code, _, _ = run(
                capsys,
                "regionmap",
                "--net",
                rank1_net,
                "--grid",
                "5",
                "--out",
                str(out),
            )
            assert code == 0
        lines = out1.read_text().splitlines()
        assert lines[0] == "y1,y2,label"
        assert len(lines) == 26
        assert out1.read_bytes() == out2.read_bytes()
        labels = {line.rsplit(",", 1)[1] for line in lines[1:]}
        assert labels == {"0"}


class TestBounds:
    def test_paper_values_json(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds",
            "--n0",
            "2",
            "--units",
            "3",
            "--rank",
            "2",
            "--json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["trivial_pattern_bound"] == 8
        assert doc["generic_lower_bound"] == [7, 1]
        assert doc["max_regions_shallow"] == 7

    def test_rejects_r_above_n0(self, capsys):
        code, _, err = run(
            capsys, "bounds", "--n0", "2", "--units", "3", "--rank", "2", "--r", "3"
        )
        assert code == 2

    def test_table_mode(self, capsys):
        code, out, _ = run(capsys, "bounds", "--n0", "1", "--units", "2", "--rank", "2")
        assert code == 0
        assert "max_regions_shallow" in out


class TestInitDump:
    def test_round_trip(self, tmp_path, capsys):
        out = tmp_path / "net.json"
        code, _, _ = run(
            capsys,
            "init-dump",
            "--n0",
            "2",
            "--widths",
            "3",
            "--rank",
            "2",
            "--seed",
            "4",
            "--out",
            str(out),
        )
        assert code == 0
        arch, params = net.from_json(out.read_text())
        assert arch == Architecture(2, (3,), 2, 1)

    def test_bad_scheme_exit_2(self, capsys):
        code, _, _ = run(
            capsys,
            "init-dump",
            "--scheme",
            "bogus",
            "--n0",
            "1",
            "--widths",
            "1",
            "--rank",
            "2",
        )
        assert code == 2


class TestExperimentCommand:
    def test_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "arch": {"n0": 2, "widths": [[2]], "rank": 2},
                    "trials": 2,
                    "counters": ["exact"],
                    "out": str(tmp_path / "run"),
                }
            )
        )
        code, out, _ = run(capsys, "experiment", "--config", str(cfg))
        assert code == 0
        paths = json.loads(out)
        assert (tmp_path / "run.csv").exists()
        assert (tmp_path / "run.summary.csv").exists()

    def test_missing_config_exit_2(self, capsys):
        code, _, _ = run(capsys, "experiment", "--config", "/nope.json")
        assert code == 2
