import csv
import json

import pytest

from qfuse.cli import DEFAULTS, build_parser, main
from qfuse.data import standin_path
from qfuse.report import Series, render_svg

FAST = ["--permutations", "50", "--workers", "1"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh, delimiter="\t" if path.endswith(".tsv") else ","))


class TestTestCommand:
    def test_null_run(self, capsys):
        assert main(["test", "--gen", "gaussian", "--d", "0", "--n", "50", "--seed", "1", "--permutations", "200"]) == 0
        out = capsys.readouterr().out
        p = float(out.split("p-value = ")[1].split()[0])
        assert p >= 1 / 201

    def test_saturated_rejects(self, tmp_path):
        assert main(["test", "--gen", "gaussian", "--d", "50", "--n", "20", "--permutations", "200",
                     "--out", str(tmp_path)]) == 0
        result = json.loads((tmp_path / "result.json").read_text())
        assert result["reject"] is True
        assert result["p_value"] == 1 / 201
        assert len(result["per_kernel_mmd"]) == 25

    def test_heart_manifest_groups(self, tmp_path):
        code = main(["test", "--data", standin_path("heart_failure"), "--features",
                     "ejection_fraction,serum_creatinine", "--label", "DEATH_EVENT", "--permutations", "100",
                     "--out", str(tmp_path)])
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["groups"] == [203, 96]
        assert manifest["command"] == "test"
        assert manifest["config"]["label"] == "DEATH_EVENT"
        assert standin_path("heart_failure") in manifest["inputs"]

    def test_pair_files(self, tmp_path):
        assert main(["gen", "--m", "30", "--d", "2", "--out", str(tmp_path)]) == 0
        assert main(["test", "--x", str(tmp_path / "X.csv"), "--y", str(tmp_path / "Y.csv"),
                     "--permutations", "100", "--pool", "classical"]) == 0

    def test_missing_column_is_data_error(self, capsys):
        code = main(["test", "--data", standin_path("heart_failure"), "--features", "bogus",
                     "--label", "DEATH_EVENT"])
        assert code == 3
        assert "bogus" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["test", "--x", str(tmp_path / "nope.csv"), "--y", str(tmp_path / "nope.csv")]) == 3

    def test_config_errors(self, capsys):
        assert main(["test", "--gen", "gaussian", "--alpha", "1.5"]) == 2
        assert main(["test", "--pool", "classical", "--hybrid-p", "0.5", "--n", "10"]) == 2
        assert main(["test", "--data", "file.csv"]) == 2
        assert "--label" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["test", "--bogus-flag"]) == 2
        assert "bogus" in capsys.readouterr().err


class TestHelp:
    @pytest.mark.parametrize("cmd", ["test", "power", "sweep", "gen", "report"])
    def test_every_flag_documented(self, cmd, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args([cmd, "--help"])
        text = capsys.readouterr().out
        assert "default" in text
        sub = build_parser()._subparsers._group_actions[0].choices[cmd]
        for action in sub._actions:
            if action.option_strings and action.dest != "help":
                assert action.help and "default" in action.help, action.dest

    def test_power_defaults(self):
        d = DEFAULTS["power"]
        assert d["sizes"] == "10,20,30,40,50,60,70,80,90"
        assert (d["reps"], d["alpha"], d["permutations"]) == (50, 0.05, 2000)


class TestPowerCommand:
    def test_table_and_manifest(self, tmp_path):
        out = tmp_path / "run"
        code = main(["power", "--sizes", "10,20", "--reps", "4", "--out", str(out), *FAST])
        assert code == 0
        rows = _rows(str(out / "power.csv"))
        assert list(rows[0]) == ["sample_size", "power", "stderr", "tnr", "tnr_stderr"]
        assert [r["sample_size"] for r in rows] == ["10", "20"]
        assert json.loads((out / "manifest.json").read_text())["outputs"] == ["power.csv"]

    def test_single_rep_zero_stderr(self, tmp_path):
        assert main(["power", "--sizes", "10,20,30", "--reps", "1", "--out", str(tmp_path), *FAST]) == 0
        rows = _rows(str(tmp_path / "power.csv"))
        assert all(float(r["stderr"]) == 0.0 and float(r["tnr_stderr"]) == 0.0 for r in rows)

    def test_manifest_replay_byte_identical(self, tmp_path):
        first = tmp_path / "a"
        assert main(["power", "--sizes", "10,20", "--reps", "5", "--seed", "7", "--out", str(first),
                     "--format", "tsv", *FAST]) == 0
        second = tmp_path / "b"
        assert main(["power", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
        assert (first / "power.tsv").read_bytes() == (second / "power.tsv").read_bytes()

    def test_config_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sizes": "10", "reps": 3, "permutations": 20, "seed": 2}))
        assert main(["power", "--config", str(cfg), "--reps", "2", "--out", str(tmp_path / "o"),
                     "--workers", "1"]) == 0
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["config"]["reps"] == 2 and manifest["config"]["permutations"] == 20

    def test_config_unknown_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"repetitions": 3}))
        assert main(["power", "--config", str(cfg)]) == 2

    def test_manifest_command_mismatch(self, tmp_path):
        assert main(["gen", "--m", "10", "--out", str(tmp_path)]) == 0
        assert main(["power", "--config", str(tmp_path / "manifest.json")]) == 2

    def test_bad_sizes(self):
        assert main(["power", "--sizes", "20,10", *FAST]) == 2
        assert main(["power", "--sizes", "a,b", *FAST]) == 2

    def test_plot(self, tmp_path):
        plot = tmp_path / "p.svg"
        assert main(["power", "--sizes", "10", "--reps", "2", "--out", str(tmp_path), "--plot", str(plot), *FAST]) == 0
        assert plot.read_text().startswith("<svg")


class TestSweepCommand:
    def test_p_grid(self, tmp_path):
        code = main(["sweep", "--sweep", "p", "--grid", "0,0.5,1", "--sizes", "10,20", "--reps", "3",
                     "--out", str(tmp_path), *FAST])
        assert code == 0
        long = _rows(str(tmp_path / "sweep_p.csv"))
        assert len(long) == 3 * 2
        assert list(long[0]) == ["parameter", "value", "sample_size", "power", "stderr"]
        for v in ("0", "0.5", "1"):
            assert (tmp_path / f"sweep_p_{v}.csv").exists()

    def test_endpoints_match_pure_pools(self, tmp_path):
        common = ["--sizes", "10,20", "--reps", "6", "--seed", "3", *FAST]
        assert main(["sweep", "--sweep", "p", "--grid", "0,1", "--out", str(tmp_path / "s"), *common]) == 0
        assert main(["power", "--pool", "classical", "--out", str(tmp_path / "c"), *common]) == 0
        assert main(["power", "--pool", "quantum", "--out", str(tmp_path / "q"), *common]) == 0
        for value, pure in (("0", "c"), ("1", "q")):
            sweep = [(r["sample_size"], r["power"]) for r in _rows(str(tmp_path / "s" / f"sweep_p_{value}.csv"))]
            base = [(r["sample_size"], r["power"]) for r in _rows(str(tmp_path / pure / "power.csv"))]
            assert sweep == base

    def test_empty_grid(self):
        assert main(["sweep", "--sweep", "p", "--grid", "", *FAST]) == 2
        assert main(["sweep", "--sweep", "p", *FAST]) == 2

    def test_lambda(self, tmp_path):
        code = main(["sweep", "--sweep", "lambda", "--grid", "0.5,2", "--sizes", "10", "--reps", "2",
                     "--out", str(tmp_path), *FAST])
        assert code == 0
        assert len(_rows(str(tmp_path / "sweep_lambda.csv"))) == 2


class TestGenCommand:
    def test_lognormal(self, tmp_path):
        assert main(["gen", "--family", "lognormal", "--d", "0.5", "--dims", "2", "--m", "500",
                     "--out", str(tmp_path)]) == 0
        for name in ("X.csv", "Y.csv"):
            rows = _rows(str(tmp_path / name))
            assert len(rows) == 500 and len(rows[0]) == 2
            assert all(float(v) > 0 for r in rows for v in r.values())

    def test_six_dims(self, tmp_path):
        assert main(["gen", "--family", "gaussian", "--dims", "6", "--m", "10", "--out", str(tmp_path)]) == 0
        assert len(_rows(str(tmp_path / "X.csv"))[0]) == 6

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert main(["gen", "--seed", "4", "--m", "20", "--out", str(tmp_path / d)]) == 0
        for name in ("X.csv", "Y.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["seed"] == 4


class TestReportCommand:
    def _table(self, path, sizes):
        with open(path, "w") as fh:
            fh.write("sample_size,power,stderr\n")
            for n in sizes:
                fh.write(f"{n},{n / 100},0.05\n")

    def test_single_table(self, tmp_path):
        t = tmp_path / "a.csv"
        self._table(t, [10, 20, 30])
        out = tmp_path / "r.svg"
        assert main(["report", str(t), "--out", str(out)]) == 0
        svg = out.read_text()
        assert svg.count("<polyline") == 1
        assert (tmp_path / "r.manifest.json").exists()

    def test_gaps_and_union(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self._table(a, [10, 30])
        self._table(b, [10, 20, 30])
        out = tmp_path / "r.svg"
        assert main(["report", str(a), str(b), "--out", str(out)]) == 0
        svg = out.read_text()
        # series a has no point at 20, so its two points are not joined
        assert svg.count("<polyline") == 1
        assert ">20</text>" in svg

    def test_deterministic(self, tmp_path):
        t = tmp_path / "a.csv"
        self._table(t, [10, 20])
        assert main(["report", str(t), "--out", str(tmp_path / "1.svg")]) == 0
        assert main(["report", str(t), "--out", str(tmp_path / "2.svg")]) == 0
        assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()

    def test_malformed_table(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("sample_size,power\n10,0.5\n")
        assert main(["report", str(bad), "--out", str(tmp_path / "x.svg")]) == 3
        bad.write_text("sample_size,power,stderr\nten,0.5,0.1\n")
        assert main(["report", str(bad), "--out", str(tmp_path / "x.svg")]) == 3

    def test_sweep_long_table_series(self, tmp_path):
        assert main(["sweep", "--sweep", "p", "--grid", "0,1", "--sizes", "10", "--reps", "2",
                     "--out", str(tmp_path), *FAST]) == 0
        out = tmp_path / "r.svg"
        assert main(["report", str(tmp_path / "sweep_p.csv"), "--out", str(out)]) == 0
        svg = out.read_text()
        assert "p=0" in svg and "p=1" in svg


def test_render_svg_error_bars():
    svg = render_svg([Series("s", {10: (0.5, 0.1)})])
    assert svg.count("<circle") == 1
    assert svg.endswith("</svg>\n")


def test_report_replay_from_manifest(tmp_path):
    t = tmp_path / "a.csv"
    t.write_text("sample_size,power,stderr\n10,0.2,0.05\n20,0.6,0.05\n")
    assert main(["report", str(t), "--out", str(tmp_path / "one.svg"), "--title", "x"]) == 0
    assert main(["report", "--config", str(tmp_path / "one.manifest.json"), "--out", str(tmp_path / "two.svg")]) == 0
    assert (tmp_path / "one.svg").read_bytes() == (tmp_path / "two.svg").read_bytes()
    assert main(["report", "--out", str(tmp_path / "three.svg")]) == 2
