"""Command-line interface: commands, exit codes, file outputs."""

import json
import os

import pytest

from rescuesim.cli import main

TINY_WORLD = """grid 44 44 0.05
{rows}
tag 0 1.1 2.0 0.2 270
""".format(rows="\n".join(
    "#" * 44 if r in (0, 43) else "#" + "." * 42 + "#" for r in range(44)
))

FAST_SETTINGS = [
    "--set", "lidar.n_beams=120",
    "--set", "exploration.num_samples=12",
    "--set", "exploration.n_rays=36",
    "--set", "exploration.sensor_max_range=3.0",
]


@pytest.fixture
def tiny_world(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY_WORLD)
    return path


class TestRun:
    def test_happy_path_writes_outputs(self, tiny_world, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["run", "--world", str(tiny_world), "--seed", "7",
                     "--out", str(out)] + FAST_SETTINGS)
        assert code == 0
        for name in ("report.json", "ckf_estimates.json",
                     "last_measurement_estimates.json", "final_map.pgm",
                     "final_map.png", "tag_errors.png"):
            assert (out / name).exists(), name
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "DONE"
        assert report["seed"] == 7
        assert "DONE" in capsys.readouterr().out

    def test_missing_world_exits_1(self, tmp_path, capsys):
        code = main(["run", "--world", str(tmp_path / "nope.txt"),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_bad_config_value_exits_1(self, tiny_world, tmp_path, capsys):
        code = main(["run", "--world", str(tiny_world), "--out", str(tmp_path / "o"),
                     "--set", "camera.max_range=abc"])
        assert code == 1

    def test_unknown_config_key_exits_1(self, tiny_world, tmp_path):
        code = main(["run", "--world", str(tiny_world), "--out", str(tmp_path / "o"),
                     "--set", "nosuch.key=1"])
        assert code == 1

    def test_watchdog_trip_exits_2(self, tiny_world, tmp_path):
        code = main(["run", "--world", str(tiny_world), "--out", str(tmp_path / "o"),
                     "--set", "mission.watchdog=2.0"] + FAST_SETTINGS)
        assert code == 2
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["status"] == "INCOMPLETE"

    def test_config_file_with_line_numbered_error(self, tiny_world, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("camera.max_range = 4.0\ncamera.nope = 1\n")
        code = main(["run", "--world", str(tiny_world), "--config", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, tiny_world, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main(["run", "--world", str(tiny_world), "--seed", "3",
                         "--out", str(out)] + FAST_SETTINGS)
            assert code == 0
            outs.append({
                f: (out / f).read_bytes()
                for f in ("report.json", "ckf_estimates.json",
                          "last_measurement_estimates.json", "final_map.pgm")
            })
        assert outs[0] == outs[1]

    def test_outputs_confined_to_out_dir(self, tiny_world, tmp_path, monkeypatch):
        workdir = tmp_path / "cwd"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        out = tmp_path / "only_here"
        code = main(["run", "--world", str(tiny_world), "--seed", "1",
                     "--out", str(out)] + FAST_SETTINGS)
        assert code == 0
        assert list(workdir.iterdir()) == []

    def test_env_var_out_root(self, tiny_world, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("RESCUESIM_OUT", str(tmp_path / "envout"))
        code = main(["run", "--world", str(tiny_world), "--seed", "1"]
                    + FAST_SETTINGS)
        assert code == 0
        assert (tmp_path / "envout" / "report.json").exists()


class TestStats:
    def test_paper_table1_world(self, capsys):
        assert main(["stats", "--paper-table1", "world"]) == 0
        out = capsys.readouterr().out
        assert "0.15" in out and "p" in out
        p = float(out.strip().splitlines()[-1].split("=")[-1])
        assert abs(p - 0.02) <= 0.005

    def test_paper_table1_house(self, capsys):
        assert main(["stats", "--paper-table1", "house"]) == 0
        p = float(capsys.readouterr().out.strip().splitlines()[-1].split("=")[-1])
        assert abs(p - 0.22) <= 0.02

    def test_csv_columns(self, tmp_path, capsys):
        csv = tmp_path / "x.csv"
        csv.write_text(
            "seed,mean_ckf_error,mean_last_error\n"
            "0,0.1,0.2\n1,0.12,0.24\n2,0.11,0.19\n"
        )
        assert main(["stats", "--csv", str(csv)]) == 0
        assert "one-sided p" in capsys.readouterr().out

    def test_identical_columns_give_half(self, tmp_path, capsys):
        csv = tmp_path / "x.csv"
        csv.write_text("a,b\n0.1,0.1\n0.2,0.2\n0.3,0.3\n")
        assert main(["stats", "--csv", str(csv), "--col-a", "a", "--col-b", "b"]) == 0
        p = float(capsys.readouterr().out.strip().splitlines()[-1].split("=")[-1])
        assert p == pytest.approx(0.5)

    def test_malformed_csv_exits_1(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("a,b\n1\n")
        assert main(["stats", "--csv", str(csv), "--col-a", "a", "--col-b", "b"]) == 1

    def test_missing_args_exit_1(self):
        assert main(["stats"]) == 1


class TestRenderAndCompare:
    def test_render_bundled_world(self, tmp_path):
        code = main(["render", "--world", "world", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "world.pgm").exists()
        assert (tmp_path / "world.png").exists()

    def test_compare_tiny(self, tiny_world, tmp_path):
        out = tmp_path / "cmp"
        code = main(["compare", "--world", str(tiny_world), "--seeds", "0,1",
                     "--out", str(out)] + FAST_SETTINGS)
        assert code == 0
        csv_text = (out / "compare.csv").read_text()
        rows = [ln for ln in csv_text.strip().splitlines()[1:] if ",mean," not in ln]
        assert len(rows) == 4  # 2 seeds x 2 explorers
        assert (out / "exploration_times.png").exists()

    def test_compare_identical_seeds_identical_times(self, tiny_world, tmp_path):
        from rescuesim.metrics import parse_csv_column
        outs = []
        for name in ("c1", "c2"):
            out = tmp_path / name
            assert main(["compare", "--world", str(tiny_world), "--seeds", "4",
                         "--out", str(out)] + FAST_SETTINGS) == 0
            outs.append(parse_csv_column((out / "compare.csv").read_text(),
                                         "exploration_time"))
        assert outs[0] == outs[1]
