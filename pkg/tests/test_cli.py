import json

import pytest

from tollgate.cli import main
from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.metrics.serialize import dump_boxes_json


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCorpusCommands:
    def test_generate_is_deterministic(self, tmp_path, capsys):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        for target in (dir_a, dir_b):
            code, _, _ = run_cli(capsys, "corpus", "generate", "--count", "5",
                                 "--seed", "1", "--out", str(target))
            assert code == 0
        for path in sorted(dir_a.iterdir()):
            assert path.read_bytes() == (dir_b / path.name).read_bytes()

    def test_split_sizes(self, tmp_path, capsys):
        run_cli(capsys, "corpus", "generate", "--count", "30", "--seed", "2",
                "--out", str(tmp_path / "c"))
        code, out, _ = run_cli(capsys, "corpus", "split", "--dir", str(tmp_path / "c"),
                               "--test", "7", "--seed", "3")
        assert code == 0
        split = json.loads(out)
        assert (len(split["train"]), len(split["test"])) == (23, 7)


class TestVisionCommands:
    def test_recognize_single_image(self, tmp_path, capsys):
        run_cli(capsys, "corpus", "generate", "--count", "1", "--seed", "4",
                "--out", str(tmp_path))
        image = next(tmp_path.glob("*.pgm"))
        manifest = (tmp_path / "manifest.tsv").read_text().split("\t")
        csv_path = tmp_path / "out.csv"
        code, out, _ = run_cli(capsys, "vision", "recognize", str(image),
                               "--csv", str(csv_path))
        assert code == 0
        payload = json.loads(out)
        assert payload["plate_text"] == manifest[1]
        assert csv_path.read_text().splitlines()[0] == "image_id,plate_text,confidence"

    def test_batch(self, tmp_path, capsys):
        run_cli(capsys, "corpus", "generate", "--count", "3", "--seed", "5",
                "--out", str(tmp_path / "c"))
        csv_path = tmp_path / "batch.csv"
        code, _, err = run_cli(capsys, "vision", "batch", str(tmp_path / "c"),
                               "--csv", str(csv_path))
        assert code == 0
        assert len(csv_path.read_text().splitlines()) == 4  # header + 3


class TestEvalCommands:
    def test_detections_perfect_fixture(self, tmp_path, capsys):
        truths = {"a": [BoundingBox(0, 0, 50, 40)], "b": [BoundingBox(5, 5, 120, 105)]}
        dets = {k: [DetectionResult(box=v[0], score=0.9)] for k, v in truths.items()}
        dump_boxes_json(dets, tmp_path / "dets.json")
        dump_boxes_json(truths, tmp_path / "truths.json")
        code, out, _ = run_cli(capsys, "eval", "detections",
                               "--dets", str(tmp_path / "dets.json"),
                               "--truths", str(tmp_path / "truths.json"), "--json")
        assert code == 0
        report = json.loads(out)
        assert report["ap_all"] == 1.0 and report["ar1_all"] == 1.0
        assert report["ap_small"] is None  # no small truths in the fixture

    def test_smooth_json(self, tmp_path, capsys):
        series = tmp_path / "series.csv"
        series.write_text("step,value\n0,1.0\n1,2.0\n")
        code, out, _ = run_cli(capsys, "eval", "smooth", "--series", str(series),
                               "--weight", "0.5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["final"] == pytest.approx(5 / 3)


class TestSimAndDemo:
    def test_sim_run_json(self, tmp_path, capsys):
        config = tmp_path / "sim.cfg"
        config.write_text(
            "seed = 1\nn_vehicles = 12\n"
            "fractions.tagged_active = 0.5\nfractions.tagged_inactive = 0.1\n"
            "fractions.untagged_registered = 0.2\nfractions.unregistered = 0.1\n"
            "fractions.stolen = 0.1\nplazas = P1\n"
        )
        code, out, _ = run_cli(capsys, "sim", "run", "--config", str(config), "--json")
        assert code == 0
        report = json.loads(out)
        assert sum(report["counts"].values()) == 12

    def test_demo_counts_sum(self, capsys):
        code, out, _ = run_cli(capsys, "demo", "--json")
        assert code == 0
        report = json.loads(out)
        assert sum(report["counts"].values()) == 50


class TestExitCodes:
    def test_domain_error_is_1(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "vision", "recognize", str(tmp_path / "missing.pgm"))
        assert code == 1
        assert "error:" in err

    def test_usage_error_is_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["corpus", "generate"])  # missing required --out
        assert exc.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "tollgate 0.1.0" in out and "font v1" in out
