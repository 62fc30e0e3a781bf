import json
import logging
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from conftest import write_curves
from devstrip import fixtures, formats
from devstrip.cli import EXIT_FLAT, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, main

OPT_FILES = {"result.json", "strip.obj", "strip_warp.csv", "warp.csv", "mapping.csv",
             "report.csv"}
FAST = ["--coeffs", "10", "--samples", "40", "--mesh", "5", "9"]


@pytest.fixture(scope="module")
def curves_file(tmp_path_factory):
    return write_curves(tmp_path_factory.mktemp("in") / "curves.json",
                        *fixtures.cylinder_pair())


@pytest.fixture(scope="module")
def helix_file(tmp_path_factory):
    return write_curves(tmp_path_factory.mktemp("in") / "helix.json", *fixtures.helix_pair())


@pytest.fixture(scope="module")
def optimized(tmp_path_factory, curves_file):
    out = tmp_path_factory.mktemp("opt")
    code = main(["optimize", "--curves", curves_file, "--out-dir", str(out)] + FAST)
    return code, out


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


class TestOptimize:
    def test_exit_and_files(self, optimized):
        code, out = optimized
        assert code == EXIT_OK
        assert set(os.listdir(out)) == OPT_FILES

    def test_outputs_validate(self, optimized):
        _, out = optimized
        doc = json.loads(read(out / "result.json"))
        formats.validate_output(doc, formats.RESULT_SCHEMA, "result.json")
        assert doc["converged"] and doc["beta_ave"] <= 0.01
        assert doc["beta_max"] <= 1e-3
        formats.validate_obj(read(out / "strip.obj"), 45, 32)
        formats.validate_csv(read(out / "warp.csv"), "warp", 40)
        formats.validate_csv(read(out / "strip_warp.csv"), "warp", 9)
        formats.validate_csv(read(out / "mapping.csv"), "mapping", 1001)
        formats.validate_csv(read(out / "report.csv"), "report", doc["iterations"] + 1)

    def test_seventeen_digits(self, optimized):
        _, out = optimized
        text = read(out / "result.json")
        for tok in re.findall(r"-?\d+\.\d+(?:e[-+]\d+)?", text)[:500]:
            assert tok == format(float(tok), ".17g")

    def test_mapping_csv_matches_result(self, optimized):
        _, out = optimized
        from devstrip.validation import check_mapping

        m = check_mapping(json.loads(read(out / "result.json"))["mapping"])
        rows = np.loadtxt(out / "mapping.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(m(rows[:, 0]), rows[:, 1])
        assert np.max(np.abs(rows[:, 1] - rows[:, 0] ** 2)) <= 1e-3

    def test_byte_identical_rerun(self, optimized, curves_file, tmp_path):
        _, out = optimized
        assert main(["optimize", "--curves", curves_file, "--out-dir", str(tmp_path)]
                    + FAST) == EXIT_OK
        for name in OPT_FILES - {"report.csv"}:
            assert read(tmp_path / name) == read(out / name), name

        def drop_seconds(text):
            return [line.rsplit(",", 1)[0] for line in text.splitlines()]
        assert drop_seconds(read(tmp_path / "report.csv")) == drop_seconds(read(out / "report.csv"))

    def test_fold_report_shows_reduction(self, tmp_path):
        path = write_curves(tmp_path / "fold.json", *fixtures.fold_pair())
        code = main(["optimize", "--curves", path, "--out-dir", str(tmp_path), "--mesh", "3", "5"])
        assert code == EXIT_OK
        rows = np.loadtxt(tmp_path / "report.csv", delimiter=",", skiprows=1)
        assert rows[-1, 2] <= rows[0, 2] / 10.0

    def test_iteration_cap_exit(self, curves_file, tmp_path):
        code = main(["optimize", "--curves", curves_file, "--out-dir", str(tmp_path),
                     "--max-iter", "2"] + FAST)
        assert code == EXIT_NOT_CONVERGED
        assert json.loads(read(tmp_path / "result.json"))["status"] == "max_iterations"

    def test_discrete_mode(self, helix_file, tmp_path):
        code = main(["optimize", "--curves", helix_file, "--out-dir", str(tmp_path),
                     "--mode", "discrete", "--samples", "30", "--mesh", "3", "5"])
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        doc = json.loads(read(tmp_path / "result.json"))
        assert doc["mode"] == "discrete" and len(doc["discrete"]["alphas"]) == 30

    def test_extend(self, tmp_path):
        c1, _ = fixtures.cylinder_pair()
        c2 = fixtures._bezier_from_power([[0, 0, 1], [1.2, 0, 0], [0, 1.44, 0]])
        path = write_curves(tmp_path / "ext.json", c1, c2)
        out = tmp_path / "out"
        code = main(["optimize", "--curves", path, "--out-dir", str(out),
                     "--extend", "c1", "end", "1.2,1.44,0", "--mesh", "3", "5"])
        assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
        doc = json.loads(read(out / "result.json"))
        lo, hi = doc["trim_interval"]
        assert lo == 0.0 and doc["original_intervals"]["c1"][1] <= hi < 1.0
        assert doc["beta_max"] <= 0.1

    def test_threads_env(self, curves_file, tmp_path, monkeypatch):
        monkeypatch.setenv("DEVSTRIP_THREADS", "1")
        assert main(["optimize", "--curves", curves_file, "--out-dir", str(tmp_path)]
                    + FAST) == EXIT_OK
        monkeypatch.setenv("DEVSTRIP_THREADS", "zero")
        assert main(["optimize", "--curves", curves_file, "--out-dir",
                     str(tmp_path / "x")] + FAST) == EXIT_INPUT
        assert not (tmp_path / "x").exists()


class TestInputErrors:
    def test_missing_file(self, tmp_path, caplog):
        out = tmp_path / "out"
        code = main(["optimize", "--curves", str(tmp_path / "nope.json"), "--out-dir", str(out)])
        assert code == EXIT_INPUT
        assert not out.exists()
        assert "curves: cannot read" in caplog.text

    def test_bad_field(self, tmp_path, caplog):
        doc = {"c1": {"degree": 1, "knots": [0, 0, 1, 1], "points": [[0, 0, 0], [1, 0, 0]]},
               "c2": {"degree": 1, "knots": [0, 0, 1, 1], "points": [[0, 0, 1]]}}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "out"
        assert main(["optimize", "--curves", str(path), "--out-dir", str(out)]) == EXIT_INPUT
        assert "c2.points" in caplog.text
        assert not out.exists()

    @pytest.mark.parametrize("extra", [["--samples", "1"], ["--map-degree", "7"],
                                       ["--extend", "c1", "end", "1,2"], ["--mesh", "1", "4"],
                                       ["--mode", "fast"]])
    def test_bad_options(self, curves_file, tmp_path, extra):
        out = tmp_path / "out"
        assert main(["optimize", "--curves", curves_file, "--out-dir", str(out)] + extra) \
            == EXIT_INPUT
        assert not out.exists()

    def test_missing_required(self):
        assert main(["optimize"]) == EXIT_INPUT


class TestConvert:
    def test_convert(self, optimized, tmp_path):
        _, out = optimized
        code = main(["convert", "--result", str(out / "result.json"), "--out-dir",
                     str(tmp_path), "--knot-mode", "span", "--mesh", "4", "6"])
        assert code == EXIT_OK
        doc = json.loads(read(tmp_path / "surface.json"))
        formats.validate_output(doc, formats.SURFACE_SCHEMA, "surface.json")
        assert doc["max_deviation"] <= 1e-9
        assert doc["surface"]["degree_t"] == 8
        formats.validate_obj(read(tmp_path / "surface.obj"), 24, 15)

    def test_flat_mapping_exit(self, optimized, tmp_path, caplog):
        _, out = optimized
        doc = json.loads(read(out / "result.json"))
        eps = np.array(doc["mapping"]["epsilons"])
        eps[3:7] = 0.0
        doc["mapping"]["epsilons"] = eps.tolist()
        path = tmp_path / "flat.json"
        path.write_text(json.dumps(doc))
        code = main(["convert", "--result", str(path), "--out-dir", str(tmp_path / "out")])
        assert code == EXIT_FLAT
        assert not (tmp_path / "out").exists()
        assert "conversion failed on piece" in caplog.text

    def test_linear_mapping_keeps_curve_degree(self, tmp_path):
        c1, c2 = fixtures.helix_pair()
        path = write_curves(tmp_path / "h.json", c1, c2)
        assert main(["optimize", "--curves", path, "--out-dir", str(tmp_path / "o"),
                     "--map-degree", "1", "--coeffs", "20", "--max-iter", "20",
                     "--mesh", "3", "5"]) in (EXIT_OK, EXIT_NOT_CONVERGED)
        assert main(["convert", "--result", str(tmp_path / "o" / "result.json"),
                     "--out-dir", str(tmp_path / "s")]) == EXIT_OK
        doc = json.loads(read(tmp_path / "s" / "surface.json"))
        assert doc["surface"]["degree_t"] == c1.degree
        assert doc["max_deviation"] <= 1e-9

    def test_fig5_result(self, optimized, tmp_path, caplog):
        caplog.set_level(logging.INFO, logger="devstrip")
        _, out = optimized
        doc = json.loads(read(out / "result.json"))
        c1, c2, sigma = fixtures.fig5_setup()
        doc.update(c1=c1.to_dict(), c2=c2.to_dict(), mapping=sigma.to_dict())
        path = tmp_path / "fig5.json"
        path.write_text(json.dumps(doc))
        assert main(["convert", "--result", str(path), "--out-dir", str(tmp_path)]) == EXIT_OK
        surf = json.loads(read(tmp_path / "surface.json"))
        assert surf["pieces"] == 9 and surf["surface"]["degree_t"] == 6
        assert "1x6 with 9 pieces" in caplog.text

    def test_malformed_result(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(json.dumps({"mode": "continuous"}))
        assert main(["convert", "--result", str(path), "--out-dir", str(tmp_path)]) \
            == EXIT_INPUT


def test_compare(curves_file, tmp_path):
    code = main(["compare", "--curves", curves_file, "--out-dir", str(tmp_path),
                 "--coeffs", "10", "--samples", "40", "--discrete-samples", "20"])
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    text = read(tmp_path / "compare.csv")
    formats.validate_csv(text, "compare", 2)
    assert [line.split(",")[0] for line in text.splitlines()[1:]] == ["continuous", "discrete"]
    # exact developable: both modes near zero on average, sampled and dense
    rows = [line.split(",") for line in text.splitlines()[1:]]
    assert all(float(r[3]) <= 0.01 and float(r[5]) <= 0.01 for r in rows)


class TestFit:
    def test_pair(self, tmp_path):
        u = np.linspace(0, 1, 60)
        doc = {"c1": np.stack([u, np.sin(3 * u), 0 * u], 1).tolist(),
               "c2": np.stack([u, np.cos(3 * u), 1 + 0 * u], 1).tolist()}
        path = tmp_path / "poly.json"
        path.write_text(json.dumps(doc))
        assert main(["fit", "--polylines", str(path), "--out-dir", str(tmp_path),
                     "--n-ctrl", "12"]) == EXIT_OK
        curves = json.loads(read(tmp_path / "curves.json"))
        formats.validate_input(curves, formats.CURVES_SCHEMA)
        assert len(curves["c1"]["points"]) == 12
        # the fitted pair feeds straight into optimize
        assert main(["optimize", "--curves", str(tmp_path / "curves.json"), "--out-dir",
                     str(tmp_path / "opt")] + FAST) in (EXIT_OK, EXIT_NOT_CONVERGED)

    def test_single(self, tmp_path):
        path = tmp_path / "poly.json"
        path.write_text(json.dumps([[0, 0, 0], [1, 1, 0], [2, 0, 0], [3, 1, 0]]))
        assert main(["fit", "--polylines", str(path), "--out-dir", str(tmp_path),
                     "--degree", "2"]) == EXIT_OK
        formats.validate_input(json.loads(read(tmp_path / "curve.json")), formats.CURVE_SCHEMA)

    def test_too_many_ctrl(self, tmp_path, caplog):
        path = tmp_path / "poly.json"
        path.write_text(json.dumps([[0, 0, 0], [1, 1, 0], [2, 0, 0]]))
        assert main(["fit", "--polylines", str(path), "--out-dir", str(tmp_path / "o"),
                     "--n-ctrl", "9"]) == EXIT_INPUT
        assert "polylines" in caplog.text


def test_console_entry_point(curves_file, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "devstrip.cli", "optimize", "--curves",
                           curves_file, "--out-dir", str(tmp_path)] + FAST,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "beta_max" in proc.stderr
