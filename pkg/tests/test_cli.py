"""Command-line and CSV persistence tests."""

import numpy as np
import pytest

from catelab.cli import main
from catelab.dgp import builtin_spec, draw_dataset
from catelab.errors import InvalidDataError
from catelab.io import (
    read_dataset_csv,
    write_dataset_csv,
    write_ground_truth_csv,
)


def strip_header(path):
    with open(path) as fh:
        return [line for line in fh if not line.startswith("#")]


def drop_wall_column(lines):
    # wall_ms is the only measured (nondeterministic) column; everything else
    # must be byte-identical across reruns
    out = []
    for line in lines:
        cells = line.rstrip("\n").split(",")
        out.append(",".join(cells[:-1]))
    return out


class TestDatasetCsv:
    def test_round_trip_exact(self, tmp_path):
        ds, gt = draw_dataset(builtin_spec(4), 50, seed=1)
        path = tmp_path / "ds.csv"
        write_dataset_csv(path, ds)
        back = read_dataset_csv(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.treatment, ds.treatment)
        assert np.array_equal(back.outcome, ds.outcome)
        write_ground_truth_csv(tmp_path / "gt.csv", gt)
        first = open(tmp_path / "gt.csv").readline().strip()
        assert first == "mu0,mu1,tau,e,y0,y1,ite"

    def test_nonbinary_treatment_errors_with_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,w,y\n0.0,0,1.0\n0.1,1,2.0\n0.2,2,3.0\n")
        with pytest.raises(InvalidDataError, match="line 4"):
            read_dataset_csv(path)

    def test_malformed_row_errors_with_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,w,y\n0.0,0\n")
        with pytest.raises(InvalidDataError, match="line 2"):
            read_dataset_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,0,2\n")
        with pytest.raises(InvalidDataError, match="header"):
            read_dataset_csv(path)


class TestSimulateCommand:
    def test_record_cardinality_and_determinism(self, tmp_path):
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        flags = [
            "simulate", "--sim", "4", "--learners", "s-ols,t-ols,x-ols",
            "--n", "400", "--reps", "5", "--test-size", "500", "--seed", "1",
        ]
        assert main(flags + ["--out", str(out1)]) == 0
        assert main(flags + ["--out", str(out2)]) == 0
        body1 = strip_header(out1)
        body2 = strip_header(out2)
        assert len(body1) == 1 + 15  # header row + 3 learners x 5 reps
        assert drop_wall_column(body1) == drop_wall_column(body2)

    def test_unknown_sim_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--sim", "9", "--learners", "t-ols",
                  "--n", "100", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_unknown_learner_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--sim", "4", "--learners", "t-magic",
                  "--n", "100", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_header_echoes_config(self, tmp_path):
        out = tmp_path / "r.csv"
        main(["simulate", "--sim", "4", "--learners", "t-ols", "--n", "200",
              "--reps", "1", "--test-size", "100", "--seed", "7", "--out", str(out)])
        head = [line for line in open(out) if line.startswith("#")]
        joined = "".join(head)
        assert "subcommand=simulate" in joined
        assert "seed=7" in joined
        assert "version=" in joined


class TestRatesCommand:
    def test_passthrough_slope(self, tmp_path, capsys):
        out = tmp_path / "rates.csv"
        assert main(["rates", "--experiment", "passthrough", "--out", str(out)]) == 0
        body = strip_header(out)
        assert body[0].strip() == "experiment,learner,slope,slope_stderr,intercept"
        cells = body[1].strip().split(",")
        assert cells[0] == "passthrough"
        assert float(cells[2]) == pytest.approx(-1.0, abs=1e-12)

    def test_lipschitz_smoke_negative_slope(self, tmp_path):
        out = tmp_path / "rates.csv"
        code = main(["rates", "--experiment", "lipschitz-knn", "--d", "3",
                     "--n", "128,256,512", "--reps", "2", "--test-size", "500",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        body = strip_header(out)
        assert len(body) == 1 + 2  # crossover and two-model learners
        slopes = [float(line.split(",")[2]) for line in body[1:]]
        assert all(s < 0 for s in slopes)

    def test_missing_experiment_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["rates", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_unknown_experiment_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["rates", "--experiment", "warp", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_short_grid_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["rates", "--experiment", "lipschitz-knn", "--n", "128",
                  "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2


class TestEstimateCommand:
    def _write_input(self, tmp_path, n=10):
        rng = np.random.default_rng(2)
        from catelab.dgp import Dataset

        x = rng.standard_normal((n, 1))
        w = np.tile([0, 1], n // 2)
        y = x[:, 0] + 2.0 * w + 0.1 * rng.standard_normal(n)
        path = tmp_path / "in.csv"
        write_dataset_csv(path, Dataset(features=x, treatment=w, outcome=y))
        return path

    def test_row_count_and_determinism(self, tmp_path):
        src = self._write_input(tmp_path)
        out1, out2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
        flags = ["estimate", "--data", str(src), "--learners", "t-ols",
                 "--b", "30", "--seed", "3"]
        assert main(flags + ["--out", str(out1)]) == 0
        assert main(flags + ["--out", str(out2)]) == 0
        body = strip_header(out1)
        assert body[0].strip() == "point_id,learner,method,b,alpha,point,sigma,lower,upper"
        assert len(body) == 1 + 10
        assert strip_header(out1) == strip_header(out2)

    def test_bad_treatment_value_names_line(self, tmp_path, capsys):
        path = tmp_path / "in.csv"
        path.write_text("x1,w,y\n0.0,0,1.0\n0.1,1,2.0\n0.3,2,0.5\n0.2,1,1.0\n")
        code = main(["estimate", "--data", str(path), "--learners", "t-ols",
                     "--b", "10", "--out", str(tmp_path / "o.csv")])
        assert code == 1
        assert "line 4" in capsys.readouterr().err

    def test_single_arm_data_errors(self, tmp_path, capsys):
        path = tmp_path / "in.csv"
        path.write_text("x1,w,y\n0.0,1,1.0\n0.1,1,2.0\n0.2,1,1.5\n")
        code = main(["estimate", "--data", str(path), "--learners", "t-ols",
                     "--b", "10", "--out", str(tmp_path / "o.csv")])
        assert code == 1


class TestCoverageCommand:
    def test_smoke_row_count(self, tmp_path):
        out = tmp_path / "cov.csv"
        code = main([
            "coverage", "--sim", "4", "--learners", "t-ols,s-ols",
            "--n", "500", "--train-size", "200", "--test-size", "5",
            "--b", "25", "--alpha", "0.05", "--seed", "4", "--out", str(out),
        ])
        assert code == 0
        body = strip_header(out)
        assert body[0].strip() == "learner,method,nominal,coverage,mean_length,b,n_points"
        assert len(body) == 1 + 2 * 2  # learners x methods
        for line in body[1:]:
            cells = line.strip().split(",")
            assert float(cells[2]) == 0.95
