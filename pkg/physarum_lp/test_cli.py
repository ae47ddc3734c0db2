import csv
import json
import math

import numpy as np
import pytest

from physarum_lp.cli import main
from physarum_lp.lp_instance import save, save_network, simplex_instance
from physarum_lp.models import LpInstance, MdComparison, RunSummary


@pytest.fixture
def files(tmp_path, two_path, uniform_pair, triangle):
    paths = {
        "two_path": tmp_path / "two_path.json",
        "uniform": tmp_path / "uniform_pair.json",
        "triangle": tmp_path / "triangle.json",
        "rank_deficient": tmp_path / "rank_deficient.json",
        "wide": tmp_path / "wide.json",
    }
    paths["two_path"].write_bytes(save(two_path))
    paths["uniform"].write_bytes(save(uniform_pair))
    paths["triangle"].write_bytes(save_network(triangle, ground=2))
    paths["rank_deficient"].write_bytes(save(LpInstance(
        constraint_matrix=[[1.0, 1.0], [2.0, 2.0]], rhs=[1.0, 2.0], costs=[1.0, 1.0], name="rank_deficient",
    )))
    paths["wide"].write_bytes(save(simplex_instance(np.linspace(1.0, 3.0, 21), name="wide")))
    return {name: str(path) for name, path in paths.items()}


def read_summary(out_dir, name):
    return RunSummary.model_validate_json((out_dir / f"{name}_summary.json").read_text())


def test_solve_two_path(files, tmp_path):
    out = tmp_path / "runs"
    code = main(["solve", "--instance", files["two_path"], "--eps", "0.01", "--trace-interval", "0.5",
                 "--out-dir", str(out)])
    assert code == 0
    summary = read_summary(out, "two_path")
    assert summary.opt == 1.0
    assert 0 <= summary.relative_gap <= 0.01
    assert summary.converged
    assert summary.bound_time_kl == pytest.approx(600 * math.log(4.5))
    assert summary.integrator_stats.steps > 0

    raw = json.loads((out / "two_path_summary.json").read_text())
    assert set(raw) == set(RunSummary.model_fields)

    with open(out / "two_path_trace.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["t", "x_0", "x_1", "cost", "energy", "infeasibility", "kl", "potential"]
    expected_rows = math.floor(summary.final_t / 0.5) + 2
    assert abs(len(rows) - 1 - expected_rows) <= 1
    assert float(rows[1][0]) == 0.0
    assert float(rows[-1][0]) == summary.final_t


def test_solve_rank_deficient(files, tmp_path, capsys):
    code = main(["solve", "--instance", files["rank_deficient"], "--out-dir", str(tmp_path)])
    assert code == 3
    assert "RankDeficient" in capsys.readouterr().err


def test_solve_truncated(files, tmp_path):
    code = main(["solve", "--instance", files["two_path"], "--max-time", "0.001", "--out-dir", str(tmp_path)])
    assert code == 0
    summary = read_summary(tmp_path, "two_path")
    assert not summary.converged
    assert summary.final_t == pytest.approx(0.001)
    assert summary.relative_gap == pytest.approx(0.5, abs=1e-3)


def test_solve_infeasible_start(files, tmp_path):
    code = main(["solve", "--instance", files["two_path"], "--x0", "1,1", "--max-time", "5", "--out-dir", str(tmp_path)])
    assert code == 0
    summary = read_summary(tmp_path, "two_path")
    assert summary.bound_time_kl is None
    assert summary.bound_time_mu is None


@pytest.mark.parametrize("x0", ["1,0", "1,2,3", "a,b"])
def test_solve_bad_start(files, tmp_path, x0):
    assert main(["solve", "--instance", files["two_path"], "--x0", x0, "--out-dir", str(tmp_path)]) == 3


def test_solve_many_with_one_failure(files, tmp_path):
    code = main(["solve", "--instance", files["two_path"], files["rank_deficient"], files["triangle"],
                 "--jobs", "2", "--max-time", "5", "--out-dir", str(tmp_path)])
    assert code == 3
    assert (tmp_path / "two_path_summary.json").exists()
    assert (tmp_path / "triangle_summary.json").exists()


def test_solve_without_exact_optimum(files, tmp_path):
    code = main(["solve", "--instance", files["wide"], "--max-time", "0.5", "--out-dir", str(tmp_path)])
    assert code == 0
    summary = read_summary(tmp_path, "wide")
    assert summary.opt is None
    assert summary.relative_gap is None
    assert summary.bound_time_kl is None
    assert not summary.converged
    assert summary.final_t == pytest.approx(0.5)


def test_solve_keeps_outputs_of_same_named_instances(tmp_path, two_path, single_edge):
    first, second = tmp_path / "first" / "model.json", tmp_path / "second" / "model.json"
    for path, instance in ((first, two_path), (second, single_edge)):
        path.parent.mkdir()
        path.write_bytes(save(instance.model_copy(update={"name": None})))
    out = tmp_path / "runs"
    code = main(["solve", "--instance", str(first), str(second), "--jobs", "2", "--max-time", "5",
                 "--out-dir", str(out)])
    assert code == 0
    opts = sorted(read_summary(out, stem).opt for stem in ("model", "model_2"))
    assert opts == [1.0, 5.0]
    assert (out / "model_trace.csv").exists()
    assert (out / "model_2_trace.csv").exists()


def test_verify_bounds(files, tmp_path):
    code = main(["verify-bounds", "--instance", files["two_path"], "--eps", "1", "0.1", "--out-dir", str(tmp_path)])
    assert code == 0
    checks = json.loads((tmp_path / "two_path_bounds.json").read_text())
    assert [check["eps"] for check in checks] == [1.0, 0.1]
    assert checks[0]["bound_time_kl"] == pytest.approx(6 * math.log(4.5), abs=1e-9)
    assert checks[1]["bound_time_kl"] == pytest.approx(60 * math.log(4.5), abs=1e-9)
    assert all(check["passed"] for check in checks)
    assert all(check["achieved_over_bound"] < 1 for check in checks)


def test_verify_bounds_uniform_costs(files, tmp_path):
    code = main(["verify-bounds", "--instance", files["uniform"], "--eps", "0.1", "--out-dir", str(tmp_path)])
    assert code == 0
    check = json.loads((tmp_path / "uniform_pair_bounds.json").read_text())[0]
    assert check["bound_time_kl"] == pytest.approx(60 * math.log(2.0))
    assert check["final_cost"] == pytest.approx(check["opt"])


def test_verify_bounds_infeasible_start(files, tmp_path):
    assert main(["verify-bounds", "--instance", files["two_path"], "--x0", "1,1", "--out-dir", str(tmp_path)]) == 3


def test_md_compare(files, tmp_path, capsys):
    code = main(["md-compare", "--instance", files["two_path"], "--x0", "1,1", "--horizon", "5", "--out-dir", str(tmp_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["max_deviation"] <= 1e-6


def test_md_compare_rejects_network(files, tmp_path, capsys):
    code = main(["md-compare", "--instance", files["triangle"], "--out-dir", str(tmp_path)])
    assert code == 3
    assert "NotSimplexInstance" in capsys.readouterr().err


def test_md_compare_several_instances(files, tmp_path):
    code = main(["md-compare", "--instance", files["two_path"], files["uniform"], "--horizon", "2",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    for name in ("two_path", "uniform_pair"):
        report = MdComparison.model_validate_json((tmp_path / f"{name}_md_compare.json").read_text())
        assert report.max_deviation <= 1e-6
        assert len(report.lyapunov) == len(report.times)


def test_md_compare_without_exact_optimum(files, tmp_path):
    code = main(["md-compare", "--instance", files["wide"], "--horizon", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    report = MdComparison.model_validate_json((tmp_path / "wide_md_compare.json").read_text())
    assert report.lyapunov is None


def test_oracle_on_triangle(files, capsys):
    assert main(["oracle", "--instance", files["triangle"]]) == 0
    solution = json.loads(capsys.readouterr().out)
    assert solution["opt"] == pytest.approx(2.0)
    assert len(solution["all_optimal_vertices"]) == 2
    assert solution["chosen_rule"] == "lexicographic-min"


@pytest.mark.parametrize("kind", ["lp", "simplex", "network"])
def test_generate_is_reproducible(tmp_path, kind):
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert main(["generate", "--kind", kind, "--rows", "3", "--cols", "5", "--count", "3",
                     "--seed", "42", "--out-dir", str(out)]) == 0
    names = sorted(path.name for path in first.iterdir())
    assert names == sorted(path.name for path in second.iterdir())
    assert "feasible_starts.json" in names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_generate_then_solve(tmp_path):
    out = tmp_path / "instances"
    assert main(["generate", "--kind", "lp", "--rows", "2", "--cols", "5", "--count", "3", "--seed", "1",
                 "--out-dir", str(out)]) == 0
    starts = json.loads((out / "feasible_starts.json").read_text())
    for name, start in starts.items():
        x0 = ",".join(repr(v) for v in start)
        code = main(["verify-bounds", "--instance", str(out / f"{name}.json"), "--x0", x0, "--eps", "1",
                     "--out-dir", str(tmp_path / "bounds")])
        assert code == 0
