import json
import os
from pathlib import Path

import numpy as np
import pytest

from entrocal import BinSpec, build_report, load_csv, report_from_json
from entrocal.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_fixture_csv(path: Path, probs, labels):
    lines = ["prob,label"] + [f"{p:.17g},{y}" for p, y in zip(probs, labels)]
    path.write_text("\n".join(lines) + "\n")


def read_tree(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def test_evaluate_always_correct_fixture(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    write_fixture_csv(csv, [0.6] * 50, [1] * 50)
    code, out, _ = run_cli(capsys, "evaluate", "--input", str(csv))
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("| 0.6")][0]
    cells = [c.strip() for c in row.strip("|").split("|")]
    assert cells[1] == "7"
    assert cells[2] == "0.4000"


def test_evaluate_indifferent_fixture_zero_ecd(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    write_fixture_csv(csv, [0.5] * 20, [0, 1] * 10)
    code, out, _ = run_cli(capsys, "evaluate", "--input", str(csv), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["ecd"] == 0.0
    assert payload["nll"] == pytest.approx(np.log(2.0), abs=1e-12)


def test_evaluate_simulated_clean_dataset_near_zero(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "simulate", "--n", "10000", "--noise-sigma", "0", "--seed", "5",
        "--output", str(tmp_path / "sim.csv"),
    )
    assert code == 0
    code, out, _ = run_cli(
        capsys, "evaluate", "--input", str(tmp_path / "sim.csv"), "--format", "json"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["ece"] <= 0.03
    assert abs(payload["esce"]) <= 0.015
    assert abs(payload["ecd"]) <= 0.05


def test_evaluate_output_file_and_plots(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    write_fixture_csv(csv, [0.1, 0.6, 0.9], [0, 1, 1])
    out_file = tmp_path / "report.md"
    plots = tmp_path / "plots"
    code, out, _ = run_cli(
        capsys, "evaluate", "--input", str(csv), "--output", str(out_file),
        "--plots-dir", str(plots),
    )
    assert code == 0
    assert out == ""
    assert out_file.exists()
    assert (plots / "reliability.svg").read_text().startswith("<svg")
    assert (plots / "histogram.svg").read_text().startswith("<svg")


def test_evaluate_malformed_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("prob,label\n1.5,1\n")
    code, _, err = run_cli(capsys, "evaluate", "--input", str(bad))
    assert code == 2
    assert "row 2" in err and "out of range" in err


def test_evaluate_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "evaluate", "--input", str(tmp_path / "nope.csv"))
    assert code == 2


def test_evaluate_bad_flags_exit_1(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    write_fixture_csv(csv, [0.5], [1])
    assert run_cli(capsys, "evaluate", "--input", str(csv), "--bins", "0")[0] == 1
    assert run_cli(capsys, "evaluate", "--input", str(csv), "--clip", "0.9")[0] == 1


def test_parser_defaults_match_study_settings():
    # A bare `suite` run is the bundled noise study; the defaults encode it.
    from entrocal.cli import build_parser

    parser = build_parser()
    sim = parser.parse_args(["simulate", "--seed", "1", "--output", "x.csv"])
    assert (sim.n, sim.weight, sim.halfwidth) == (10_000, 0.5, 10.0)
    assert (sim.noise_sigma, sim.noise_mean) == (0.0, 0.0)
    suite = parser.parse_args(["suite", "--seed", "1", "--out-dir", "d"])
    assert suite.sigmas == "0,0.5,2"
    assert (suite.n, suite.weight, suite.bins, suite.clip) == (10_000, 0.5, 10, 1e-4)
    ev = parser.parse_args(["evaluate", "--input", "x.csv"])
    assert (ev.bins, ev.clip, ev.format) == (10, 1e-4, "markdown")
    curve = parser.parse_args(["curve", "--output", "c.svg"])
    assert (curve.grid, curve.clip) == (2001, 1e-4)


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["evaluate"])  # missing --input
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_reruns_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--n", "500", "--noise-sigma", "0.5", "--seed", "7"]
    assert run_cli(capsys, *args, "--output", str(a))[0] == 0
    assert run_cli(capsys, *args, "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_seed_required_non_tty(tmp_path, capsys):
    code, _, err = run_cli(capsys, "simulate", "--output", str(tmp_path / "x.csv"))
    assert code == 1
    assert "--seed" in err


def test_simulate_include_true_column(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    code, _, _ = run_cli(
        capsys, "simulate", "--n", "50", "--seed", "3", "--include-true",
        "--output", str(out),
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "prob,label,true_prob"
    # sigma defaults to 0: estimated equals true in every row
    for line in lines[1:]:
        prob, _, true_prob = line.split(",")
        assert prob == true_prob


def test_simulate_noisy_output_keeps_outer_bin_dominance(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    code, _, _ = run_cli(
        capsys, "simulate", "--n", "20000", "--noise-sigma", "0.5", "--seed", "6",
        "--output", str(out),
    )
    assert code == 0
    from entrocal.binning import bin_indices

    data = load_csv(out)
    counts = np.bincount(bin_indices(data.probs, BinSpec(10)), minlength=10)
    assert counts[0] > counts[1:9].max()
    assert counts[9] > counts[1:9].max()


def test_simulate_invalid_params_exit_1(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "simulate", "--n", "0", "--seed", "1", "--output", str(tmp_path / "x.csv")
    )
    assert code == 1
    code, _, _ = run_cli(
        capsys, "simulate", "--weight", "-1", "--seed", "1",
        "--output", str(tmp_path / "x.csv"),
    )
    assert code == 1


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def test_suite_outputs_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    args = ["suite", "--sigmas", "0,0.5,2", "--seed", "11", "--n", "800"]
    assert run_cli(capsys, *args, "--out-dir", str(out1))[0] == 0
    assert run_cli(capsys, *args, "--out-dir", str(out2))[0] == 0
    tree1, tree2 = read_tree(out1), read_tree(out2)
    assert set(tree1) == set(tree2)
    assert tree1 == tree2
    expected = {"comparison.md"}
    for s in ("0", "0.5", "2"):
        for name in ("dataset.csv", "report.json", "report.md",
                     "reliability.svg", "histogram.svg"):
            expected.add(f"sigma-{s}/{name}")
    assert set(tree1) == expected


def test_suite_reports_recompute_from_datasets(tmp_path, capsys):
    # Self-consistency: each stored report must equal a report rebuilt from
    # the stored CSV intermediate, bit for bit.
    out = tmp_path / "suite"
    assert run_cli(capsys, "suite", "--sigmas", "0,2", "--seed", "4", "--n", "600",
                   "--out-dir", str(out))[0] == 0
    for sub in ("sigma-0", "sigma-2"):
        stored = report_from_json((out / sub / "report.json").read_text())
        rebuilt = build_report(load_csv(out / sub / "dataset.csv"), BinSpec(10))
        assert stored == rebuilt


def test_suite_comparison_table(tmp_path, capsys):
    out = tmp_path / "suite"
    assert run_cli(capsys, "suite", "--sigmas", "0,2", "--seed", "4", "--n", "600",
                   "--out-dir", str(out))[0] == 0
    lines = (out / "comparison.md").read_text().splitlines()
    assert lines[0].startswith("| Sigma | Seed |")
    assert len(lines) == 4
    ecd_values = [float(l.split("|")[5]) for l in lines[2:]]
    assert ecd_values[1] > ecd_values[0]


def test_suite_env_var_out_dir(tmp_path, capsys, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("ENTROCAL_OUT_DIR", str(target))
    assert run_cli(capsys, "suite", "--sigmas", "0", "--seed", "2", "--n", "50")[0] == 0
    assert (target / "comparison.md").exists()


def test_suite_requires_out_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("ENTROCAL_OUT_DIR", raising=False)
    code, _, err = run_cli(capsys, "suite", "--sigmas", "0", "--seed", "2", "--n", "50")
    assert code == 1
    assert "--out-dir" in err


def test_suite_bad_sigmas_exit_1(tmp_path, capsys):
    for sigmas in ("", "a,b", "-1"):
        code, _, _ = run_cli(capsys, "suite", "--sigmas", sigmas, "--seed", "1",
                             "--n", "50", "--out-dir", str(tmp_path / "x"))
        assert code == 1


# ---------------------------------------------------------------------------
# gaussian
# ---------------------------------------------------------------------------


def test_gaussian_consistent_fixture(tmp_path, capsys):
    records = [{"mean": [0.0], "covariance": [[4.0]], "truth": [2.0]},
               {"mean": [1.0], "covariance": [[9.0]], "truth": [-2.0]}]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(records))
    code, out, _ = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload == {"n": 2, "d": 1, "nees": 1.0, "ecd": 0.0}


def test_gaussian_truth_equals_mean(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps([{"mean": [3.0], "covariance": [[2.0]], "truth": [3.0]}]))
    code, out, _ = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["nees"] == 0.0
    assert payload["ecd"] == -0.5


def test_gaussian_scalar_shorthand(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps([{"mean": 0.0, "covariance": 1.0, "truth": 1.0}]))
    code, out, _ = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 0
    assert json.loads(out)["nees"] == 1.0


def test_gaussian_calibrated_sampling_fixture(tmp_path, capsys):
    rng = np.random.default_rng(17)
    n, d = 4000, 2
    cov = np.array([[2.0, 0.4], [0.4, 1.0]])
    L = np.linalg.cholesky(cov)
    records = []
    for _ in range(n):
        mean = rng.normal(size=d)
        truth = mean + L @ rng.normal(size=d)
        records.append({"mean": mean.tolist(), "covariance": cov.tolist(),
                        "truth": truth.tolist()})
    path = tmp_path / "g.json"
    path.write_text(json.dumps(records))
    code, out, _ = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["d"] == 2
    assert payload["nees"] == pytest.approx(d, abs=5 * np.sqrt(2 * d / n))


def test_gaussian_non_spd_exit_2_with_index(tmp_path, capsys):
    records = [{"mean": [0.0], "covariance": [[1.0]], "truth": [0.0]},
               {"mean": [0.0], "covariance": [[-1.0]], "truth": [0.0]}]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(records))
    code, _, err = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 2
    assert "record 1" in err and "positive-definite" in err


def test_gaussian_malformed_inputs_exit_2(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text("not json")
    assert run_cli(capsys, "gaussian", "--input", str(path))[0] == 2
    path.write_text(json.dumps([{"mean": [0.0], "truth": [0.0]}]))
    code, _, err = run_cli(capsys, "gaussian", "--input", str(path))
    assert code == 2 and "covariance" in err
    path.write_text(json.dumps([]))
    assert run_cli(capsys, "gaussian", "--input", str(path))[0] == 2


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------


def test_curve_output_and_rerun_identical(tmp_path, capsys):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run_cli(capsys, "curve", "--grid", "501", "--output", str(a))[0] == 0
    assert run_cli(capsys, "curve", "--grid", "501", "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "min -0.278" in text


def test_curve_grid_too_small_exit_1(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "curve", "--grid", "1", "--output", str(tmp_path / "x.svg"))
    assert code == 1
