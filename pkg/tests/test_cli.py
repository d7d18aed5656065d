"""CLI behaviour: report shapes, determinism, and the exit-code contract."""

import json
from pathlib import Path

import pytest

import qcunlink.unlink as unlink_module
from qcunlink.cli import main
from qcunlink.unlink import InvariantViolation

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out else None, err


# ---------------------------------------------------------------------------
# Exit code contract, one scenario per code
# ---------------------------------------------------------------------------


def test_exit_0_unlink_rotated_pair(capsys):
    code, report, _ = run_json(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "rot_u.poly"),
        "--v", str(FIXTURES / "rot_v.poly"),
        "--seed", "42",
    )
    assert code == 0
    assert report["verdict"] == "unlinked"
    assert report["cov_exact"] == "0"
    assert report["r"] == 0
    assert report["u_block"] == [1]
    assert report["v_block"] == [2]
    assert report["residual_u"] <= 1e-9
    assert list(report) == [
        "verdict", "cov_exact", "r", "t", "m", "transform",
        "u_block", "v_block", "residual_u", "residual_v", "hypothesis",
    ]


def test_exit_2_syntax_error(capsys):
    code, out, err = run(capsys, "check", "--p", str(FIXTURES / "broken" / "bad_syntax.poly"))
    assert code == 2
    assert out == ""
    assert "error" in err


def test_exit_2_unknown_flag(capsys):
    code, _, _ = run(capsys, "cov", "--u", "a", "--v", "b", "--frobnicate")
    assert code == 2


def test_exit_2_missing_file(capsys):
    code, _, err = run(capsys, "check", "--p", str(FIXTURES / "does_not_exist.poly"))
    assert code == 2


def test_exit_2_invalid_seed(capsys):
    code, _, err = run(
        capsys, "check", "--p", str(FIXTURES / "square.poly"), "--seed", "0"
    )
    assert code == 2
    assert "positive" in err


def test_exit_3_check_concave_input(capsys):
    code, report, _ = run_json(capsys, "check", "--p", str(FIXTURES / "neg_square.poly"))
    assert code == 3
    assert report["qc"]["status"] == "falsified"
    assert report["qc"]["witness"] is not None
    assert report["pass"] is False


def test_exit_3_unlink_non_quasi_convex(capsys, tmp_path):
    cross = tmp_path / "cross.poly"
    cross.write_text("n=2\nx1^2*x2^2\n")
    code, report, _ = run_json(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(cross),
    )
    assert code == 3
    assert report["error"] == "hypothesis_falsified"
    assert report["input"] == "v"
    assert report["kind"] == "quasi-convexity"
    assert report["witness"]["witness"]["alpha"] is not None


def test_exit_4_nonzero_covariance(capsys):
    code, report, _ = run_json(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(FIXTURES / "square_sum.poly"),
    )
    assert code == 4
    assert report["verdict"] == "hypothesis_failed"
    assert report["cov_exact"] == "2"
    assert report["transform"] is None


def test_exit_5_internal_invariant_violation(capsys, monkeypatch):
    def broken(report, tol_ortho=1e-10):
        raise InvariantViolation("injected fault")

    monkeypatch.setattr(unlink_module, "build_transform", broken)
    code, out, err = run(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "rot_u.poly"),
        "--v", str(FIXTURES / "rot_v.poly"),
    )
    assert code == 5
    assert "invariant" in err


# ---------------------------------------------------------------------------
# Subcommand reports
# ---------------------------------------------------------------------------


def test_check_passes_convex_fixture(capsys):
    code, report, _ = run_json(capsys, "check", "--p", str(FIXTURES / "square_sum.poly"))
    assert code == 0
    assert report["symmetric"] is True
    assert report["qc"]["status"] == "certified_convex_quadratic"
    assert report["pass"] is True
    assert report["seed"] == 42


def test_invariance_report(capsys):
    code, report, _ = run_json(capsys, "invariance", "--p", str(FIXTURES / "rot_u.poly"))
    assert code == 0
    assert report["dimension"] == 1
    assert report["basis"] == [["1", "-1"]]
    assert report["normalized"] is False


def test_concordance_report(capsys):
    code, report, _ = run_json(
        capsys,
        "concordance",
        "--u", str(FIXTURES / "rot_u.poly"),
        "--v", str(FIXTURES / "rot_v.poly"),
    )
    assert code == 0
    assert (report["r"], report["t"], report["m"]) == (0, 1, 1)
    assert report["bases"]["inv_u"]["basis"] == [["1", "-1"]]


def test_cov_report_exact_only(capsys):
    code, report, _ = run_json(
        capsys,
        "cov",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(FIXTURES / "square_sum.poly"),
    )
    assert code == 0
    assert report["cov_exact"] == "2"
    assert "mc" not in report


def test_cov_report_with_mc(capsys):
    code, report, _ = run_json(
        capsys,
        "cov",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(FIXTURES / "square_sum.poly"),
        "--mc", "--mc-samples", "100000", "--seed", "42",
    )
    assert code == 0
    mc = report["mc"]
    assert abs(mc["mean"] - 2.0) <= 4 * mc["stderr"]
    assert mc["seed"] == 42


def test_cov_accepts_json_input(capsys):
    code, report, _ = run_json(
        capsys,
        "cov",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(FIXTURES / "square_sum.json"),
    )
    assert code == 0
    assert report["cov_exact"] == "2"


def test_marginal_report(capsys, tmp_path):
    source = tmp_path / "mixed.poly"
    source.write_text("n=2\nx1^4 + x1^2*x2^4\n")
    code, report, _ = run_json(capsys, "marginal", "--p", str(source), "--marginalize", "2")
    assert code == 0
    assert report["expression"] == "x1^4 + 3*x1^2"
    assert report["result"]["terms"] == [
        {"c": "3", "e": [2, 0]},
        {"c": "1", "e": [4, 0]},
    ]


def test_marginal_rejects_bad_indices(capsys, tmp_path):
    source = tmp_path / "mixed.poly"
    source.write_text("n=2\nx1^2\n")
    code, _, err = run(capsys, "marginal", "--p", str(source), "--marginalize", "3")
    assert code == 2
    assert "out of range" in err


def test_verify_fixture_directory(capsys):
    code, report, _ = run_json(capsys, "verify", str(FIXTURES), "--seed", "42")
    assert code == 0
    assert report["all_pass"] is True
    assert report["pairs_checked"] > 0
    assert all(entry["pass"] for entry in report["fixtures"])


def test_unlink_quartic_pair_residuals_zero(capsys):
    code, report, _ = run_json(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "quartic_x1.poly"),
        "--v", str(FIXTURES / "quartic_x2.poly"),
    )
    assert code == 0
    assert report["verdict"] == "unlinked"
    assert report["residual_u"] == 0.0
    assert report["residual_v"] == 0.0


# ---------------------------------------------------------------------------
# Determinism and plumbing
# ---------------------------------------------------------------------------


def test_reports_are_byte_identical(capsys):
    argv = [
        "unlink",
        "--u", str(FIXTURES / "rot_u.poly"),
        "--v", str(FIXTURES / "rot_v.poly"),
        "--seed", "42",
    ]
    code1 = main(argv)
    first = capsys.readouterr().out
    code2 = main(argv)
    second = capsys.readouterr().out
    assert code1 == code2 == 0
    assert first == second


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(
        capsys,
        "cov",
        "--u", str(FIXTURES / "square.poly"),
        "--v", str(FIXTURES / "square_sum.poly"),
        "--out", str(target),
    )
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["cov_exact"] == "2"


def test_env_seed_is_used(capsys, monkeypatch):
    monkeypatch.setenv("UNLINK_SEED", "7")
    code, report, _ = run_json(capsys, "check", "--p", str(FIXTURES / "square.poly"))
    assert code == 0
    assert report["seed"] == 7


def test_flag_overrides_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("UNLINK_SEED", "7")
    code, report, _ = run_json(
        capsys, "check", "--p", str(FIXTURES / "square.poly"), "--seed", "11"
    )
    assert code == 0
    assert report["seed"] == 11


def test_floats_use_17_significant_digits(capsys):
    code, out, _ = run(
        capsys,
        "unlink",
        "--u", str(FIXTURES / "rot_u.poly"),
        "--v", str(FIXTURES / "rot_v.poly"),
    )
    assert code == 0
    assert "0.70710678118654746" in out
