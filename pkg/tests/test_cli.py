"""Driver behaviour: exit codes, JSON report stream, determinism.

Everything runs in-process through main(argv); stdout carries one JSON
object per line and stderr the human transcript, so capsys sees both.
"""

import json

import pytest

from qident.cli import main

BROKEN = """\
identity broken {
  lhs: sum(n >= 0; q^(n^2) / poch(q; q; n));
  rhs: 2 / poch(q; q^5; inf) / poch(q^4; q^5; inf);
}
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    records = [json.loads(line) for line in out.splitlines()]
    return code, records, err


# ------------------------------------------------------------------- verify


def test_verify_catalog_pass_is_exit_zero(capsys):
    code, records, err = run(capsys, "verify", "--catalog", "rr1",
                             "--order", "6")
    assert code == 0
    assert len(records) == 1
    assert records[0]["status"] == "pass"
    assert records[0]["details"]["qcoeffs"] == [1, 1, 1, 1, 2, 2, 3]
    assert "both sides = 1 + q + q^2 + q^3 + 2*q^4 + 2*q^5 + 3*q^6" in err


def test_verify_catalog_with_params(capsys):
    code, records, _ = run(capsys, "verify", "--catalog", "andrews-gordon",
                           "--param", "k=3,i=1", "--order", "20")
    assert code == 0
    assert records[0]["details"]["params"] == {"i": 1, "k": 3}
    assert records[0]["details"]["support"]["lhs"]["points"] > 0


def test_verify_mismatch_file_is_exit_one(capsys, tmp_path):
    path = tmp_path / "broken.qid"
    path.write_text(BROKEN)
    code, records, err = run(capsys, "verify", str(path), "--order", "8")
    assert code == 1
    assert records[0]["status"] == "mismatch"
    assert records[0]["first_mismatch"] == {
        "exponents": {"q": 0}, "lhs": 1, "rhs": 2}
    assert "first difference at q^0: 1 != 2" in err


def test_verify_multiblock_file(capsys, tmp_path):
    path = tmp_path / "two.qid"
    path.write_text(
        "identity a { lhs: sum(n >= 0; q^(n^2) / poch(q; q; n)); "
        "rhs: 1 / poch(q; q^5; inf) / poch(q^4; q^5; inf); }\n"
        "identity b { lhs: sum(k in Z; (-1)^k * q^(3/2*k^2 - 1/2*k)); "
        "rhs: poch(q; q; inf); }\n")
    code, records, _ = run(capsys, "verify", str(path), "--order", "18")
    assert code == 0
    assert [r["name"] for r in records] == ["a", "b"]
    # the signed bilateral sum collapses to sparse unit coefficients
    assert set(records[1]["details"]["qcoeffs"]) <= {-1, 0, 1}


def test_verify_parse_error_is_exit_two(capsys, tmp_path):
    path = tmp_path / "bad.qid"
    path.write_text("identity x { lhs: q^; rhs: q; }")
    code, records, _ = run(capsys, "verify", str(path))
    assert code == 2
    assert records[0]["status"] == "error"
    assert records[0]["error"].startswith("ParseError:")


def test_verify_lowering_error_is_exit_two(capsys, tmp_path):
    path = tmp_path / "numer.qid"
    path.write_text("identity x { vars: a; "
                    "lhs: sum(k >= 0; poch(a; q; k) * q^k); "
                    "rhs: poch(q; q; inf); }")
    code, records, _ = run(capsys, "verify", str(path))
    assert code == 2
    assert records[0]["error"].startswith("LoweringError:")


def test_verify_unknown_key_and_bad_params(capsys):
    code, records, _ = run(capsys, "verify", "--catalog", "rr9")
    assert code == 2
    assert records[0]["error"].startswith("UnknownKey:")

    code, records, _ = run(capsys, "verify", "--catalog", "cao-wang",
                           "--param", "a=0")
    assert code == 2
    assert records[0]["error"].startswith("ParamOutOfRange:")

    assert main(["verify", "--catalog", "cao-wang", "--param", "a=x"]) == 2
    capsys.readouterr()


def test_verify_zwindow_flag(capsys):
    code, records, _ = run(capsys, "verify", "--catalog", "bilateral-euler",
                           "--param", "m=1", "--order", "10",
                           "--zwindow", "3")
    assert code == 0
    assert records[0]["details"]["zwindow"] == [-3, 3]

    code, records, _ = run(capsys, "verify", "--catalog", "q-binomial",
                           "--order", "10", "--zwindow", "0,4")
    assert code == 0
    assert records[0]["details"]["zwindow"] == [0, 4]


def test_verify_needs_a_target(capsys):
    code, records, err = run(capsys, "verify", "--order", "4")
    assert code == 2
    assert records == []
    assert "nothing to verify" in err


# ------------------------------------------------------------------- expand


def test_expand_partition_series(capsys):
    code, records, err = run(capsys, "expand", "1 / poch(q; q; inf)",
                             "--order", "5")
    assert code == 0
    assert records[0]["qcoeffs"] == [1, 1, 2, 3, 5, 7]
    assert "1 + q + 2*q^2 + 3*q^3 + 5*q^4 + 7*q^5" in err


def test_expand_finite_product(capsys):
    code, records, _ = run(capsys, "expand", "poch(q; q; 3)", "--order", "6")
    assert code == 0
    assert records[0]["qcoeffs"] == [1, -1, -1, 0, 1, 1, -1]


def test_expand_sum_expression(capsys):
    code, records, _ = run(capsys, "expand",
                           "sum(n >= 0; q^(n^2) / poch(q; q; n))",
                           "--order", "6")
    assert code == 0
    assert records[0]["qcoeffs"] == [1, 1, 1, 1, 2, 2, 3]


def test_expand_half_integral_exponents_report_their_base(capsys):
    """A genuinely half-integral theta sum comes back in base q^(1/2),
    flagged by qpow_denominator; coefficient k sits at (k^2/2) * 2."""
    code, records, _ = run(capsys, "expand", "sum(k in Z; (-1)^k * q^(1/2*k^2))",
                           "--order", "5")
    assert code == 0
    assert records[0]["qpow_denominator"] == 2
    assert records[0]["qcoeffs"][:10] == [1, -2, 0, 0, 2, 0, 0, 0, 0, -2]


def test_expand_formal_variable_series(capsys):
    code, records, _ = run(capsys, "expand", "poch(x*q; q; 2)", "--order", "4")
    assert code == 0
    assert "qcoeffs" not in records[0]
    assert "x" in records[0]["series"]


def test_expand_parse_error_is_exit_two(capsys):
    code, records, _ = run(capsys, "expand", "(")
    assert code == 2
    assert records[0]["status"] == "error"
    assert records[0]["error"].startswith("ParseError:")


def test_expand_from_file(capsys, tmp_path):
    path = tmp_path / "expr.txt"
    path.write_text("1 / poch(q; q; inf)\n")
    code, records, _ = run(capsys, "expand", str(path), "--order", "3")
    assert code == 0
    assert records[0]["qcoeffs"] == [1, 1, 2, 3]


# --------------------------------------------------------------- prove-main


def test_prove_main_small_order(capsys):
    code, records, _ = run(capsys, "prove-main", "--order", "12",
                           "--grid", "5")
    assert code == 0
    assert records[0]["name"] == "main-replay"
    assert records[0]["details"]["grid_points"] == 11 * 11
    assert len(records[0]["details"]["stages"]) == 3


# --------------------------------------------------------------------- list


def test_list_prints_the_whole_catalog(capsys):
    code, records, err = run(capsys, "list")
    assert code == 0
    assert len(records) == 16
    assert records[0]["key"] == "rr1"
    assert all("summary" in r and "mode" in r for r in records)
    assert "rr1" in err


# ------------------------------------------------------------- determinism


def test_reports_are_byte_identical_without_timing(capsys):
    argv = ["verify", "--catalog", "cor-double", "--order", "16",
            "--no-timing"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second
    assert "elapsed" not in first


def test_timing_field_is_the_only_difference(capsys):
    argv = ["verify", "--catalog", "rr2", "--order", "12"]
    main(argv)
    one = json.loads(capsys.readouterr().out)
    main(argv)
    two = json.loads(capsys.readouterr().out)
    one.pop("elapsed")
    two.pop("elapsed")
    assert one == two
