import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canonsys import cli, io
from canonsys.hamiltonian import PiecewiseHamiltonian as PH


def run(args, stdin=None):
    p = subprocess.run([sys.executable, "-m", "canonsys"] + args, input=stdin,
                       capture_output=True, text=True, timeout=120)
    return p.returncode, p.stdout, p.stderr


def test_example1_ktilde_pipeline():
    _, h, _ = run(["example1", "--L", "5"])
    code, out, _ = run(["ktilde"], h)
    assert code == 0 and out.strip() == '{"ktilde": 10.0}'


def test_example1_entropy_pipeline():
    _, h, _ = run(["example1", "--L", "1"])
    code, out, _ = run(["entropy", "--method", "closed"], h)
    assert code == 0 and out.strip() == '{"K": 0.6931471805599453}'


def test_validate_not_psd():
    h = json.dumps({"cells": [{"len": 1, "h": [[-1, 0], [0, 1]]}], "tail": {"h": [[1, 0], [0, 1]]}})
    code, out, err = run(["validate"], h)
    assert code == 2 and json.loads(out)["reason"] == "cell 0 not PSD" and "cell 0 not PSD" in err
    code, _, err = run(["ktilde"], h)
    assert code == 2 and "not PSD" in err


def test_exit_codes(capsys):
    assert cli.main(["nosuchcommand"]) == 1
    assert cli.main(["weyl", "--input", "/nonexistent"]) == 1
    code, _, err = run(["weyl", "--z", "abc"], PH.constant(np.eye(2)).to_json())
    assert code == 1 and "complex" in err
    h = PH([1.0], [np.diag([1.0, 0.0])], np.eye(2)).to_json()
    code, _, err = run(["factorize"], h)
    assert code == 2 and "NotUnitDeterminant" in err
    code, _, _ = run(["ktilde"], "{not json")
    assert code == 1


def test_density_csv_and_transfer(tmp_path):
    _, h, _ = run(["example1", "--L", "2"])
    out = tmp_path / "w.csv"
    code, _, _ = run(["density", "--xmin", "-1", "--xmax", "1", "--n", "5", "--out", str(out)], h)
    assert code == 0
    header, cols = io.read_csv(out)
    assert header == ["x", "w"]
    assert np.allclose(cols["w"], 1 / (1 + 4 * cols["x"] ** 2), rtol=1e-13)
    code, txt, _ = run(["transfer", "--t", "1", "--z", "1+2i"], h)
    m = json.loads(txt)["M"]
    assert io.from_cjson(m[1][0]) == -(1 + 2j)


def test_factorize_and_verify(tmp_path):
    _, h, _ = run(["example3", "--v", "0.3,-0.2", "--len", "1,0.5"])
    fpath = tmp_path / "f.json"
    code, _, _ = run(["factorize", "--method", "spectral", "--out", str(fpath)], h)
    assert code == 0
    code, out, _ = run(["verify-fact", "--fact", str(fpath)], h)
    rep = json.loads(out)
    assert code == 0 and rep["residual"] < 1e-10 and rep["det_G"] < 1e-10


def test_report(tmp_path):
    _, h, _ = run(["example3", "--v", "0.25"])
    code, out, err = run(["report", "--out-dir", str(tmp_path)], h)
    assert code == 0, err
    summary = json.loads(out)
    assert summary["density_max_rel_diff"] < 1e-8
    for name in ("density", "profile", "ktilde", "factorization", "krein", "log_integrand"):
        assert (tmp_path / f"{name}.csv").stat().st_size > 0
        assert (tmp_path / f"{name}.png").read_bytes()[:4] == b"\x89PNG"


def test_dirac_command():
    pot = json.dumps({"cells": [{"len": 1.0, "v": [[1.0, 0.0], [0.0, -1.0]]}]})
    code, out, _ = run(["dirac"], pot)
    h = PH.from_json(out)
    assert code == 0 and np.allclose(h.tail, [[np.cosh(2), np.sinh(2)], [np.sinh(2), np.cosh(2)]])


def test_deterministic_output():
    _, h, _ = run(["example3", "--v", "0.4,0.1"])
    a = run(["audit-theorem1"], h)
    b = run(["audit-theorem1"], h)
    assert a == b


@pytest.mark.parametrize("text,value", [("1+2i", 1 + 2j), ("i", 1j), ("-i", -1j), ("3", 3),
                                        ("-0.5i", -0.5j), ("1e-3-2e+1i", 1e-3 - 20j), ("2-1j", 2 - 1j)])
def test_parse_complex(text, value):
    assert io.parse_complex(text) == value


def test_parse_complex_rejects():
    for bad in ("", "nan", "1+xi", "inf"):
        with pytest.raises(ValueError):
            io.parse_complex(bad)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trip(values):
    text = io.csv_text(["a"], [values])
    back = [float(line) for line in text.splitlines()[1:]]
    assert back == [float(v) for v in values]


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(allow_nan=False, allow_infinity=False))
def test_complex_json_round_trip(z):
    assert io.from_cjson(json.loads(io.dumps(z))) == z
