import math
import pathlib

import numpy as np
import pytest

import posdwell

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"


def load(name):
    return posdwell.System.load(str(DATA / f"{name}.json"))


def test_arbitrary_dwell_time_gain():
    cert = posdwell.analyze(load("ex1"), "arbitrary")
    assert cert.kind == "ArbitraryDT"
    assert cert.gamma == pytest.approx(1.9125, rel=1e-4)
    assert posdwell.verify(cert, load("ex1"))["passed"]


def test_weakened_certificate_fails_output_row():
    ex2 = load("ex2")
    cert = posdwell.analyze(ex2, "constant:0.3", 4)
    text = cert.to_json().replace(repr(cert.gamma), repr(0.9 * cert.gamma))
    bad = posdwell.Certificate.from_json(text)
    report = posdwell.verify(bad, ex2)
    assert not report["passed"]
    assert "output" in report["worst_row"]


def test_certificate_round_trip():
    cert = posdwell.analyze(load("ex2"), "range:0.3:0.5", 4)
    again = posdwell.Certificate.from_json(cert.to_json())
    assert again.gamma == cert.gamma
    assert again.zeta == cert.zeta


def test_bound_dominates_simulation():
    ex3 = load("ex3")
    cert = posdwell.analyze(ex3, "minimum:2", 4)
    lb = posdwell.estimate_gain(ex3, "minimum:2", runs=10, horizon=20.0)
    assert lb <= cert.gamma + 1e-6


def test_switched_analysis():
    ex5 = load("ex5")
    assert ex5.switched
    cert = posdwell.analyze(ex5, "minimum:0.1", 4)
    grid = posdwell.switched_gridded_gain(ex5, 0.1, 101)
    assert abs(cert.gamma - grid) <= 0.01 * grid
    assert posdwell.cross_check(cert, ex5)["passed"]


def test_synthesis_and_gains():
    ex4 = load("ex4")
    ctrl = posdwell.synthesize(ex4, "constant:0.1", 2)
    assert posdwell.verify_controller(ctrl, ex4)["passed"]
    K = ctrl.jump_gain(0.1)
    assert K.shape == (1, 2)
    assert np.all(np.isfinite(ctrl.flow_gain(0.05)))


def test_lti_closed_form():
    A = np.array([[-1.0, 0.0], [1.0, -2.0]])
    E = np.array([[0.1], [1.1]])
    C = np.array([[0.0, 1.0]])
    F = np.array([[0.3]])
    assert posdwell.lti_linf_gain(A, E, C, F) == pytest.approx(0.9)


def test_handelman_certificate():
    w = posdwell.certify_nonneg([0.0, 1.0, -1.0], 0.0, 1.0, 2)
    assert w[(1, 1)] == pytest.approx(1.0)
    assert posdwell.certify_nonneg([0.26, -1.0, 1.0], 0.0, 1.0, 10) is None


def test_errors():
    with pytest.raises(posdwell.NotConstant):
        posdwell.analyze(load("ex2"), "arbitrary")
    with pytest.raises(posdwell.ParseError):
        posdwell.System.from_json("{")
    with pytest.raises(ValueError):
        posdwell.analyze(load("ex5"), "constant:0.1")
    assert math.isfinite(load("ex1").n)
