import math

import pytest

import glimmlab


CONFIG = {
    "model": "burgers",
    "eps": 1.0 / 16,
    "horizon": 1.0,
    "sequence": "vdc",
    "datum": {"xs": [0.0, 0.25], "values": [[1.0], [0.5], [0.1]]},
}


def test_riemann_scalar_shock():
    fan = glimmlab.riemann("burgers", [1.0], [0.1], params=None)
    assert fan["strengths"] == pytest.approx([-0.9])
    assert fan["waves"][0]["family"] == 1


def test_merge_ledger_quadratic_amount():
    led = glimmlab.merge("cubic", [-1.0], [-0.2], [0.6])
    assert led["a_quadr"][0] == pytest.approx(0.130666, abs=1e-3)
    assert led["total"] >= led["a_quadr"][0]


def test_run_verify_round_trip():
    trace = glimmlab.run(CONFIG)
    assert len(trace["layers"]) == 17
    tv0 = trace["layers"][0]["V"]
    assert tv0 == pytest.approx(0.9)
    # total variation never grows for scalar data
    assert all(l["V"] <= tv0 + 1e-9 for l in trace["layers"])

    report = glimmlab.verify(trace)
    assert report["tv0"] == pytest.approx(0.9)
    assert report["unexplained"] == 0
    assert report["config"]["model"] == "burgers"
    assert math.isfinite(report["fitted_c"])


def test_csv_helpers():
    trace = glimmlab.run(CONFIG)
    pkg = glimmlab.packages_csv(trace)
    assert pkg.startswith("id,parent,family,sign")
    fun = glimmlab.functionals_csv(trace)
    assert fun.splitlines()[0] == "layer,t,theta,V,Q_trans,Q_cubic,Q_known,tot_var"
    assert len(fun.splitlines()) == len(trace["layers"]) + 1


def test_errors_map_to_python_exceptions():
    with pytest.raises(glimmlab.BadConfig):
        glimmlab.run({"model": "burgers", "eps": -1.0})
    with pytest.raises(Exception):
        glimmlab.riemann("no-such-model", [0.0], [0.0])


def test_vdc_sequence():
    assert glimmlab.vdc(1) == 0.5
    assert glimmlab.vdc(2) == 0.25
    assert glimmlab.vdc(3) == 0.75
