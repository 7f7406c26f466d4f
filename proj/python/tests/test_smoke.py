import math

import numpy as np
import pytest

import brachi

SQRT2 = math.sqrt(2.0)


def test_models_are_listed():
    names = brachi.model_names()
    assert "minkowski3" in names and "einstein_cylinder" in names
    m = brachi.Model("static_well", {"a": 0.5})
    assert m.dim == 3
    assert m.metric([0.0, 0.0, 0.0]).shape == (3, 3)


def test_integration_conserves_constraints():
    m = brachi.Model("rotating_frame")
    sol = brachi.integrate_brachistochrone(m, 1.5, [0.2, 0.1, 0.0], [1.0, 0.4, 0.0], 0.9)
    assert sol.residual_conservation_Y < 1e-8
    assert sol.residual_conservation_speed < 1e-8
    curve = sol.curve
    assert curve["q"].shape == (401, 3)
    rep = brachi.correspondence_report(m, sol)
    assert rep["roundtrip_error"] < 1e-7


def test_flat_shooting_matches_closed_form():
    m = brachi.Model("minkowski3")
    for k in (SQRT2, 2.0, 3.0):
        sol, residual, _ = brachi.shoot(m, k, [0, 0, 0], [1, 0, 0], [1, 0.2, 0], 0.5)
        assert sol.T == pytest.approx(1.0 / math.sqrt(k * k - 1.0), abs=1e-8)
        assert residual < 1e-9


def test_cylinder_long_arc_index():
    m = brachi.Model("einstein_cylinder")
    p, q = [math.pi / 2, 0, 0], [math.pi / 2, math.pi / 2, 0]
    sol, _, _ = brachi.shoot(m, SQRT2, p, q, [0.05, -1, 0], 4.0)
    assert sol.T == pytest.approx(1.5 * math.pi, abs=1e-8)
    idx = brachi.indices(m, sol, 50)
    assert idx["morse_index"] == idx["geometric_index"] == 1


def test_survey_and_oracle():
    m = brachi.Model("minkowski3")
    res = brachi.survey(m, SQRT2, [0, 0, 0], [1, 0, 0], n_starts=8, seed=3, T_max=3.0)
    assert len(res["solutions"]) == 1 and res["consistent_with_odd"]
    cand = brachi.discrete_minimize(m, SQRT2, [0, 0, 0], [1, 0, 0], N=100, bump=[0.1, 0.1, 0.1])
    assert cand["T"] == pytest.approx(1.0, abs=1e-4)
    assert np.all(np.diff(cand["curve"]["t"]) > 0)


def test_errors_carry_their_kind():
    with pytest.raises(brachi.BrachiError) as info:
        brachi.Model("kerr")
    assert info.value.kind == "UnknownModel"
