import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udnplan.scenario import (
    KEYS,
    ExponentOutOfRange,
    InvalidParameter,
    NegativeDensity,
    ParseError,
    RatioOutOfRange,
    Scenario,
    UnknownKey,
    dumps,
    load_scenario,
    loads,
    parse_assignments,
    save_scenario,
    validate,
)


def test_defaults_are_the_reference_setting():
    sc = Scenario()
    assert sc.densities.lambda_u == 0.02
    assert sc.densities.lambda_g == 0.1
    assert sc.radio.theta_deg == 10.0
    assert sc.radio.theta == pytest.approx(math.radians(10))
    assert sc.radio.sigma2 == 1.0
    assert (sc.radio.alpha_mu, sc.radio.alpha_mm_out, sc.radio.alpha_mm_in) == (4.58, 5.76, 2.0)
    assert (sc.bands.w_mu_total, sc.bands.w_mm) == (20.0, 500.0)
    assert sc.area_in == pytest.approx(0.02, rel=1e-15)


def test_reference_radio_setting_is_valid():
    sc = Scenario().with_overrides(alpha_mu=4.58, alpha_mm_out=5.76, theta=10, sigma2=1, t_min=0.03)
    assert validate(sc) is sc


@pytest.mark.parametrize("override, exc", [
    ({"alpha_mu": 2.0}, ExponentOutOfRange),
    ({"alpha_mm_out": 1.5}, ExponentOutOfRange),
    ({"alpha_mm_in": 3.0}, ExponentOutOfRange),
    ({"t_min": 1.01}, RatioOutOfRange),
    ({"t_min": -0.1}, RatioOutOfRange),
    ({"lambda_u": -1}, NegativeDensity),
    ({"lambda_g": -0.1}, NegativeDensity),
    ({"theta": 0}, InvalidParameter),
    ({"theta": 361}, InvalidParameter),
    ({"sigma2": 0}, InvalidParameter),
    ({"trials": 0}, InvalidParameter),
    ({"window_side": 0}, InvalidParameter),
])
def test_validate_rejects(override, exc):
    with pytest.raises(exc):
        validate(Scenario().with_overrides(**override))


def test_t_equal_one_is_the_valid_boundary():
    validate(Scenario().with_overrides(t_min=1))


def test_all_violations_are_listed():
    with pytest.raises(ExponentOutOfRange) as info:
        validate(Scenario().with_overrides(alpha_mu=1, t_min=3, lambda_mm=-1))
    kinds = {type(v) for v in info.value.violations}
    assert kinds == {ExponentOutOfRange, RatioOutOfRange, NegativeDensity}


def test_validate_is_idempotent():
    sc = Scenario().with_overrides(lambda_mu=3)
    assert validate(validate(sc)) == sc


def test_outdoor_probability_matches_closed_form():
    sc = Scenario().with_overrides(lambda_g=0.37, radius_in=1.3)
    assert sc.p_outdoor == pytest.approx(math.exp(-0.37 * math.pi * 1.3**2), rel=4 * 2.0**-52)


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    assert load_scenario(p) == Scenario()


def test_file_values_and_comments(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("# mmWave band\nw_mm = 500   # MHz\n\ntheta = 20\narea_in = 0.2\ntrials = 0x10\n")
    sc = load_scenario(p)
    assert sc.bands.w_mm == 500.0
    assert sc.radio.theta == pytest.approx(math.pi / 9)
    assert sc.area_in == pytest.approx(0.2)
    assert sc.sim.trials == 16


def test_negative_density_in_file():
    with pytest.raises(NegativeDensity):
        loads("lambda_u = -1\n")


@pytest.mark.parametrize("text, line, key, exc", [
    ("lambda_mu = 1\nlamda_u = 0.1\n", 2, "lamda_u", UnknownKey),
    ("alpha_mu = four\n", 1, "alpha_mu", ParseError),
    ("\n\njust words\n", 3, None, ParseError),
    ("seed = 1\nseed = 2\n", 2, "seed", ParseError),
    ("trials = 2.5\n", 1, "trials", ParseError),
])
def test_parse_errors_carry_diagnostics(text, line, key, exc):
    with pytest.raises(exc) as info:
        loads(text)
    assert info.value.line == line
    assert info.value.key == key
    assert f"line {line}" in str(info.value)


def test_round_trip_exact(tmp_path):
    sc = Scenario().with_overrides(lambda_mu=0.1 + 0.2, theta=7.5, area_in=0.2, seed=2**63 - 1)
    p = tmp_path / "rt.cfg"
    save_scenario(sc, p)
    assert load_scenario(p) == sc
    assert dumps(load_scenario(p)) == dumps(sc)


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(0, 1e6, allow_nan=False),
    alpha=st.floats(2.0001, 12),
    t=st.floats(0, 1),
    theta=st.floats(0.01, 360),
)
def test_round_trip_property(lam, alpha, t, theta):
    sc = Scenario().with_overrides(lambda_mm=lam, alpha_mu=alpha, t_min=t, theta=theta)
    assert loads(dumps(sc)) == sc


def test_params_hash_tracks_content():
    a = Scenario()
    assert a.params_hash() == Scenario().params_hash()
    assert a.params_hash() != a.with_overrides(lambda_mu=2).params_hash()


def test_parse_assignments():
    assert parse_assignments(["lambda_mu=2", " theta = 5 "]) == {"lambda_mu": "2", "theta": "5"}
    with pytest.raises(UnknownKey):
        parse_assignments(["nope=1"])
    with pytest.raises(ParseError):
        parse_assignments(["lambda_mu"])


def test_every_key_is_settable():
    sc = Scenario()
    for k in KEYS:
        if k in ("trials", "seed"):
            continue
        sc.with_overrides(**{k: 1.0})
