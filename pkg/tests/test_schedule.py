import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkbound.errors import DomainError, NonIntegrable
from fkbound.schedule import (
    Constant,
    ExpDecay,
    Indicator,
    PowerLaw,
    Tabulated,
    coupling_from_dict,
    coupling_to_dict,
    envelope,
    evaluate,
    is_zero,
    iterated_norm,
    norm,
    scale,
)


def brute_force_running_max(values):
    out = []
    for k in range(len(values)):
        out.append(max(values[k:]))
    return tuple(out)


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

def test_envelope_indicator_is_fixed_point():
    env = envelope(Indicator(1.0, 2.0), 3.0)
    rep = env.representation
    assert rep == Indicator(1.0, 2.0)
    assert evaluate(rep, 1.0) == 1.0
    assert evaluate(rep, 2.5) == 0.0


def test_envelope_exp_decay_identity():
    f = ExpDecay(0.7, 1.0)
    assert envelope(f, 5.0).representation == f


def test_envelope_tabulated_worked_example():
    f = Tabulated((0, 1, 2, 3), (1, 3, 2, 4))
    rep = envelope(f, 3.0).representation
    assert rep.values == brute_force_running_max(f.values) == (4.0, 4.0, 4.0, 4.0)


def test_envelope_increasing_power_law_flattens():
    rep = envelope(PowerLaw(2.0, 1.5), 4.0).representation
    assert isinstance(rep, Constant)
    assert rep.level == pytest.approx(2.0 * 4.0 ** 1.5)


def test_envelope_decreasing_power_law_identity():
    f = PowerLaw(1.0, -0.5)
    assert envelope(f, 2.0).representation == f


tabulated_data = st.lists(
    st.floats(min_value=0.0, max_value=10.0, allow_nan=False), min_size=2, max_size=30
)


@settings(max_examples=200, deadline=None)
@given(tabulated_data)
def test_envelope_idempotent_and_dominating(values):
    grid = tuple(float(i) for i in range(len(values)))
    f = Tabulated(grid, tuple(values))
    T = grid[-1]
    rep = envelope(f, T).representation
    rep2 = envelope(rep, T).representation
    assert rep2.values == rep.values
    assert all(e >= v for e, v in zip(rep.values, f.values))
    assert rep.values == brute_force_running_max(f.values)
    # non-increasing
    assert all(b <= a for a, b in zip(rep.values, rep.values[1:]))


@settings(max_examples=100, deadline=None)
@given(tabulated_data, st.floats(min_value=0.01, max_value=100.0))
def test_envelope_scaling_equivariance(values, factor):
    grid = tuple(float(i) for i in range(len(values)))
    f = Tabulated(grid, tuple(values))
    T = grid[-1]
    lhs = envelope(scale(f, factor), T).representation.values
    rhs = tuple(factor * v for v in envelope(f, T).representation.values)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_envelope_rejects_bad_horizon():
    with pytest.raises(DomainError):
        envelope(Constant(1.0), 0.0)
    with pytest.raises(DomainError):
        envelope(Tabulated((0, 1), (1, 1)), 2.0)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def test_norm_exp_decay_mass():
    f = ExpDecay(0.9, 1.0)
    assert norm(f, 1.0, 2.0).value == pytest.approx(0.9 * (1 - math.exp(-2.0)), rel=1e-14)


def test_norm_constant_inverse_sqrt_weight():
    # int_0^T alpha t^-1/2 dt = 2 alpha sqrt(T)
    assert norm(Constant(0.4), 1.0, 9.0, weight=0.5).value == pytest.approx(2 * 0.4 * 3.0)


def test_norm_constant_l2():
    assert norm(Constant(1.0), 2.0, 3.0).value == pytest.approx(math.sqrt(3.0))


def test_norm_indicator_stops_at_cutoff():
    f = Indicator(2.0, 1.0)
    assert norm(f, 1.0, 5.0).value == pytest.approx(2.0)
    assert norm(f, 1.0, 0.5).value == pytest.approx(1.0)


def test_norm_tabulated_exact_piecewise():
    f = Tabulated((0.0, 1.0, 2.0), (2.0, 1.0, 1.0))
    assert norm(f, 1.0, 2.0).value == pytest.approx(3.0)
    assert norm(f, 1.0, 1.5).value == pytest.approx(2.5)
    assert norm(f, 2.0, 2.0).value == pytest.approx(math.sqrt(5.0))


def test_norm_power_law_divergence_raises():
    with pytest.raises(NonIntegrable):
        norm(PowerLaw(1.0, -1.0), 1.0, 1.0)
    with pytest.raises(NonIntegrable):
        norm(PowerLaw(1.0, -0.4), 2.0, 1.0, weight=0.5)  # (e-a)p = -1.8


def test_norm_weight_exponent_must_converge():
    with pytest.raises(NonIntegrable):
        norm(Constant(1.0), 2.0, 1.0, weight=0.5)  # a*p = 1


@settings(max_examples=100, deadline=None)
@given(
    # keep levels out of the subnormal range, where c**p cannot hold 1e-12
    st.one_of(st.just(0.0), st.floats(min_value=1e-100, max_value=1e6)),
    st.floats(min_value=1.0, max_value=4.0),
    st.floats(min_value=0.01, max_value=50.0),
)
def test_norm_scaling_homogeneity(level, p, factor):
    f = Constant(level)
    lhs = norm(scale(f, factor), p, 2.0).value
    rhs = factor * norm(f, p, 2.0).value
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=3.0), st.floats(min_value=0.0, max_value=3.0))
def test_norm_monotone_in_upper_time(s1, s2):
    lo, hi = sorted((s1, s2))
    f = ExpDecay(1.3, 0.7)
    assert norm(f, 1.0, lo).value <= norm(f, 1.0, hi).value + 1e-15


def test_analytic_vs_tabulated_quadrature_agreement():
    # midpoint-sampled table of e^-t on 10^4 cells: step-left integral is the
    # midpoint rule, O(dt^2) from the analytic mass
    T, n = 1.0, 10_000
    grid = np.linspace(0.0, T, n + 1)
    mids = (grid[:-1] + grid[1:]) / 2.0
    tab = Tabulated(tuple(grid), tuple(np.exp(-mids)) + (math.exp(-T),))
    exact = norm(ExpDecay(1.0, 1.0), 1.0, T).value
    assert norm(tab, 1.0, T).value == pytest.approx(exact, rel=1e-6)


# ---------------------------------------------------------------------------
# iterated norms
# ---------------------------------------------------------------------------

def test_iterated_norm_indicator_piecewise_linear():
    g, tau, T = 0.8, 1.5, 4.0
    val = iterated_norm(Indicator(g, tau), T, 1.0, 0.0, 1.0)
    assert val == pytest.approx(g * (tau * T - tau * tau / 2.0), rel=1e-10)


def test_iterated_norm_exp_decay_asymptote():
    # integrand (amp^2)(1 - e^-t)^2 -> slope amp^2; oracle by dense trapezoid
    amp = 1.0 / math.sqrt(2.0)
    f = ExpDecay(amp, 1.0)
    t = np.linspace(0.0, 20.0, 200_001)
    oracle = np.trapezoid((amp * (1 - np.exp(-t))) ** 2, t)
    val = iterated_norm(f, 20.0, 1.0, 0.0, 2.0)
    assert val == pytest.approx(float(oracle), rel=1e-8)
    slope = (iterated_norm(f, 40.0, 1.0, 0.0, 2.0) - val) / 20.0
    assert slope == pytest.approx(amp * amp, rel=1e-6)


def test_iterated_norm_zero_coupling():
    assert iterated_norm(Constant(0.0), 3.0, 1.0, 0.5, 2.0) == 0.0


def test_is_zero_detection():
    assert is_zero(Constant(0.0))
    assert is_zero(Tabulated((0, 1), (0.0, 0.0)))
    assert not is_zero(Indicator(0.1, 1.0))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("f", [
    Constant(1.5),
    ExpDecay(0.7071, 1.0),
    Indicator(2.0, 0.5),
    PowerLaw(1.0, -0.25),
    Tabulated((0.0, 0.5, 1.0), (1.0, 2.0, 0.5)),
])
def test_coupling_dict_round_trip(f):
    assert coupling_from_dict(coupling_to_dict(f)) == f


def test_coupling_validation():
    with pytest.raises(DomainError):
        Constant(-1.0)
    with pytest.raises(DomainError):
        Tabulated((0.5, 1.0), (1.0, 1.0))  # grid must start at 0
    with pytest.raises(DomainError):
        Tabulated((0.0, 0.0), (1.0, 1.0))  # strictly increasing
    with pytest.raises(DomainError):
        coupling_from_dict({"kind": "mystery"})
