import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplc.grid import admittance_matrix, branch_admittances, incidence_matrix
from gridplc.powerflow import (
    ConstraintLimits,
    DimensionError,
    PhasorState,
    branch_losses,
    check_constraints,
    dump_state,
    format_verdicts,
    injected_currents,
    injected_powers,
    jacobian,
    load_state,
    reference_jacobian,
)

from conftest import graph_from_edges, path_graph


def polar_pq(y, vm, va):
    """P and Q from the explicit polar sums, independent of the complex-vector route."""
    g, b = y.real, y.imag
    d = va[:, None] - va[None, :]
    p = vm * ((g * np.cos(d) + b * np.sin(d)) @ vm)
    q = vm * ((g * np.sin(d) - b * np.cos(d)) @ vm)
    return np.concatenate([p, q])


def fd_jacobian(y, v, h=1e-6):
    vm, va = np.abs(v), np.angle(v)
    n = len(v)
    x = np.concatenate([va, vm])
    out = np.zeros((2 * n, 2 * n))
    for c in range(2 * n):
        xp, xm = x.copy(), x.copy()
        xp[c] += h
        xm[c] -= h
        out[:, c] = (polar_pq(y, xp[n:], xp[:n]) - polar_pq(y, xm[n:], xm[:n])) / (2 * h)
    return out


def random_system(rng, n):
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    edges += [tuple(int(a) for a in rng.choice(n, 2, replace=False)) for _ in range(int(rng.integers(0, n)))]
    g = graph_from_edges(edges, n, length=float(rng.uniform(50, 500)), r=float(rng.uniform(0.05, 1)),
                         x=float(rng.uniform(0.05, 1)))
    y = admittance_matrix(g)
    v = rng.uniform(0.9, 1.1, n) * np.exp(1j * rng.uniform(-0.3, 0.3, n))
    return g, y, v


def two_bus():
    # 0.1 km at 1 ohm/km reactance -> y = -j10 S
    return graph_from_edges([(0, 1)], 2, length=100.0, r=0.0, x=1.0)


def generous_limits(**kw):
    base = dict(p_min=-1e9, p_max=1e9, q_min=-1e9, q_max=1e9, v_min=0.5, v_max=1.5, i_line_max=1e9, epsilon=0.0)
    base.update(kw)
    return ConstraintLimits(**base)


def test_flat_profile_draws_no_current():
    y = admittance_matrix(path_graph(5))
    assert np.allclose(injected_currents(y, np.ones(5)), 0, atol=1e-12)


def test_two_bus_current_and_power():
    y = admittance_matrix(two_bus())
    assert y[0, 1] == pytest.approx(10j)
    v = np.array([1.0, np.exp(-1j * np.deg2rad(5))])
    i = injected_currents(y, v)
    assert i[0] == pytest.approx(-10j * (1 - v[1]), abs=1e-12)
    s = injected_powers(v, i)
    assert s[0].real == pytest.approx(10 * np.sin(np.deg2rad(5)), abs=1e-12)
    assert s[0].real == pytest.approx(0.8716, abs=1e-4)


def test_zero_current_gives_zero_power():
    assert np.all(injected_powers(np.ones(3), np.zeros(3)) == 0)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        injected_currents(np.eye(3), np.ones(2))
    with pytest.raises(DimensionError):
        injected_powers(np.ones(3), np.ones(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_current_linearity_and_power_conjugation(n, seed, c):
    rng = np.random.default_rng(seed)
    _, y, v = random_system(rng, n)
    assert np.allclose(injected_currents(y, c * v), c * injected_currents(y, v), rtol=1e-12, atol=1e-9)
    i = injected_currents(y, v)
    assert np.allclose(injected_powers(np.conj(v), np.conj(i)), np.conj(injected_powers(v, i)))


def test_jacobian_matches_finite_differences(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        _, y, v = random_system(rng, n)
        j = jacobian(y, v)
        fd = fd_jacobian(y, v)
        scale = np.maximum(np.abs(fd), 1.0)
        assert np.max(np.abs(j - fd) / scale) < 1e-6


def test_single_isolated_bus_jacobian_is_zero():
    assert np.array_equal(jacobian(np.zeros((1, 1)), np.array([1.0 + 0j])), np.zeros((2, 2)))


def test_zero_magnitude_rejected():
    with pytest.raises(ValueError):
        jacobian(np.eye(2), np.array([1.0, 0.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_angle_shift_is_null_direction(n, seed):
    rng = np.random.default_rng(seed)
    _, y, v = random_system(rng, n)
    j = jacobian(y, v)
    null = np.concatenate([np.ones(n), np.zeros(n)])
    assert np.allclose(j @ null, 0, atol=1e-8)
    assert np.min(np.abs(np.linalg.eigvals(j).real)) < 1e-8


def test_reference_jacobian_drops_slack_angle():
    j = np.arange(36.0).reshape(6, 6)
    r = reference_jacobian(j, 1)
    assert r.shape == (5, 5)
    assert np.array_equal(r[0], j[0, [0, 2, 3, 4, 5]])


def test_flat_state_verdicts():
    g = path_graph(4)
    state = PhasorState.from_voltages(admittance_matrix(g), np.ones(4))
    out = check_constraints(g, state, generous_limits())
    assert all(out[k].passed for k in "abcde")
    out = check_constraints(g, state, generous_limits(epsilon=1e-3))
    assert all(out[k].passed for k in "abcd") and not out["e"].passed
    assert out["e"].slack == pytest.approx(-1e-3)
    raw = check_constraints(g, state, generous_limits(epsilon=1e-3), mode="raw")
    assert not raw["e"].passed
    assert "max_re_raw" in raw["e"].detail


def test_line_current_excess_reported_as_slack():
    g = two_bus()
    v = np.array([1.0, np.exp(-1j * np.deg2rad(5))])
    state = PhasorState.from_voltages(admittance_matrix(g), v)
    current = abs(-10j * (v[0] - v[1]))
    out = check_constraints(g, state, generous_limits(i_line_max=0.5))
    assert not out["d"].passed
    assert out["d"].slack == pytest.approx(0.5 - current, abs=1e-12)
    assert out["a"].passed and out["c"].passed


def test_single_voltage_violation_flips_only_c(rng):
    g, y, v = random_system(rng, 6)
    state = PhasorState.from_voltages(y, v)
    vm = np.abs(v)
    base = check_constraints(g, state, generous_limits(v_max=1.5))
    v_max = np.full(6, 1.5)
    v_max[3] = vm[3] - 0.01
    bumped = check_constraints(g, state, generous_limits(v_max=v_max))
    flipped = [k for k in "abcde" if base[k].passed != bumped[k].passed]
    assert flipped == ["c"]
    assert bumped["c"].slack == pytest.approx(-0.01)


def test_injection_limits_componentwise():
    g = two_bus()
    v = np.array([1.0, np.exp(-1j * np.deg2rad(5))])
    state = PhasorState.from_voltages(admittance_matrix(g), v)
    out = check_constraints(g, state, generous_limits(p_max=0.5))
    assert not out["b"].passed
    assert out["b"].slack == pytest.approx(0.5 - 10 * np.sin(np.deg2rad(5)), abs=1e-9)


def test_missing_limit_field():
    with pytest.raises(KeyError):
        ConstraintLimits.from_mapping({"p_min": 0})


def test_limit_invariants():
    with pytest.raises(ValueError):
        generous_limits(v_min=1.2, v_max=1.1)
    with pytest.raises(ValueError):
        generous_limits(epsilon=-1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_closure_and_conservation(n, seed):
    rng = np.random.default_rng(seed)
    g, y, v = random_system(rng, n)
    state = PhasorState.from_voltages(y, v)
    out = check_constraints(g, state, generous_limits())
    assert float(out["a"].detail.split("=")[1]) <= 1e-10
    # losses via explicit branch currents, not via Y
    yl = branch_admittances(g)
    il = yl * (incidence_matrix(g) @ v)
    losses = float(np.sum((1 / yl).real * np.abs(il) ** 2))
    assert branch_losses(g, v) == pytest.approx(losses, rel=1e-12)
    assert state.powers.real.sum() == pytest.approx(losses, rel=1e-8)


def test_state_round_trip(rng):
    g, y, v = random_system(rng, 5)
    state = PhasorState.from_voltages(y, v)
    back = load_state(g, io.StringIO(dump_state(g, state)))
    assert np.allclose(back.voltages, state.voltages, atol=1e-12)
    assert np.allclose(back.powers, state.powers, atol=1e-12)


def test_state_dimension_mismatch():
    g = path_graph(3)
    text = "bus_id,v_mag_pu,v_angle_deg,p_pu,q_pu\n1,1,0,0,0\n2,1,0,0,0\n"
    with pytest.raises(DimensionError):
        load_state(g, io.StringIO(text))


def test_verdict_text():
    g = path_graph(3)
    out = check_constraints(g, PhasorState.from_voltages(admittance_matrix(g), np.ones(3)), generous_limits())
    text = format_verdicts(out)
    assert "a.pass = true" in text and text.endswith("all_pass = true\n")
