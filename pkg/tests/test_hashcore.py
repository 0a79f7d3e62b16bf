import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mqhash.hashcore import (
    HashParams,
    QuditState,
    bias,
    bias_profile,
    collision_profile,
    hash_fidelity,
    max_bias,
    normalize_set,
    quantum_hash,
    qudit_hash_state,
    roots_of_unity,
    row_fidelities,
    worst_case_collision,
)


@st.composite
def params_st(draw, max_q=64, max_d=4, max_m=3):
    q = draw(st.integers(2, max_q))
    d = draw(st.integers(2, min(max_d, q)))
    m = draw(st.integers(1, max_m))
    rows = [[0] + draw(st.lists(st.integers(1, q - 1), min_size=d - 1, max_size=d - 1, unique=True))
            for _ in range(m)]
    return HashParams(q=q, d=d, m=m, s=tuple(tuple(r) for r in rows))


@st.composite
def set_st(draw, max_q=128):
    q = draw(st.integers(2, max_q))
    elems = draw(st.lists(st.integers(0, q - 1), min_size=1, max_size=min(q, 6), unique=True))
    return q, elems


# --- bias ------------------------------------------------------------------


def test_bias_trivial_cases():
    assert bias([0, 1], 0, 256) == 1.0
    assert bias([0, 128], 2, 256) == pytest.approx(1.0, abs=1e-15)
    assert bias([0, 128], 1, 256) == pytest.approx(0.0, abs=1e-12)
    assert max_bias([0, 128], 256) == (2, pytest.approx(1.0))


def test_bias_rejects_bad_input():
    with pytest.raises(ValueError):
        bias([], 1, 16)
    with pytest.raises(ValueError):
        bias([0, 16], 1, 16)
    with pytest.raises(ValueError):
        bias([0, 1], 16, 16)


@given(set_st(), st.data())
def test_bias_matches_direct_sum(qs, data):
    q, elems = qs
    x = data.draw(st.integers(0, q - 1))
    assert bias(elems, x, q) == pytest.approx(oracles.bias(elems, x, q), abs=1e-12)


@given(set_st(), st.data())
def test_bias_shift_invariance(qs, data):
    q, elems = qs
    t = data.draw(st.integers(0, q - 1))
    shifted = [(s + t) % q for s in elems]
    assert np.allclose(bias_profile(shifted, q), bias_profile(elems, q), atol=1e-12)
    assert normalize_set(shifted, q) == normalize_set(elems, q)


@given(set_st())
def test_normalize_set_is_canonical(qs):
    q, elems = qs
    norm = normalize_set(elems, q)
    assert norm[0] == 0 and norm == sorted(norm) and len(norm) == len(elems)
    assert normalize_set(norm, q) == norm


def test_normalize_set_rejects_duplicates():
    with pytest.raises(ValueError):
        normalize_set([0, 3, 3], 16)


def test_max_bias_breaks_ties_toward_smallest_x():
    # {0, 4} in Z_16 has bias 1 at x = 4, 8, 12
    assert max_bias([0, 4], 16)[0] == 4


# --- params ----------------------------------------------------------------


def test_params_validation():
    HashParams(q=16, d=2, m=1, s=((0, 3),))
    bad = [
        dict(q=16, d=2, m=1, s=((1, 3),)),
        dict(q=16, d=2, m=1, s=((0, 0),)),
        dict(q=16, d=2, m=1, s=((0, 16),)),
        dict(q=16, d=2, m=2, s=((0, 3),)),
        dict(q=16, d=3, m=1, s=((0, 3),)),
        dict(q=2, d=3, m=1, s=((0, 1, 2),)),
        dict(q=16, d=1, m=1, s=((0,),)),
    ]
    for kw in bad:
        with pytest.raises(ValueError):
            HashParams(**kw)


@given(params_st())
def test_params_json_round_trip(p):
    assert HashParams.from_json(p.to_json()) == p
    assert HashParams.from_dict(p.to_dict()) == p


def test_params_from_dict_malformed():
    with pytest.raises(ValueError):
        HashParams.from_dict({"q": 16, "d": 2})
    with pytest.raises(ValueError):
        HashParams.from_dict({"q": 16, "d": 2, "m": 1, "s": 5})


def test_from_rows_normalizes():
    p = HashParams.from_rows(16, [[5, 9], [1, 3]])
    assert p.s == ((0, 4), (0, 2))


# --- states ----------------------------------------------------------------


def test_roots_table_is_exact_and_read_only():
    r = roots_of_unity(8)
    assert r[0] == 1
    with pytest.raises(ValueError):
        r[0] = 2


def test_qudit_state_normalization_enforced():
    with pytest.raises(ValueError):
        QuditState(np.array([1.0, 1.0]))
    st_ = QuditState.from_phases(8, [0, 2])
    assert st_.amplitudes == pytest.approx(np.array([1, 1j]) / math.sqrt(2))


def test_equal_residues_give_identical_amplitudes():
    p = HashParams(q=16, d=2, m=1, s=((0, 3),))
    a = qudit_hash_state(p, 1, 5).amplitudes
    b = QuditState.from_phases(16, [0, 15 + 16]).amplitudes
    assert np.array_equal(a, b)


def test_qudit_index_is_one_based():
    p = HashParams(q=16, d=2, m=2, s=((0, 3), (0, 5)))
    qudit_hash_state(p, 2, 1)
    with pytest.raises(ValueError):
        qudit_hash_state(p, 0, 1)
    with pytest.raises(ValueError):
        qudit_hash_state(p, 3, 1)
    with pytest.raises(ValueError):
        qudit_hash_state(p, 1, 16)


@settings(max_examples=40)
@given(params_st(max_q=32, max_d=3, max_m=3), st.data())
def test_hash_fidelity_matches_statevector_oracle(p, data):
    x1 = data.draw(st.integers(0, p.q - 1))
    x2 = data.draw(st.integers(0, p.q - 1))
    expect = oracles.fidelity(p.s, p.q, x1, x2)
    assert hash_fidelity(p, x1, x2) == pytest.approx(expect, abs=1e-12)
    h1, h2 = quantum_hash(p, x1), quantum_hash(p, x2)
    assert h1.fidelity(h2) == pytest.approx(expect, abs=1e-12)
    vec = np.vdot(h1.statevector(), h2.statevector())
    assert abs(vec) ** 2 == pytest.approx(expect, abs=1e-12)


@given(params_st(), st.data())
def test_fidelity_bounds_and_symmetry(p, data):
    x1 = data.draw(st.integers(0, p.q - 1))
    x2 = data.draw(st.integers(0, p.q - 1))
    f = hash_fidelity(p, x1, x2)
    assert -1e-15 <= f <= 1 + 1e-12
    assert f == pytest.approx(hash_fidelity(p, x2, x1), abs=1e-15)
    assert hash_fidelity(p, x1, x1) == pytest.approx(1.0, abs=1e-12)
    # only the difference matters
    assert f == pytest.approx(hash_fidelity(p, (x1 - x2) % p.q, 0), abs=1e-12)


@given(params_st(max_q=64))
def test_worst_case_matches_oracle(p):
    x_star, f = worst_case_collision(p)
    assert f == pytest.approx(oracles.worst_case(p.s, p.q), abs=1e-12)
    prof = collision_profile(p)
    assert prof[x_star - 1] == f
    assert np.all(prof[: x_star - 1] < f - 1e-12)


@given(params_st(), st.data())
def test_unit_multiplier_symmetry(p, data):
    units = [u for u in range(1, p.q) if math.gcd(u, p.q) == 1]
    u = data.draw(st.sampled_from(units))
    scaled = HashParams.from_rows(p.q, [[(u * s) % p.q for s in row] for row in p.s])
    assert worst_case_collision(scaled)[1] == pytest.approx(worst_case_collision(p)[1], abs=1e-12)


def test_row_fidelities_shape_and_values():
    rows = np.array([[0, 1], [0, 128]])
    out = row_fidelities(rows, 256)
    assert out.shape == (2, 255)
    assert out[1, 1] == pytest.approx(1.0)  # x = 2
    assert out[0, 127] == pytest.approx(0.0, abs=1e-15)  # x = 128


def test_d2_m1_table_entry():
    # best single qubit row over Z_256 is a unit, worst case at x = 1
    p = HashParams(q=256, d=2, m=1, s=((0, 1),))
    assert worst_case_collision(p) == (1, pytest.approx(math.cos(math.pi / 256) ** 2, abs=1e-15))
    assert round(worst_case_collision(p)[1], 4) == 0.9998
