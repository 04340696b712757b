import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sca_anneal.dynamics import (
    ChainState,
    EngineKind,
    EngineSpec,
    anneal,
    anneal_many,
    auto_pinning,
    epsilon_sca_flip_prob,
    epsilon_sca_local_prob,
    epsilon_sca_step,
    glauber_local_prob,
    glauber_step,
    initial_state,
    sca_local_prob,
    sca_step,
    step,
)
from sca_anneal.errors import ConfigurationError, InvalidInputError
from sca_anneal.model import IsingModel, energies, energy
from sca_anneal.schedules import exponential
from sca_anneal.theory import build_exact_kernel, config_index

from conftest import random_config, random_model

# 1 / (1 + e^-2) and its square / complement, evaluated at 30 digits with mpmath
P_E2 = 0.880797077977882444
P_E2_SQ = 0.775803492574375927
P_E2_COMP = 0.119202922022117556


def _single_site(h1):
    return IsingModel.from_couplings(1, {}, [h1])


def test_sca_local_prob_examples(ferro2):
    m = random_model(4, 0)
    s = random_config(4, np.random.default_rng(0))
    assert sca_local_prob(m, s, 2, 0.7, 0.0, 1) == 0.5
    assert sca_local_prob(m, s, 2, 0.7, 0.0, -1) == 0.5
    # beta=2, q=0, cavity field 1
    assert sca_local_prob(ferro2, [1, 1], 0, 0.0, 2.0, 1) == pytest.approx(P_E2, abs=1e-15)
    probs = [sca_local_prob(ferro2, [1, 1], 0, 0.0, b, 1) for b in (1, 5, 20, 100, 1e4)]
    assert all(b >= a for a, b in zip(probs, probs[1:]))
    assert probs[-1] == 1.0


def test_local_prob_preconditions(ferro2):
    with pytest.raises(InvalidInputError):
        sca_local_prob(ferro2, [1, 1], 0, 0.0, -1.0, 1)
    with pytest.raises(InvalidInputError):
        sca_local_prob(ferro2, [1, 1], 0, -0.1, 1.0, 1)
    with pytest.raises(InvalidInputError):
        sca_local_prob(ferro2, [1, 1], 0, 0.0, 1.0, 0)


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(1, 12),
    seed=st.integers(0, 2**32 - 1),
    q=st.floats(0, 50),
    beta=st.floats(0, 100),
)
def test_sca_local_prob_normalised(n, seed, q, beta):
    m = random_model(n, seed)
    rng = np.random.default_rng(seed)
    s = random_config(n, rng)
    x = int(rng.integers(n))
    total = sca_local_prob(m, s, x, q, beta, 1) + sca_local_prob(m, s, x, q, beta, -1)
    assert abs(total - 1) <= 1e-14


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), beta=st.floats(0, 20), qs=st.lists(st.floats(0, 30), min_size=2, max_size=6))
def test_sca_pinning_monotone_stay_probability(seed, beta, qs):
    m = random_model(5, seed)
    rng = np.random.default_rng(seed)
    s = random_config(5, rng)
    x = int(rng.integers(5))
    stay = [sca_local_prob(m, s, x, q, beta, int(s[x])) for q in sorted(qs)]
    assert all(b >= a - 1e-15 for a, b in zip(stay, stay[1:]))


def test_epsilon_sca_flip_prob_examples(ferro2):
    m = random_model(5, 1)
    s = random_config(5, np.random.default_rng(1))
    assert epsilon_sca_flip_prob(m, s, 3, 0.0) == 0.5
    assert epsilon_sca_flip_prob(ferro2, [1, 1], 0, 2.0) == pytest.approx(P_E2_COMP, abs=1e-15)
    assert epsilon_sca_flip_prob(ferro2, [1, 1], 0, 500.0) < 1e-200
    assert epsilon_sca_local_prob(ferro2, [1, 1], 0, 0.5, 2.0, -1) == pytest.approx(P_E2_COMP / 2, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), beta=st.floats(0, 30))
def test_flip_prob_is_q0_sca_prob_of_opposite_spin(n, seed, beta):
    m = random_model(n, seed)
    rng = np.random.default_rng(seed)
    s = random_config(n, rng)
    x = int(rng.integers(n))
    assert epsilon_sca_flip_prob(m, s, x, beta) == pytest.approx(
        sca_local_prob(m, s, x, 0.0, beta, -int(s[x])), abs=1e-15
    )


def test_glauber_local_prob_example():
    m = _single_site(1.0)
    assert glauber_local_prob(m, [-1], 0, 1.0, 1) == pytest.approx(P_E2, abs=1e-15)


def test_sca_step_beta0_is_uniform():
    m = random_model(3, 2)
    state = ChainState(np.tile(np.array([1, -1, 1], dtype=np.int8), (200_000, 1)), np.random.default_rng(5))
    out = sca_step(m, state, np.full(3, 2.0), 0.0)
    counts = np.bincount([config_index(c) for c in out.config[:20000]], minlength=8)
    # uniform over 8 outcomes: binomial sd = sqrt(n p (1-p))
    sd = math.sqrt(20000 * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - 2500) < 4 * sd)
    assert out.step_index == 1


def test_sca_huge_pinning_freezes():
    m = random_model(6, 3)
    st0 = initial_state(m, 11)
    nxt = sca_step(m, st0, np.full(6, 1e6), 1.0)
    np.testing.assert_array_equal(nxt.config, st0.config)


def test_epsilon_small_freezes():
    m = random_model(6, 3)
    st0 = initial_state(m, 12)
    nxt = epsilon_sca_step(m, st0, 1e-12, 1.0)
    np.testing.assert_array_equal(nxt.config, st0.config)
    with pytest.raises(InvalidInputError):
        epsilon_sca_step(m, st0, 0.0, 1.0)


def _empirical_matches_kernel(model, spec, sigma, n_samples, seed):
    K = build_exact_kernel(model, spec, 0.8).matrix
    row = K[config_index(sigma)]
    state = ChainState(np.tile(np.asarray(sigma, dtype=np.int8), (n_samples, 1)), np.random.default_rng(seed))
    out = step(model, state, spec, 0.8)
    bits = (out.config > 0).astype(np.int64) @ (1 << np.arange(model.num_vertices))
    counts = np.bincount(bits, minlength=row.size)
    sd = np.sqrt(n_samples * row * (1 - row))
    return np.all(np.abs(counts - n_samples * row) <= 4 * sd + 1e-9)


@pytest.mark.parametrize(
    "spec_factory",
    [lambda m: EngineSpec.sca(auto_pinning(m)), lambda m: EngineSpec.sca(np.zeros(m.num_vertices)),
     lambda m: EngineSpec.epsilon_sca(0.4)],
)
def test_parallel_step_matches_exact_kernel(spec_factory):
    m = random_model(4, 21)
    spec = spec_factory(m)
    sigma = np.array([1, -1, -1, 1])
    assert _empirical_matches_kernel(m, spec, sigma, 1_000_000, 3)


def test_sca_two_spin_joint_probability(ferro2):
    state = ChainState(np.tile(np.array([1, 1], dtype=np.int8), (400_000, 1)), np.random.default_rng(9))
    out = sca_step(ferro2, state, np.zeros(2), 2.0)
    freq = np.mean(np.all(out.config == 1, axis=1))
    sd = math.sqrt(P_E2_SQ * (1 - P_E2_SQ) / 400_000)
    assert abs(freq - P_E2_SQ) < 4 * sd


def test_glauber_step_changes_at_most_one_site():
    m = random_model(8, 4)
    state = initial_state(m, 0)
    for t in range(300):
        nxt = glauber_step(m, state, 0.5 + t / 100)
        assert np.count_nonzero(nxt.config != state.config) <= 1
        state = nxt


def test_glauber_beta0_uniform_spin():
    m = _single_site(3.0)
    state = initial_state(m, 1)
    ups = 0
    for _ in range(20000):
        state = glauber_step(m, state, 0.0)
        ups += state.config[0] == 1
    assert abs(ups - 10000) < 4 * math.sqrt(20000 * 0.25)


def test_glauber_single_site_heat_bath():
    m = _single_site(1.0)
    state = initial_state(m, 2)
    ups = 0
    for _ in range(40000):
        state = glauber_step(m, state, 1.0)
        ups += state.config[0] == 1
    assert abs(ups / 40000 - P_E2) < 4 * math.sqrt(P_E2 * (1 - P_E2) / 40000)


def test_engine_spec_validation():
    with pytest.raises(ConfigurationError):
        EngineSpec.sca(None)
    with pytest.raises(ConfigurationError):
        EngineSpec.sca([-1.0, 0.0])
    with pytest.raises(ConfigurationError):
        EngineSpec.epsilon_sca(0.0)
    with pytest.raises(ConfigurationError):
        EngineSpec.epsilon_sca(1.5)
    with pytest.raises(ConfigurationError):
        EngineSpec(EngineKind.GLAUBER, epsilon=0.5)
    m = random_model(3, 0)
    with pytest.raises(ConfigurationError):
        EngineSpec.sca([1.0, 1.0]).validate(m)
    np.testing.assert_array_equal(EngineSpec.sca(0.5).pinning_for(m), [0.5, 0.5, 0.5])


ENGINES = [
    lambda m: EngineSpec.glauber(),
    lambda m: EngineSpec.sca(auto_pinning(m)),
    lambda m: EngineSpec.epsilon_sca(0.35),
]


@pytest.mark.parametrize("make_spec", ENGINES)
@pytest.mark.parametrize("dense", [True, False])
def test_anneal_many_reproduces_single_steps(make_spec, dense):
    m = random_model(7, 5) if dense else random_model(20, 5, density=0.1)
    assert m.prefers_dense == dense
    spec = make_spec(m)
    sched = exponential(0.05, 0.01)
    seeds = [3, 17, 29]
    recs = anneal_many(m, spec, sched, 150, seeds, record_trace=True)
    for seed, rec in zip(seeds, recs):
        state = initial_state(m, seed)
        visited = [state.config.copy()]
        for t in range(150):
            state = step(m, state, spec, sched(t))
            visited.append(state.config.copy())
        E = energies(m, np.array(visited))
        np.testing.assert_array_equal(rec.final_config, state.config)
        np.testing.assert_allclose(rec.trace, E, atol=1e-9)
        first = int(np.argmin(E))
        assert rec.best_step == first
        np.testing.assert_array_equal(rec.best_config, visited[first])
        assert rec.min_energy == pytest.approx(E.min(), abs=1e-12)


@pytest.mark.parametrize("make_spec", ENGINES)
def test_one_step_anneal_sees_initial_and_next(make_spec):
    m = random_model(6, 8)
    spec = make_spec(m)
    sched = exponential(1e-9, 1e-3)
    rec = anneal(m, spec, sched, 1, 42)
    state = initial_state(m, 42)
    e0 = energy(m, state.config)
    e1 = energy(m, step(m, state, spec, sched(0)).config)
    assert rec.min_energy == min(e0, e1)


@pytest.mark.parametrize("make_spec", ENGINES)
def test_ferromagnet_pair_reaches_ground_state(make_spec, ferro2):
    spec = make_spec(ferro2)
    recs = anneal_many(ferro2, spec, exponential(), 1000, list(range(100)))
    hits = sum(r.min_energy == -1 for r in recs)
    assert hits >= 99


def test_anneal_is_deterministic():
    m = random_model(10, 9)
    spec = EngineSpec.epsilon_sca(0.5)
    a = anneal(m, spec, exponential(), 500, 7, record_trace=True)
    b = anneal(m, spec, exponential(), 500, 7, record_trace=True)
    assert a.min_energy == b.min_energy and a.best_step == b.best_step
    np.testing.assert_array_equal(a.trace, b.trace)
    np.testing.assert_array_equal(a.final_config, b.final_config)


def test_trial_results_do_not_depend_on_batch():
    m = random_model(9, 10, density=0.5, integer=True)
    spec = EngineSpec.epsilon_sca(0.6)
    together = anneal_many(m, spec, exponential(), 300, [1, 2, 3, 4])
    alone = [anneal(m, spec, exponential(), 300, s) for s in [1, 2, 3, 4]]
    for a, b in zip(together, alone):
        np.testing.assert_array_equal(a.best_config, b.best_config)
        assert a.best_step == b.best_step


def test_sweeps_per_step_applies_kernel_k_times():
    m = random_model(5, 11)
    spec = EngineSpec.sca(auto_pinning(m))
    sched = exponential(0.1, 0.01)
    rec = anneal(m, spec, sched, 20, 4, sweeps_per_step=3, record_trace=True)
    state = initial_state(m, 4)
    for t in range(20):
        for _ in range(3):
            state = step(m, state, spec, sched(t))
    np.testing.assert_array_equal(rec.final_config, state.config)
    assert rec.trace.shape == (61,)


def test_zero_temperature_limit_is_finite():
    m = random_model(6, 12, integer=True)
    sched = exponential(1e-3, 0.5)  # overflows to beta = inf after ~1400 steps
    for spec in (EngineSpec.glauber(), EngineSpec.sca(auto_pinning(m)), EngineSpec.epsilon_sca(0.5)):
        rec = anneal(m, spec, sched, 2000, 0, record_trace=True)
        assert np.all(np.isfinite(rec.trace))


def test_min_energy_matches_recompute():
    m = random_model(12, 13)
    for spec in (EngineSpec.glauber(), EngineSpec.sca(auto_pinning(m)), EngineSpec.epsilon_sca(0.5)):
        for rec in anneal_many(m, spec, exponential(), 2000, range(5)):
            assert abs(rec.min_energy - energy(m, rec.best_config)) <= 1e-9


def test_anneal_preconditions():
    m = random_model(3, 0)
    with pytest.raises(InvalidInputError):
        anneal(m, EngineSpec.glauber(), exponential(), 0, 1)
    with pytest.raises(InvalidInputError):
        anneal(m, EngineSpec.glauber(), exponential(), 5, 1, sweeps_per_step=0)
