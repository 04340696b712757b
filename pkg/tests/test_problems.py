import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sca_anneal.errors import InvalidInputError
from sca_anneal.model import IsingModel, energies, energy
from sca_anneal.problems import (
    InstanceArtifact,
    cut_value,
    decode_tour,
    encode_tour,
    format_instance,
    gen_bernoulli_spin_glass,
    gen_gaussian_spin_glass,
    gen_max_cut,
    gen_tsp,
    parse_instance,
    read_instance,
    regenerate,
    tour_length,
    tsp_model,
    write_instance,
)
from sca_anneal.theory import all_configs, brute_force_ground_states


def _same_model(a: IsingModel, b: IsingModel):
    assert a.num_vertices == b.num_vertices
    np.testing.assert_array_equal(a.J.indptr, b.J.indptr)
    np.testing.assert_array_equal(a.J.indices, b.J.indices)
    np.testing.assert_array_equal(a.J.data, b.J.data)
    np.testing.assert_array_equal(a.h, b.h)


def test_gaussian_structure():
    art = gen_gaussian_spin_glass(2, 0)
    assert art.model.num_edges == 1
    np.testing.assert_array_equal(art.model.h, [0, 0])
    big = gen_gaussian_spin_glass(100, 1).model
    assert big.num_edges == 4950
    vals = np.array(list(big.couplings.values()))
    assert abs(vals.mean()) < 4 / math.sqrt(4950)


@pytest.mark.parametrize("n", [2, 7, 40])
def test_complete_families_have_all_pairs(n):
    for art in (gen_gaussian_spin_glass(n, 3), gen_bernoulli_spin_glass(n, 0.3, 3)):
        m = art.model
        assert m.num_edges == n * (n - 1) // 2
        assert (m.J != m.J.T).nnz == 0
        assert not m.h.any()


def test_bernoulli_extremes():
    m = gen_bernoulli_spin_glass(6, 1.0, 0).model
    assert set(m.couplings.values()) == {1.0}
    gs = brute_force_ground_states(m)
    assert gs.min_energy == -15
    assert sorted(gs.indices) == [0, 63]
    assert set(gen_bernoulli_spin_glass(6, 0.0, 0).model.couplings.values()) == {-1.0}


def test_bernoulli_aligned_energy_scale():
    m = gen_bernoulli_spin_glass(100, 0.8, 0).model
    e = energy(m, np.ones(100))
    # mean -0.6 * 4950, sd 2 sqrt(4950 * 0.8 * 0.2)
    sd = 2 * math.sqrt(4950 * 0.16)
    assert abs(e + 2970) < 5 * sd
    # same order of magnitude as the reported ground state -2944
    assert 0.5 < e / -2944 < 2


def test_max_cut_triangle():
    m = gen_max_cut(3, 1.0, 0).model
    E = energies(m, all_configs(3))
    assert E.min() == -1
    minority = np.abs(all_configs(3).sum(axis=1)) == 1
    np.testing.assert_array_equal(E == -1, minority)
    s = all_configs(3)[np.argmin(E)]
    assert cut_value(m, s) == 2 == (m.num_edges - E.min()) / 2


def test_max_cut_empty():
    m = gen_max_cut(5, 0.0, 0).model
    assert m.num_edges == 0
    assert not energies(m, all_configs(5)).any()


@pytest.mark.parametrize("n,p,seed", [(4, 0.5, 0), (8, 0.3, 1), (12, 0.6, 2)])
def test_cut_identity_exhaustive(n, p, seed):
    m = gen_max_cut(n, p, seed).model
    S = all_configs(n)
    E = energies(m, S)
    cuts = np.array([cut_value(m, s) for s in S])
    np.testing.assert_array_equal(cuts, (m.num_edges - E) / 2)


def test_generator_preconditions():
    with pytest.raises(InvalidInputError):
        gen_gaussian_spin_glass(1, 0)
    with pytest.raises(InvalidInputError):
        gen_bernoulli_spin_glass(5, 1.5, 0)
    with pytest.raises(InvalidInputError):
        gen_max_cut(20001, 0.1, 0)
    with pytest.raises(InvalidInputError):
        gen_tsp(2, 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(2, 30), p=st.floats(0, 1))
def test_generators_are_seed_deterministic(seed, n, p):
    for make in (
        lambda: gen_gaussian_spin_glass(n, seed),
        lambda: gen_bernoulli_spin_glass(n, p, seed),
        lambda: gen_max_cut(n, p, seed),
    ):
        a, b = make(), make()
        _same_model(a.model, b.model)
        _same_model(regenerate(a).model, a.model)


def test_tsp_sizes_and_parameters():
    art = gen_tsp(10, 0)
    assert art.model.num_vertices == 100
    t = art.tsp
    assert t.penalty_a == t.distances.max()
    assert t.tour_weight_b == 1
    off = ~np.eye(10, dtype=bool)
    assert t.distances[off].min() >= 1 and t.distances.max() <= 100
    assert np.all(t.distances == np.round(t.distances))


def test_tsp_three_cities_all_tours_equal():
    art = gen_tsp(3, 5)
    d = art.tsp.distances
    Es = set()
    for tour in itertools.permutations(range(3)):
        dec = decode_tour(art.tsp, encode_tour(art.tsp, tour))
        assert dec.length == d[0, 1] + d[1, 2] + d[0, 2]
        Es.add(energy(art.model, encode_tour(art.tsp, tour)))
    assert len(Es) == 1


@pytest.mark.parametrize("n,seed", [(3, 0), (4, 1), (5, 2)])
def test_tsp_energy_is_affine_in_length(n, seed):
    art = gen_tsp(n, seed)
    t = art.tsp
    consts = set()
    for tour in itertools.permutations(range(n)):
        s = encode_tour(t, tour)
        E = energy(art.model, s)
        consts.add(E - t.tour_weight_b * tour_length(t, tour))
        assert E + t.energy_offset == t.tour_weight_b * tour_length(t, tour)
    assert len(consts) == 1


def test_tsp_qubo_offset_matches_direct_evaluation():
    art = gen_tsp(4, 9)
    t = art.tsp
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = np.where(rng.random(16) < 0.3, 1, -1)
        x = ((s + 1) // 2).reshape(4, 4)
        penalty = ((1 - x.sum(axis=1)) ** 2).sum() + ((1 - x.sum(axis=0)) ** 2).sum()
        tour = sum(
            t.distances[u, v] * x[u, j] * x[v, (j + 1) % 4]
            for j in range(4) for u in range(4) for v in range(4) if u != v
        )
        assert energy(art.model, s) + t.energy_offset == t.penalty_a * penalty + t.tour_weight_b * tour


def test_decode_examples():
    art = gen_tsp(5, 3)
    t = art.tsp
    dec = decode_tour(t, encode_tour(t, range(5)))
    assert dec.valid and dec.tour == (0, 1, 2, 3, 4)
    assert dec.length == sum(t.distances[i, (i + 1) % 5] for i in range(5))
    bad = decode_tour(t, -np.ones(25, dtype=int))
    assert not bad.valid and len(bad.violations) == 10
    with pytest.raises(InvalidInputError):
        decode_tour(t, np.ones(24))


@pytest.mark.parametrize("n,seed", [(3, 4), (4, 5), (5, 6)])
def test_single_flip_penalty(n, seed):
    art = gen_tsp(n, seed)
    t = art.tsp
    penalty_only, _ = tsp_model(n, t.distances, t.penalty_a, 0.0)
    worst_tour_drop = 2 * t.distances.max() * t.tour_weight_b
    for tour in itertools.permutations(range(n)):
        s = encode_tour(t, tour)
        for i in range(n * n):
            f = s.copy()
            f[i] = -f[i]
            assert energy(penalty_only, f) - energy(penalty_only, s) == 2 * t.penalty_a
            assert energy(art.model, f) - energy(art.model, s) >= 2 * t.penalty_a - worst_tour_drop


def test_round_trip_exact_doubles(tmp_path):
    art = gen_gaussian_spin_glass(12, 7)
    path = tmp_path / "g.txt"
    write_instance(art, path)
    back = read_instance(path)
    _same_model(back.model, art.model)
    assert back.metadata == art.metadata
    _same_model(regenerate(back).model, art.model)


def test_round_trip_with_fields_and_tsp():
    m = IsingModel.from_couplings(3, {(0, 2): 0.1, (1, 2): -1e-300}, [0.0, 1 / 3, -2.0])
    back = parse_instance(format_instance(InstanceArtifact(m, "custom", {}, None)))
    _same_model(back.model, m)
    assert back.seed is None
    art = gen_tsp(4, 2)
    back = parse_instance(format_instance(art))
    _same_model(back.model, art.model)
    np.testing.assert_array_equal(back.tsp.distances, art.tsp.distances)
    assert back.tsp.energy_offset == art.tsp.energy_offset
    assert format_instance(back) == format_instance(art)


@pytest.mark.parametrize(
    "text,where",
    [
        ("J 0 1 1\n", "missing"),
        ("ising 2\nJ 0 1 x\n", ":2:"),
        ("ising 2\nQ 0 1\n", ":2:"),
        ("ising 2\nJ 0 1 1\nJ 1 0 2\n", ":3:"),
        ("ising 2\nising 3\n", ":2:"),
    ],
)
def test_parse_errors_name_the_line(text, where):
    with pytest.raises(InvalidInputError, match=where):
        parse_instance(text, source="inst.txt")


def test_parse_rejects_invalid_model():
    with pytest.raises(InvalidInputError):
        parse_instance("ising 2\nJ 0 5 1\n")
    with pytest.raises(InvalidInputError):
        parse_instance("ising 2\nJ 1 1 1\n")
