import itertools

import numpy as np
import pytest
from netgen import enumerate_closed, random_graph, random_grid

from pitnet.contraction import (
    ContractionError,
    ContractionMemoryError,
    Engine,
    EnvironmentCache,
    LayeredNetwork,
    ZeroNormError,
    _shapes,
    bmps_contract,
    contract_closed,
    double_layer,
    expectations,
    greedy_plan,
    layered_double,
    mem_limit_bytes,
    sandwich,
)
from pitnet.ite import apply_ite, build_hamiltonian, solve, SolverConfig
from pitnet.mining import MineInstance, brute_force_oracle, build_mining_network, generate_instance
from pitnet.network import LocalConstraint, amplitude_table, build_network
from pitnet.tensor import Tensor, TruncationPolicy

UNBOUNDED = TruncationPolicy(rel_threshold=0.0)


def value(pair):
    v, l = pair
    return v * np.exp(l)


def evolved(width, depth, seed, tau=2.0):
    inst = generate_instance(width, depth, seed)
    return apply_ite(build_mining_network(inst), build_hamiltonian(inst), tau)


def test_dot_product():
    a = Tensor(("i",), np.array([1.0, 2.0]))
    b = Tensor(("i",), np.array([3.0, 4.0]))
    assert value(contract_closed([a, b])) == pytest.approx(11.0)


def test_parity_norm_is_four():
    net = build_network(3, [LocalConstraint((0, 1, 2), ["001", "010", "100", "111"])])
    assert value(contract_closed(double_layer(net))) == pytest.approx(4.0, rel=1e-14)
    assert value(contract_closed(double_layer(net, prune=True))) == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_double_layer_is_sum_of_squares(seed):
    net = evolved(3, 2, seed)
    ref = float(np.sum(amplitude_table(net) ** 2))
    assert value(contract_closed(double_layer(net))) * np.exp(2 * net.log_scale) == pytest.approx(ref, rel=1e-10)


def test_sandwich_inserts_operator():
    t = Tensor(("x", "b"), np.array([[1.0, 2.0], [3.0, 4.0]]))
    s = sandwich(t, {"x": (1.0, -1.0)})
    assert s.labels == ("b",) and s.dims == (4,)
    assert np.allclose(s.data.reshape(2, 2), t.data.T @ np.diag([1.0, -1.0]) @ t.data)


@pytest.mark.parametrize("width,depth", [(3, 2), (4, 2), (5, 3)])
@pytest.mark.parametrize("seed", range(3))
def test_unbounded_bmps_matches_greedy(width, depth, seed):
    for tau in (0.5, 6.0):
        layered = layered_double(evolved(width, depth, seed, tau))
        ref = value(contract_closed(layered.tensors))
        assert value(bmps_contract(layered, UNBOUNDED)) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_random_networks_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    ts = random_graph(rng, int(rng.integers(1, 9)))
    ref = enumerate_closed(ts)
    assert value(contract_closed(ts)) == pytest.approx(ref, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("seed", range(20))
def test_random_grids_bmps_matches_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    rows = random_grid(rng, 3, 3)
    ref = enumerate_closed([t for r in rows for t in r])
    assert value(bmps_contract(LayeredNetwork(rows), UNBOUNDED)) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_plan_consumes_every_bond_once(seed):
    rng = np.random.default_rng(seed)
    ts = random_graph(rng, 8)
    plan = greedy_plan(_shapes(ts))
    nodes = {i: set(t.labels) for i, t in enumerate(ts)}
    consumed = []
    nxt = len(ts)
    for a, b in plan.steps:
        sa, sb = nodes.pop(a), nodes.pop(b)
        shared = sa & sb
        assert shared, "plan contracted two unconnected nodes"
        consumed.extend(shared)
        nodes[nxt] = sa ^ sb
        nxt += 1
    all_bonds = {l for t in ts for l in t.labels}
    assert sorted(consumed) == sorted(all_bonds)
    assert all(not s for s in nodes.values())
    assert plan.final_ids() == sorted(nodes)


def test_log_scale_tracks_prescaling():
    ts = double_layer(evolved(5, 3, 0, tau=6.0))
    base = value(contract_closed(ts))
    ts[3] = ts[3].scale(1e-200)
    v, l = contract_closed(ts)
    assert l < -400 and v * np.exp(l + 200 * np.log(10)) == pytest.approx(base, rel=1e-12)


def test_large_tau_stays_finite():
    v, l = contract_closed(double_layer(evolved(7, 4, 1, tau=200.0)))
    assert np.isfinite(v) and np.isfinite(l) and v > 0


@pytest.mark.parametrize("seed", range(6))
def test_truncation_error_non_increasing_in_chi(seed):
    layered = layered_double(evolved(7, 4, seed, tau=0.5))
    exact = value(contract_closed(layered.tensors))
    errs = [abs(value(bmps_contract(layered, TruncationPolicy(max_bond=k, rel_threshold=0.0))) - exact)
            for k in range(1, 5)]
    assert all(b <= a * (1 + 1e-9) + 1e-12 * exact for a, b in zip(errs, errs[1:]))


def test_environments_match_full_contraction():
    net = evolved(5, 3, 3, tau=1.5)
    ref = expectations(net, Engine("exact"), (1.0, -1.0))
    got = expectations(net, Engine("bmps"), (1.0, -1.0))
    assert np.allclose(got, ref, atol=1e-8, rtol=0)


def test_identity_environment_reproduces_norm():
    net = evolved(7, 4, 2)
    cache = EnvironmentCache(net, UNBOUNDED)
    for v in range(net.n_vars):
        assert cache.expectation(v, (1.0, 1.0)) == pytest.approx(1.0, abs=1e-9)
    nv, nl = cache.norm
    for v in range(net.n_vars):
        mv, ml = cache.norm_at(v)
        assert mv * np.exp(ml - nl) == pytest.approx(nv, rel=1e-9)


def test_single_block_environment_is_trivial():
    net = build_mining_network(MineInstance(np.array([[1.0]])))
    cache = EnvironmentCache(net, UNBOUNDED)
    assert cache.top == [None] and cache.bottom == [None]
    assert cache.expectation(0, (1.0, -1.0)) == pytest.approx(0.0)


def test_zero_norm_is_reported():
    with pytest.warns(UserWarning):
        net = build_network(2, [LocalConstraint((0, 1), [])])
    with pytest.raises(ZeroNormError):
        expectations(net, Engine("exact"), (1.0, -1.0))


def test_memory_ceiling_aborts_exact():
    ts = double_layer(evolved(7, 4, 0))
    with pytest.raises(ContractionMemoryError, match="bmps"):
        contract_closed(ts, mem_limit=64)


def test_memory_ceiling_from_environment(monkeypatch):
    monkeypatch.setenv("PITNET_MEM_LIMIT_BYTES", "64")
    assert mem_limit_bytes() == 64
    with pytest.raises(ContractionMemoryError):
        contract_closed(double_layer(evolved(5, 3, 0)))
    for bad in ("lots", "-5"):
        monkeypatch.setenv("PITNET_MEM_LIMIT_BYTES", bad)
        with pytest.raises(ContractionError):
            mem_limit_bytes()
    monkeypatch.delenv("PITNET_MEM_LIMIT_BYTES")
    assert mem_limit_bytes() == 2 * 1024 ** 3


def test_layered_network_validation():
    a = Tensor(("x",), np.ones(2))
    with pytest.raises(ContractionError):
        LayeredNetwork([[a]])
    with pytest.raises(ContractionError):
        LayeredNetwork([[a], [Tensor(("y",), np.ones(2))], [Tensor(("x", "y"), np.ones((2, 2)))]])


def test_not_closed_is_rejected():
    with pytest.raises(ContractionError):
        contract_closed([Tensor(("x",), np.ones(2))])


def test_engine_names_round_trip():
    for name in ("exact", "exact+prune", "bmps", "bmps:2", "bmps:17"):
        assert Engine.parse(name).name == name
    for bad in ("dmrg", "bmps:x", "bmps:0"):
        with pytest.raises(ValueError):
            Engine.parse(bad)


def _decodes_optimum(inst):
    got = solve(inst, SolverConfig(tau=30.0, engine=Engine("bmps", 1))).solution
    return got.assignment == brute_force_oracle(inst).assignment


def test_chi_one_decodes_when_partial_and_global_optima_agree():
    # all-profitable and all-costly pits: every row's best partial pit is
    # the restriction of the global optimum, so rank-one boundaries suffice
    for seed in range(5):
        w = np.abs(generate_instance(7, 4, seed).weights) + 0.2
        assert _decodes_optimum(MineInstance(w))
        assert _decodes_optimum(MineInstance(-w))
    assert _decodes_optimum(MineInstance(np.array([[-1.0, -1.0, -1.0], [0.0, 4.0, 0.0]])))


def test_bmps_bond_dimension_respects_cap():
    rep = solve(generate_instance(9, 5, 0), SolverConfig(engine=Engine("bmps", 2)))
    assert rep.sweep.max_bond <= 2
    assert all(d <= 2 for d in itertools.chain.from_iterable(rep.sweep.bond_history))
