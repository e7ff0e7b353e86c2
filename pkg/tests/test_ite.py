from dataclasses import replace

import numpy as np
import pytest

from pitnet.contraction import Engine
from pitnet.ite import (
    ConfigError,
    DiagonalHamiltonian,
    ITEOverflowError,
    SolverConfig,
    apply_ite,
    build_hamiltonian,
    decode,
    decode_assignment,
    measure_all,
    measure_energy,
    measure_site,
    solve,
    suggest_tau,
)
from pitnet.mining import MineInstance, brute_force_oracle, build_mining_network, generate_instance
from pitnet.network import LocalConstraint, amplitude_table, build_network

ENGINES = [Engine("exact"), Engine("exact", prune=True), Engine("bmps"), Engine("bmps", 2)]


def one_block(w):
    return MineInstance(np.array([[float(w)]]))


def test_hamiltonian_from_weights():
    H = build_hamiltonian(MineInstance(np.array([[2.0]])))
    assert H.e0.tolist() == [0.0] and H.e1.tolist() == [-2.0]
    assert H.energy([1]) == -2.0 and H.shifted(3).energy([1]) == 1.0
    with pytest.raises(ConfigError):
        DiagonalHamiltonian([0.0], [0.0, 1.0])


def test_zero_weights_leave_state_unchanged():
    inst = MineInstance(np.zeros((2, 3)))
    net = build_mining_network(inst)
    before = amplitude_table(net)
    after = amplitude_table(apply_ite(net, build_hamiltonian(inst), 3.0))
    assert np.allclose(after / after.max(), before / before.max())


def test_small_tau_is_nearly_identity():
    inst = generate_instance(3, 2, 0)
    net = build_mining_network(inst)
    after = amplitude_table(apply_ite(net, build_hamiltonian(inst), 1e-9))
    assert np.allclose(after / after.max(), amplitude_table(net), atol=1e-8)


@pytest.mark.parametrize("w,tau", [(0.7, 1.0), (1.0, 6.0), (2.0, 10.0)])
def test_single_site_ratio(w, tau):
    net = build_network(1, [])
    H = DiagonalHamiltonian.from_weights([w])
    table = amplitude_table(apply_ite(net, H, tau))
    assert table[1] / table[0] == pytest.approx(np.exp(tau * w), rel=1e-12)


def test_ite_concentrates_on_optimum():
    inst = generate_instance(3, 2, 1)
    best = brute_force_oracle(inst)
    table = amplitude_table(apply_ite(build_mining_network(inst), build_hamiltonian(inst), 20.0))
    assert np.unravel_index(np.argmax(table), table.shape) == best.assignment


def test_ite_overflow_is_reported():
    H = DiagonalHamiltonian.from_weights([1e3])
    with pytest.raises(ITEOverflowError):
        apply_ite(build_network(1, []), H, 10.0)


def test_apply_ite_validates():
    net = build_network(2, [])
    with pytest.raises(ConfigError):
        apply_ite(net, DiagonalHamiltonian.from_weights([1.0]), 1.0)
    with pytest.raises(ConfigError):
        apply_ite(net, DiagonalHamiltonian.from_weights([1.0, 1.0]), 0.0)


@pytest.mark.parametrize("engine", ENGINES, ids=lambda e: e.name)
def test_measure_eigenstates(engine):
    # a constraint x0 == 1 and x1 == 0 pins the state
    net = build_network(2, [LocalConstraint((0, 1), [(1, 0)])])
    net = replace(net, layout=((0, 0), (1, 0), (0, 1)))
    assert measure_site(net, 0, engine) == pytest.approx(-1.0)
    assert measure_site(net, 1, engine) == pytest.approx(1.0)


def test_degenerate_free_site():
    net = build_network(1, [])
    assert measure_site(net, 0, a=1.1) == pytest.approx(0.05)
    assert measure_site(net, 0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("w,bit", [(1.0, 1), (-1.0, 0)])
def test_decode_single_block(w, bit):
    inst = one_block(w)
    net = apply_ite(build_mining_network(inst), build_hamiltonian(inst), 6.0)
    assert decode(net, SolverConfig(), inst).assignment == (bit,)


@pytest.mark.parametrize("seed", range(6))
def test_decode_three_by_two_matches_oracle(seed):
    inst = generate_instance(3, 2, seed)
    best = brute_force_oracle(inst)
    rep = solve(inst, SolverConfig.degeneracy_breaking())
    assert rep.solution.violations == 0
    assert rep.solution.profit == pytest.approx(best.profit, abs=1e-9)
    assert rep.solution.assignment == best.assignment


def test_energy_examples():
    inst = generate_instance(5, 3, 2)
    best = brute_force_oracle(inst)
    H = build_hamiltonian(inst)
    net = apply_ite(build_mining_network(inst), H, 40.0)
    assert measure_energy(net, H) == pytest.approx(-best.profit, abs=1e-6)

    zero = MineInstance(np.zeros((2, 3)))
    Hz = build_hamiltonian(zero)
    assert measure_energy(apply_ite(build_mining_network(zero), Hz, 1.0), Hz) == 0.0

    single = one_block(1.0)
    assert measure_energy(build_mining_network(single), build_hamiltonian(single)) == pytest.approx(-0.5)


def test_energy_non_increasing_in_tau():
    inst = generate_instance(5, 3, 3)
    H = build_hamiltonian(inst)
    net = build_mining_network(inst)
    energies = [measure_energy(apply_ite(net, H, t), H) for t in (0.1, 0.5, 1, 2, 4, 8)]
    assert all(a >= b - 1e-12 for a, b in zip(energies, energies[1:]))


def test_shift_and_rescale_do_not_change_decoding():
    inst = generate_instance(5, 3, 6)
    H = build_hamiltonian(inst)
    cfg = SolverConfig.degeneracy_breaking()
    net = build_mining_network(inst)
    base = decode_assignment(apply_ite(net, H, 6.0), cfg)
    assert decode_assignment(apply_ite(net, H.shifted(-2.5), 6.0), cfg) == base
    scaled = net.replace_tensor(3, net.tensors[3].scale(7.0))
    assert decode_assignment(apply_ite(scaled, H, 6.0), cfg) == base


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(tau=0)
    with pytest.raises(ConfigError):
        SolverConfig(a=0.5)
    with pytest.raises(ConfigError):
        SolverConfig(a=1.1, b=0.06)
    with pytest.raises(ConfigError):
        SolverConfig(a=1.1, b=0.0)
    cfg = SolverConfig.degeneracy_breaking()
    assert (cfg.a, cfg.b) == (1.1, 0.025)


def test_suggest_tau():
    assert suggest_tau(0.5, np.e) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        suggest_tau(0.0)


@pytest.mark.parametrize("engine", ENGINES, ids=lambda e: e.name)
def test_engines_agree_on_expectations(engine):
    inst = generate_instance(5, 3, 8)
    net = apply_ite(build_mining_network(inst), build_hamiltonian(inst), 2.0)
    ref = measure_all(net, Engine("exact"))
    got = measure_all(net, engine)
    if engine.chi is None:
        assert np.allclose(got, ref, atol=1e-9)
    assert np.array_equal(got < 0, ref < 0)


def test_solve_report_records_bond_growth():
    rep = solve(generate_instance(7, 4, 0), SolverConfig(engine=Engine("bmps", 2)))
    assert rep.sweep is not None and rep.sweep.max_bond <= 2
    assert solve(generate_instance(3, 2, 0)).sweep is None
