import numpy as np
import pytest

from rydsim.geometry import build_chain
from rydsim.model import AtomNetwork, Configuration, DetuningSchedule, SimParams
from rydsim.quantum import (CapacityError, IntegrationError, build_hamiltonian,
                            density_from_configuration, evolve_quantum,
                            lindblad_rhs, measure_output, purity,
                            site_densities)


def single_atom(detuning=0.0):
    return AtomNetwork([[0, 0, 0]], [detuning], 10.0)


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestBuildHamiltonian:
    def test_single_atom_is_rabi_drive(self):
        h = build_hamiltonian(single_atom(), [0.0], omega=1.0).to_dense()
        np.testing.assert_allclose(h, [[0, 1], [1, 0]])

    def test_facilitation_pair_diagonal(self):
        net = AtomNetwork([[0, 0, 0], [1, 0, 0]], [-10.0, -10.0], 10.0)
        ham = build_hamiltonian(net, net.static_detunings, omega=1.0)
        # E(up,up) = 2*delta_f + c6 = delta_f
        np.testing.assert_allclose(ham.diagonal, [0.0, -10.0, -10.0, -10.0])

    def test_far_separated_pair_spectrum(self):
        net = AtomNetwork([[0, 0, 0], [1e6, 0, 0]], [0.0, 0.0], 10.0)
        h = build_hamiltonian(net, net.static_detunings, omega=1.0).to_dense()
        # brute-force oracle: two independent sigma-x drives
        evals = np.linalg.eigvalsh(h)
        np.testing.assert_allclose(evals, [-2, 0, 0, 2], atol=1e-12)

    def test_hermitian(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(0, 5, size=(3, 3))
        net = AtomNetwork(pos, rng.normal(size=3), 10.0)
        h = build_hamiltonian(net, net.static_detunings, omega=1.3).to_dense()
        np.testing.assert_allclose(h, h.conj().T)

    def test_off_diagonal_count(self):
        # exactly N * 2^N off-diagonal nonzeros
        net = build_chain([1.0, 1.0], [-10.0] * 3, 10.0)
        h = build_hamiltonian(net, net.static_detunings, omega=1.0).to_dense()
        off = h - np.diag(np.diag(h))
        assert np.count_nonzero(off) == 3 * 8

    def test_capacity_error(self):
        n = 13
        pos = np.column_stack([np.arange(n), np.zeros(n), np.zeros(n)])
        net = AtomNetwork(pos, np.zeros(n), 10.0)
        with pytest.raises(CapacityError):
            build_hamiltonian(net, net.static_detunings, omega=1.0)


class TestLindbladRhs:
    def test_maximally_mixed_is_dephasing_fixed_point(self):
        net = AtomNetwork([[0, 0, 0], [10, 0, 0]], [0.0, 0.0], 10.0)
        ham = build_hamiltonian(net, [0.0, 0.0], omega=0.0)
        rho = np.eye(4, dtype=complex) / 4
        out = lindblad_rhs(rho, ham, SimParams(1.0, 2.0, 0.0))
        np.testing.assert_allclose(out, 0.0, atol=1e-15)

    def test_pure_decay_generator(self):
        ham = build_hamiltonian(single_atom(), [0.0], omega=0.0)
        rho = np.diag([0.0, 1.0]).astype(complex)
        kappa = 0.7
        out = lindblad_rhs(rho, ham, SimParams(1.0, 0.0, kappa))
        np.testing.assert_allclose(np.diag(out).real, [kappa, -kappa])

    def test_trace_free_for_random_states(self):
        net = build_chain([1.0, 1.2], [-10.0, -5.0, 0.0], 10.0)
        ham = build_hamiltonian(net, net.static_detunings, omega=1.0)
        params = SimParams(1.0, 0.8, 0.05)
        rng = np.random.default_rng(7)
        for _ in range(100):
            rho = random_density_matrix(rng, 8)
            out = lindblad_rhs(rho, ham, params)
            assert abs(np.trace(out)) < 1e-10

    def test_shape_mismatch(self):
        ham = build_hamiltonian(single_atom(), [0.0], omega=1.0)
        with pytest.raises(ValueError):
            lindblad_rhs(np.eye(4, dtype=complex) / 4, ham, SimParams(1, 0, 0))


class TestEvolveQuantum:
    def test_rabi_oscillation(self):
        ts = evolve_quantum(single_atom(), SimParams(1.0, 0.0, 0.0),
                            Configuration((0,)), 5.0, output_sites=(0,))
        np.testing.assert_allclose(ts.output_count, np.sin(ts.times) ** 2,
                                   atol=1e-6)

    def test_strong_dephasing_steady_state(self):
        ts = evolve_quantum(single_atom(), SimParams(1.0, 20.0, 0.0),
                            Configuration((0,)), 30.0, output_sites=(0,))
        assert ts.output_count[-1] == pytest.approx(0.5, abs=1e-3)

    def test_purity_conserved_without_noise(self):
        net = build_chain([1.0, 1.0], [-10.0] * 3, 10.0)
        ts = evolve_quantum(net, SimParams(1.0, 0.0, 0.0),
                            Configuration((1, 0, 0)), 4.0)
        assert purity(ts.final_state) == pytest.approx(1.0, abs=1e-6)

    def test_conservation_invariants(self):
        net = build_chain([1.0, 1.0], [-10.0] * 3, 10.0)
        ts = evolve_quantum(net, SimParams(1.0, 1.0, 0.003),
                            Configuration((1, 0, 0)), 4.0)
        rho = ts.final_state
        assert abs(np.trace(rho).real - 1.0) < 1e-8
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-8
        assert np.min(np.diag(rho).real) > -1e-8

    def test_permutation_covariance(self):
        rng = np.random.default_rng(11)
        # irregular but well-separated triangle
        pos = np.array([[0.0, 0.0, 0.0], [1.1, 0.2, 0.0], [0.4, 1.3, 0.5]])
        det = rng.normal(scale=5, size=3)
        net = AtomNetwork(pos, det, 10.0)
        perm = [2, 0, 1]
        net_p = AtomNetwork(pos[perm], det[perm], 10.0)
        ts = evolve_quantum(net, SimParams(1.0, 0.5, 0.01),
                            Configuration((1, 0, 0)), 2.0)
        bits = np.zeros(3, dtype=int)
        bits[perm.index(0)] = 1
        ts_p = evolve_quantum(net_p, SimParams(1.0, 0.5, 0.01),
                              Configuration(tuple(bits)), 2.0)
        np.testing.assert_allclose(ts_p.site_density[:, perm.index(1)],
                                   ts.site_density[:, 1], atol=1e-12)
        np.testing.assert_allclose(ts_p.site_density,
                                   ts.site_density[:, perm], atol=1e-12)

    def test_schedule_breakpoints_applied(self):
        # pi pulse on a lone atom: detuning 0 during the window, huge outside
        sched = DetuningSchedule(((1.0, 1.0 + np.pi / 2, 0, 0.0),))
        net = single_atom(detuning=-50.0)
        ts = evolve_quantum(net, SimParams(1.0, 0.0, 0.0),
                            Configuration((0,)), 3.0, schedule=sched,
                            output_sites=(0,))
        assert ts.value_at(0.99) < 0.01
        assert ts.value_at(1.0 + np.pi / 2) > 0.95

    def test_rejects_large_dt(self):
        with pytest.raises(ValueError):
            evolve_quantum(single_atom(), SimParams(1.0, 0.0, 0.0),
                           Configuration((0,)), 1.0, dt=0.5)


class TestMeasureOutput:
    def test_pure_states(self):
        rho = density_from_configuration(Configuration((0, 0, 0, 0)))
        assert measure_output(rho, (0, 1, 2, 3), 4) == 0.0
        rho = density_from_configuration(Configuration((1, 1, 1, 1)))
        assert measure_output(rho, (0, 1, 2, 3), 4) == 4.0

    def test_maximally_mixed(self):
        rho = np.eye(8, dtype=complex) / 8
        assert measure_output(rho, (0, 2), 3) == pytest.approx(1.0)

    def test_rejects_bad_site(self):
        rho = np.eye(2, dtype=complex) / 2
        with pytest.raises(ValueError):
            measure_output(rho, (5,), 1)


def test_site_densities_basis_state():
    rho = density_from_configuration(Configuration((1, 0, 1)))
    np.testing.assert_allclose(site_densities(rho, 3), [1, 0, 1])
