import numpy as np
import pytest

from rydsim.devices import (DELTA_F, GAS_DELTA_F, GAS_R_F, R_F, T_WORK_IDEAL,
                            T_WORK_NOISY, DeviceError, build_and_gate,
                            build_diode, build_gas_switch, build_nand_gate,
                            build_switch_chain, build_transport_chain,
                            find_gate_work_time, find_work_time, logic_readout)
from rydsim.model import SimParams, local_mismatch
from rydsim.quantum import evolve_quantum
from rydsim.timeseries import TimeSeries


class TestSwitchChain:
    def test_layout(self):
        dev = build_switch_chain(delta_g=DELTA_F)
        assert dev.network.n_atoms == 6
        np.testing.assert_allclose(np.diff(dev.network.positions[:, 0]), R_F)
        np.testing.assert_allclose(dev.network.static_detunings,
                                   [DELTA_F, DELTA_F, DELTA_F, DELTA_F,
                                    DELTA_F, DELTA_F])
        assert dev.initial.bits == (1, 0, 0, 0, 0, 0)
        assert dev.output_sites == (2, 3, 4, 5)

    def test_gate_detuning_applied(self):
        dev = build_switch_chain(delta_g=3.5)
        assert dev.network.static_detunings[1] == 3.5

    def test_work_times(self):
        assert build_switch_chain(DELTA_F, gamma=1.0).work_time == T_WORK_NOISY
        assert build_switch_chain(DELTA_F, gamma=0.0).work_time == T_WORK_IDEAL

    def test_reference_work_time_is_output_peak(self):
        dev = build_switch_chain(delta_g=DELTA_F, gamma=1.0)
        ts = evolve_quantum(dev.network, SimParams(1.0, 1.0, 0.003),
                            dev.initial, 8.0, output_sites=dev.output_sites)
        assert abs(find_work_time(ts) - T_WORK_NOISY) < 0.1

    def test_ideal_work_time_is_output_peak(self):
        dev = build_switch_chain(delta_g=DELTA_F, gamma=0.0)
        ts = evolve_quantum(dev.network, SimParams(1.0, 0.0, 0.003),
                            dev.initial, 8.0, output_sites=dev.output_sites)
        assert abs(find_work_time(ts) - T_WORK_IDEAL) < 0.1


class TestTransportChain:
    def test_layout(self):
        dev = build_transport_chain(4)
        assert dev.network.n_atoms == 4
        assert dev.output_sites == (3,)
        assert dev.initial.bits == (1, 0, 0, 0)

    def test_neighbors_on_resonance(self):
        dev = build_transport_chain(5)
        for k in (1, 2, 3):
            bits = [0] * 5
            bits[k - 1] = 1
            from rydsim.model import Configuration
            assert abs(local_mismatch(k, Configuration(tuple(bits)),
                                      dev.network)) < 1e-10


class TestDiode:
    def test_gate_gap_value(self):
        dev = build_diode("forward")
        gaps = np.diff(dev.network.positions[:, 0])
        assert gaps[1] == pytest.approx(2.0 ** (-1 / 6))
        np.testing.assert_allclose(np.delete(gaps, 1), R_F)

    def test_reverse_mirrors_gate_gap(self):
        dev = build_diode("reverse")
        gaps = np.diff(dev.network.positions[:, 0])
        assert gaps[2] == pytest.approx(2.0 ** (-1 / 6))
        np.testing.assert_allclose(np.delete(gaps, 2), R_F)

    def test_gate_detuning_and_outputs(self):
        for direction in ("forward", "reverse"):
            dev = build_diode(direction)
            np.testing.assert_allclose(dev.network.static_detunings,
                                       [DELTA_F, DELTA_F, 2 * DELTA_F,
                                        DELTA_F, DELTA_F, DELTA_F])
            assert dev.output_sites == (3, 4, 5)
            assert dev.initial.bits == (1, 0, 0, 0, 0, 0)

    def test_rejects_bad_args(self):
        with pytest.raises(DeviceError):
            build_diode("sideways")
        with pytest.raises(DeviceError):
            build_diode("forward", delta_g=5.0)


class TestAndGate:
    def test_geometry(self):
        dev = build_and_gate((1, 1))
        pos = dev.network.positions
        assert np.linalg.norm(pos[0] - pos[2]) == pytest.approx(R_F)
        assert np.linalg.norm(pos[1] - pos[2]) == pytest.approx(R_F)
        assert np.linalg.norm(pos[0] - pos[1]) == pytest.approx(np.sqrt(3) * R_F)
        np.testing.assert_allclose(dev.network.static_detunings,
                                   [DELTA_F, DELTA_F, 2 * DELTA_F])
        assert dev.output_sites == (2,)

    def test_initial_states(self):
        assert build_and_gate((0, 1)).initial.bits == (0, 1, 0)
        assert build_and_gate((1, 0)).initial.bits == (1, 0, 0)

    def test_input_swap_symmetry(self):
        params = SimParams(1.0, 1.0, 0.003)
        a = build_and_gate((1, 0))
        b = build_and_gate((0, 1))
        ts_a = evolve_quantum(a.network, params, a.initial, 3.0,
                              output_sites=a.output_sites)
        ts_b = evolve_quantum(b.network, params, b.initial, 3.0,
                              output_sites=b.output_sites)
        np.testing.assert_allclose(ts_a.output_count, ts_b.output_count,
                                   atol=1e-10)

    def test_rejects_wrong_arity(self):
        with pytest.raises(DeviceError):
            build_and_gate((1, 0, 1))


class TestNandGate:
    def test_layout(self):
        dev = build_nand_gate((0, 0))
        assert dev.network.n_atoms == 4
        np.testing.assert_allclose(dev.network.positions[3], [-R_F, 0, 0])
        assert dev.output_sites == (3,)
        assert dev.initial.bits == (0, 0, 0, 0)

    def test_pulse_window(self):
        dev = build_nand_gate((1, 1))
        (t0, t1, atom, value), = dev.schedule.overrides
        assert atom == 3 and value == 0.0
        assert t1 - t0 == pytest.approx(np.pi / 2)
        assert 0.5 * (t0 + t1) == pytest.approx(1.5)

    def test_detuning_outside_window(self):
        dev = build_nand_gate((0, 1))
        static = dev.network.static_detunings
        det = dev.schedule.detunings_at(0.0, static)
        assert det[3] == DELTA_F
        det = dev.schedule.detunings_at(1.5, static)
        assert det[3] == 0.0


class TestGasSwitch:
    def test_structure(self):
        dev = build_gas_switch(on=True, seed=3, n_atoms=500)
        n = dev.network.n_atoms
        assert n == 500
        assert all(b == 0 for b in dev.initial.bits)
        # output sites are exactly the atoms in the last region
        scale = (500 / 3000) ** (1 / 3)
        output_start = (5.0 + 10.0) * scale
        x = dev.network.positions[:, 0]
        expected = tuple(np.nonzero(x >= output_start)[0])
        assert dev.output_sites == expected
        assert 0 < len(dev.output_sites) < n

    def test_gate_region_detuning(self):
        on = build_gas_switch(on=True, seed=3, n_atoms=500)
        off = build_gas_switch(on=False, seed=3, n_atoms=500)
        scale = (500 / 3000) ** (1 / 3)
        x = on.network.positions[:, 0]
        gate = (x >= 5.0 * scale) & (x < 15.0 * scale)
        assert gate.any()
        assert np.all(on.network.static_detunings[gate] == GAS_DELTA_F)
        assert np.all(off.network.static_detunings[gate] == -GAS_DELTA_F)
        # same geometry for matched seeds
        np.testing.assert_array_equal(on.network.positions,
                                      off.network.positions)

    def test_input_region_resonant(self):
        dev = build_gas_switch(on=True, seed=3, n_atoms=500)
        scale = (500 / 3000) ** (1 / 3)
        x = dev.network.positions[:, 0]
        assert np.all(dev.network.static_detunings[x < 5.0 * scale] == 0.0)

    def test_gate_blocks_direct_facilitation(self):
        # full-scale gate region is wider than two facilitation radii
        assert 10.0 > 2 * GAS_R_F

    def test_rejects_undersized_gate(self):
        # shrinking far enough makes the gate thinner than r_f
        with pytest.raises(DeviceError):
            build_gas_switch(on=True, seed=0, n_atoms=2)


class TestReadout:
    def make_series(self, values):
        t = np.linspace(0, 1, len(values))
        v = np.asarray(values, dtype=float)
        return TimeSeries(t, v[:, None], v)

    def test_logic_readout(self):
        ts = self.make_series([0.0, 0.9])
        assert logic_readout(ts, 1.0).output_bit == 1
        assert logic_readout(ts, 0.0).output_bit == 0

    def test_tie_reads_zero(self):
        ts = self.make_series([0.5, 0.5])
        assert logic_readout(ts, 0.5).output_bit == 0

    def test_find_work_time_monotone(self):
        ts = self.make_series([0.0, 0.2, 0.4, 0.8])
        assert find_work_time(ts) == 1.0

    def test_find_work_time_earliest_tie(self):
        ts = self.make_series([0.0, 0.7, 0.7, 0.1])
        assert find_work_time(ts) == pytest.approx(1 / 3)

    def test_gate_work_time_margins(self):
        t = np.linspace(0, 1, 5)
        high = TimeSeries(t, np.zeros((5, 1)), np.array([0., .2, .9, .9, .4]))
        low = TimeSeries(t, np.zeros((5, 1)), np.array([0., .1, .4, .1, .0]))
        table = {(1, 1): 1, (0, 0): 0}
        t_w = find_gate_work_time({(1, 1): high, (0, 0): low}, table)
        # margin is best where high is large and low is small
        assert t_w == pytest.approx(0.75)

    def test_gate_work_time_rejects_mismatched_grids(self):
        a = TimeSeries(np.array([0.0, 1.0]), np.zeros((2, 1)), np.zeros(2))
        b = TimeSeries(np.array([0.0, 2.0]), np.zeros((2, 1)), np.zeros(2))
        with pytest.raises(DeviceError):
            find_gate_work_time({(0, 0): a, (1, 1): b}, {(0, 0): 0, (1, 1): 1})


def test_output_sites_must_not_overlap_excited_inputs():
    from rydsim.model import Configuration
    dev = build_switch_chain(DELTA_F)
    with pytest.raises(DeviceError):
        type(dev)(network=dev.network, schedule=None,
                  initial=Configuration((1, 0, 0, 0, 0, 0)),
                  output_sites=(0, 1), engine_hint="quantum")
