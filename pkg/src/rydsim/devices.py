"""Atomtronic device builders: switch chain, 3D-gas switch, diode and the
AND/NAND logic gates, plus readout helpers (threshold logic, work time)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .model import (AtomNetwork, Configuration, DetuningSchedule, SimParams,
                    facilitation_detuning, facilitation_radius)
from .timeseries import TimeSeries

# Chain devices: dimensionless units, facilitation distance 1.
C6 = 10.0
R_F = 1.0
DELTA_F = facilitation_detuning(R_F, C6)  # -10
OMEGA = 1.0

# Work times: output density peaks here for the reference switch (gate on
# resonance), with and without dephasing.
T_WORK_NOISY = 4.60
T_WORK_IDEAL = 3.20

# 3D gas, frequencies in units of the drive (50 kHz) and lengths in um:
# gamma = 700/50, kappa = 2/50, C6 = 869 GHz / 50 kHz.
GAS_PARAMS = SimParams(omega=1.0, gamma=14.0, kappa=0.04)
GAS_C6 = 869e9 / 50e3
GAS_DELTA_F = -69.5e6 / 50e3  # -1390
GAS_R_F = facilitation_radius(GAS_DELTA_F, GAS_C6)  # ~4.817 um
GAS_REGION_LENGTHS = (5.0, 10.0, 15.0)
GAS_RADIUS = 7.0
GAS_N_ATOMS = 3000
GAS_D_MIN = 0.1


class DeviceError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceInstance:
    """Everything needed to run a device on any engine."""

    network: AtomNetwork
    schedule: DetuningSchedule | None
    initial: Configuration
    output_sites: tuple
    engine_hint: str
    work_time: float | None = None
    params: SimParams | None = None  # devices with fixed noise (3D gas)
    name: str = ""

    def __post_init__(self):
        if not self.output_sites:
            raise DeviceError("output_sites must be nonempty")
        excited = {i for i, b in enumerate(self.initial.bits) if b}
        if excited & set(self.output_sites):
            raise DeviceError("output sites overlap initially excited inputs")


@dataclass(frozen=True)
class LogicResult:
    inputs: tuple
    n_o_at_work_time: float
    output_bit: int
    threshold: float


def _work_time(gamma: float) -> float:
    return T_WORK_NOISY if gamma > 0 else T_WORK_IDEAL


def build_switch_chain(delta_g: float, gamma: float = 1.0) -> DeviceInstance:
    """Six-atom switch: input, gate with tunable detuning, four outputs."""
    detunings = [DELTA_F, delta_g, DELTA_F, DELTA_F, DELTA_F, DELTA_F]
    network = geometry.build_chain([R_F] * 5, detunings, C6)
    return DeviceInstance(
        network=network,
        schedule=None,
        initial=Configuration.single_excitation(6, 0),
        output_sites=(2, 3, 4, 5),
        engine_hint="quantum",
        work_time=_work_time(gamma),
        name="switch-chain")


def build_transport_chain(n_atoms: int = 6, c6: float = C6) -> DeviceInstance:
    """Uniform facilitation chain with the input atom excited."""
    delta_f = facilitation_detuning(R_F, c6)
    network = geometry.build_chain([R_F] * (n_atoms - 1),
                                   [delta_f] * n_atoms, c6)
    return DeviceInstance(
        network=network,
        schedule=None,
        initial=Configuration.single_excitation(n_atoms, 0),
        output_sites=(n_atoms - 1,),
        engine_hint="quantum",
        name="transport-chain")


def build_gas_switch(on: bool, seed, n_atoms: int = GAS_N_ATOMS) -> DeviceInstance:
    """Cylindrical-gas switch with input/gate/output detuning regions.

    For n_atoms below the full-scale 3000 the geometry is shrunk uniformly
    so the gas density is preserved.
    """
    scale = (n_atoms / GAS_N_ATOMS) ** (1.0 / 3.0)
    lengths = tuple(l * scale for l in GAS_REGION_LENGTHS)
    spec = geometry.CylinderSpec(length=sum(lengths),
                                 radius=GAS_RADIUS * scale,
                                 n_atoms=n_atoms, d_min=GAS_D_MIN)
    positions = geometry.sample_cylinder(spec, seed)
    delta_g = GAS_DELTA_F if on else -GAS_DELTA_F
    partition = geometry.RegionPartition(lengths,
                                         (0.0, delta_g, GAS_DELTA_F))
    if not partition.blocks_transport(GAS_R_F):
        raise DeviceError("gate region narrower than the facilitation radius")
    detunings = geometry.assign_regions(positions, partition)
    network = AtomNetwork(positions, detunings, GAS_C6)
    output_start = lengths[0] + lengths[1]
    output_sites = tuple(np.nonzero(positions[:, 0] >= output_start)[0])
    return DeviceInstance(
        network=network,
        schedule=None,
        initial=Configuration.ground(n_atoms),
        output_sites=output_sites,
        engine_hint="kmc",
        params=GAS_PARAMS,
        name=f"gas-switch-{'on' if on else 'off'}")


def build_diode(direction: str, delta_g: float = 2 * DELTA_F,
                gamma: float = 1.0) -> DeviceInstance:
    """Six-atom diode: a gate atom whose off-spacing gap r_g satisfies the
    facilitation condition only when approached from the input side."""
    if delta_g >= 0:
        raise DeviceError("gate detuning must be negative")
    if direction not in ("forward", "reverse"):
        raise DeviceError(f"unknown direction {direction!r}")
    r_g = facilitation_radius(delta_g, C6)
    if direction == "forward":
        gaps = [R_F, r_g, R_F, R_F, R_F]  # r_g on the gate's input side
    else:
        gaps = [R_F, R_F, r_g, R_F, R_F]  # r_g on the gate's output side
    detunings = [DELTA_F] * 6
    detunings[2] = delta_g
    network = geometry.build_chain(gaps, detunings, C6)
    return DeviceInstance(
        network=network,
        schedule=None,
        initial=Configuration.single_excitation(6, 0),
        output_sites=(3, 4, 5),
        engine_hint="quantum",
        work_time=_work_time(gamma),
        name=f"diode-{direction}")


def _and_positions(r_f: float = R_F) -> np.ndarray:
    """Output atom at the origin, inputs at distance r_f, opened to 120 deg
    so the input-input interaction is negligible (~0.04 |Delta_f|)."""
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    return np.array([[r_f * c, r_f * s, 0.0],
                     [r_f * c, -r_f * s, 0.0],
                     [0.0, 0.0, 0.0]])


def build_and_gate(input_bits) -> DeviceInstance:
    """AND gate: two inputs facilitate the doubly-detuned output only when
    both are excited."""
    bits = tuple(int(b) for b in input_bits)
    if len(bits) != 2:
        raise DeviceError("AND gate takes two input bits")
    network = AtomNetwork(_and_positions(),
                          [DELTA_F, DELTA_F, 2 * DELTA_F], C6)
    return DeviceInstance(
        network=network,
        schedule=None,
        initial=Configuration(bits + (0,)),
        output_sites=(2,),
        engine_hint="quantum",
        name=f"and-{bits[0]}{bits[1]}")


NOT_PULSE_CENTER = 1.5  # in units of 1/omega
NOT_PULSE_LENGTH = np.pi / (2 * OMEGA)


def build_nand_gate(input_bits) -> DeviceInstance:
    """AND gate plus a NOT atom at facilitation distance from the AND
    output.  The NOT atom's detuning is dropped to zero for a pi-pulse
    window centered at t*omega = 1.5 and sits at Delta_f otherwise."""
    bits = tuple(int(b) for b in input_bits)
    if len(bits) != 2:
        raise DeviceError("NAND gate takes two input bits")
    positions = np.vstack([_and_positions(), [-R_F, 0.0, 0.0]])
    network = AtomNetwork(positions,
                          [DELTA_F, DELTA_F, 2 * DELTA_F, DELTA_F], C6)
    t0 = NOT_PULSE_CENTER - NOT_PULSE_LENGTH / 2
    t1 = NOT_PULSE_CENTER + NOT_PULSE_LENGTH / 2
    schedule = DetuningSchedule(((t0, t1, 3, 0.0),))
    return DeviceInstance(
        network=network,
        schedule=schedule,
        initial=Configuration(bits + (0, 0)),
        output_sites=(3,),
        engine_hint="quantum",
        name=f"nand-{bits[0]}{bits[1]}")


def logic_readout(series: TimeSeries, t_w: float, threshold: float = 0.5,
                  inputs=()) -> LogicResult:
    """Threshold decision on the output count at the work time (strict
    inequality; an exact tie reads as 0)."""
    n_o = series.value_at(t_w)
    return LogicResult(tuple(inputs), n_o, int(n_o > threshold), threshold)


def find_work_time(series: TimeSeries, criterion=None) -> float:
    """Time on the recorded grid maximizing the criterion (default: output
    count), earliest time on ties."""
    values = series.output_count if criterion is None else criterion(series)
    if len(values) == 0:
        raise DeviceError("empty time series")
    return float(series.times[int(np.argmax(values))])


def find_gate_work_time(series_by_input: dict, truth_table: dict,
                        threshold: float = 0.5) -> float:
    """Work time maximizing the worst-case margin of a logic gate.

    For inputs expected to read 1 the margin is N_o - threshold, for 0 it
    is threshold - N_o; the returned time maximizes the minimum margin over
    all inputs.  All series must share a time grid.
    """
    times = None
    margins = []
    for key, series in series_by_input.items():
        if times is None:
            times = series.times
        elif series.times.shape != times.shape or not np.allclose(series.times, times):
            raise DeviceError("gate series must share a time grid")
        sign = 1.0 if truth_table[key] else -1.0
        margins.append(sign * (series.output_count - threshold))
    worst = np.min(margins, axis=0)
    return float(times[int(np.argmax(worst))])
