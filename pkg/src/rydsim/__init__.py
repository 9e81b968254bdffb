"""rydsim: driven-dissipative Rydberg network simulator with exact Lindblad
and classical rate-equation engines, plus atomtronic device builders."""

from .model import (AtomNetwork, Configuration, DetuningSchedule, SimParams,
                    blockade_radius, convert_units, facilitation_detuning,
                    facilitation_radius, local_mismatch, UnitConversion)
from .quantum import build_hamiltonian, evolve_quantum, lindblad_rhs, measure_output
from .classical import (NeighborTable, Trajectory, classical_generator,
                        ensemble_average, evolve_classical,
                        evolve_classical_exact, gillespie_ensemble,
                        gillespie_run, transition_rate)
from .geometry import CylinderSpec, RegionPartition, build_chain, sample_cylinder
from .devices import (DeviceInstance, LogicResult, build_and_gate, build_diode,
                      build_gas_switch, build_nand_gate, build_switch_chain,
                      build_transport_chain, find_work_time, logic_readout)
from .timeseries import TimeSeries

__version__ = "0.1.0"
