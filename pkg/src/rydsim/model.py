"""Shared physical model: atom networks, drive/noise parameters, detuning
schedules and the facilitation/blockade formulas used by both engines.

Frequencies follow the 2pi-factored convention: a value of 0.7e6 in a
physical-unit parameter set means omega/(2pi) = 0.7 MHz.  Since the
dimensionless conversion only ever takes ratios of frequencies, the 2pi
factors cancel and never appear explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DIMENSIONLESS = "dimensionless"
PHYSICAL = "physical"


class ModelError(ValueError):
    """Invalid physical model input."""


@dataclass(frozen=True)
class AtomNetwork:
    """Atom positions, per-atom static detunings and the C6 coefficient.

    positions: (N, 3) array, length units (dimensionless or micrometers).
    static_detunings: (N,) array of per-atom detunings.
    c6: van der Waals coefficient, frequency * length^6, positive.
    """

    positions: np.ndarray
    static_detunings: np.ndarray
    c6: float
    unit_system: str = DIMENSIONLESS

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ModelError("positions must be an (N, 3) array")
        det = np.asarray(self.static_detunings, dtype=float)
        if det.shape != (pos.shape[0],):
            raise ModelError("static_detunings length must match positions")
        if pos.shape[0] < 1:
            raise ModelError("need at least one atom")
        if self.c6 <= 0:
            raise ModelError("c6 must be positive")
        if pos.shape[0] > 1:
            d = pairwise_distances(pos)
            iu = np.triu_indices(pos.shape[0], k=1)
            if np.any(d[iu] <= 0):
                raise ModelError("all pairwise distances must be positive")
        pos.setflags(write=False)
        det.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "static_detunings", det)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    def interaction_matrix(self) -> np.ndarray:
        """(N, N) matrix of C6 / r_ij^6 with zero diagonal."""
        d = pairwise_distances(self.positions)
        with np.errstate(divide="ignore"):
            v = self.c6 / d**6
        np.fill_diagonal(v, 0.0)
        return v


@dataclass(frozen=True)
class SimParams:
    """Rabi frequency, dephasing and decay rates.

    omega > 0, gamma >= 0, kappa >= 0.
    """

    omega: float
    gamma: float
    kappa: float
    unit_system: str = DIMENSIONLESS

    def __post_init__(self):
        if self.omega <= 0:
            raise ModelError("omega must be positive")
        if self.gamma < 0 or self.kappa < 0:
            raise ModelError("gamma and kappa must be non-negative")


@dataclass(frozen=True)
class Configuration:
    """Classical configuration: bit k = 1 means atom k in the Rydberg state."""

    bits: tuple

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ModelError("configuration bits must be 0 or 1")
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))

    @classmethod
    def from_string(cls, s: str) -> "Configuration":
        return cls(tuple(int(c) for c in s))

    @classmethod
    def ground(cls, n: int) -> "Configuration":
        return cls((0,) * n)

    @classmethod
    def single_excitation(cls, n: int, site: int) -> "Configuration":
        bits = [0] * n
        bits[site] = 1
        return cls(tuple(bits))

    def __len__(self) -> int:
        return len(self.bits)

    def to_index(self) -> int:
        """Basis-state index: bit k of the integer is atom k's occupation."""
        return sum(b << k for k, b in enumerate(self.bits))

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)


@dataclass(frozen=True)
class DetuningSchedule:
    """Piecewise-constant detuning overrides: (t_start, t_end, atom, value).

    Atoms without an active override keep their static detuning.  Intervals
    for the same atom must not overlap.
    """

    overrides: tuple = ()

    def __post_init__(self):
        entries = []
        for t0, t1, atom, value in self.overrides:
            if not t0 < t1:
                raise ModelError("schedule interval needs t_start < t_end")
            entries.append((float(t0), float(t1), int(atom), float(value)))
        entries.sort()
        per_atom = {}
        for t0, t1, atom, _ in entries:
            for s0, s1 in per_atom.get(atom, ()):
                if t0 < s1 and s0 < t1:
                    raise ModelError(f"overlapping overrides for atom {atom}")
            per_atom.setdefault(atom, []).append((t0, t1))
        object.__setattr__(self, "overrides", tuple(entries))

    def breakpoints(self) -> np.ndarray:
        """Sorted unique times at which some atom's detuning changes."""
        times = set()
        for t0, t1, _, _ in self.overrides:
            times.add(t0)
            times.add(t1)
        return np.array(sorted(times))

    def detunings_at(self, t: float, static: np.ndarray) -> np.ndarray:
        """Effective per-atom detunings at time t (intervals are [t0, t1))."""
        det = np.array(static, dtype=float)
        for t0, t1, atom, value in self.overrides:
            if t0 <= t < t1:
                det[atom] = value
        return det


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


def facilitation_detuning(r_f: float, c6: float) -> float:
    """Detuning that puts a neighbor at distance r_f on resonance: -c6/r_f^6."""
    if r_f <= 0 or c6 <= 0:
        raise ModelError("r_f and c6 must be positive")
    return -c6 / r_f**6


def facilitation_radius(delta_f: float, c6: float) -> float:
    """Distance at which detuning delta_f (< 0) is the facilitation detuning."""
    if delta_f >= 0 or c6 <= 0:
        raise ModelError("delta_f must be negative and c6 positive")
    return (-c6 / delta_f) ** (1.0 / 6.0)


def blockade_radius(c6: float, omega: float) -> float:
    """Blockade radius (c6/omega)^(1/6)."""
    if c6 <= 0 or omega <= 0:
        raise ModelError("c6 and omega must be positive")
    return (c6 / omega) ** (1.0 / 6.0)


def dephasing_blockade_radius(c6: float, gamma: float) -> float:
    """Diagnostic companion to blockade_radius using the dephasing rate.

    Reported alongside the drive-based radius because device parameters
    are sometimes stated against (c6/gamma)^(1/6) instead.
    """
    if c6 <= 0 or gamma <= 0:
        raise ModelError("c6 and gamma must be positive")
    return (c6 / gamma) ** (1.0 / 6.0)


def local_mismatch(k: int, config: Configuration, network: AtomNetwork,
                   detunings: np.ndarray | None = None) -> float:
    """Energy mismatch of atom k: Delta_k + sum_q C6 n_q / r_kq^6.

    Zero mismatch means atom k is exactly on resonance (facilitated).
    """
    n = network.n_atoms
    if not 0 <= k < n:
        raise ModelError(f"atom index {k} out of range")
    if len(config) != n:
        raise ModelError("configuration length must match network")
    det = network.static_detunings if detunings is None else detunings
    bits = config.as_array().astype(float)
    bits[k] = 0.0
    v = network.interaction_matrix()
    return float(det[k] + v[k] @ bits)


@dataclass(frozen=True)
class UnitConversion:
    """Reference scales for the dimensionless unit system.

    ref_omega: drive frequency the dimensionless system measures rates in.
    ref_length: physical length mapped to 1 (typically the facilitation
    distance).  Both in the same 2pi-factored physical units as the inputs.
    """

    ref_omega: float
    ref_length: float = 1.0

    def __post_init__(self):
        if self.ref_omega <= 0 or self.ref_length <= 0:
            raise ModelError("reference scales must be positive")


def convert_units(obj, conversion: UnitConversion, to: str):
    """Convert SimParams or AtomNetwork between unit systems.

    Frequencies scale by ref_omega, lengths by ref_length and C6 by
    ref_omega * ref_length^6.
    """
    if to not in (DIMENSIONLESS, PHYSICAL):
        raise ModelError(f"unknown unit system {to!r}")
    if obj.unit_system == to:
        return obj
    w = conversion.ref_omega
    ell = conversion.ref_length
    if isinstance(obj, SimParams):
        if to == DIMENSIONLESS:
            return SimParams(obj.omega / w, obj.gamma / w, obj.kappa / w,
                             unit_system=to)
        return SimParams(obj.omega * w, obj.gamma * w, obj.kappa * w,
                         unit_system=to)
    if isinstance(obj, AtomNetwork):
        if to == DIMENSIONLESS:
            return AtomNetwork(obj.positions / ell,
                               obj.static_detunings / w,
                               obj.c6 / (w * ell**6),
                               unit_system=to)
        return AtomNetwork(obj.positions * ell,
                           obj.static_detunings * w,
                           obj.c6 * (w * ell**6),
                           unit_system=to)
    raise ModelError(f"cannot convert object of type {type(obj).__name__}")
