"""Exact open-system engine: many-body Hamiltonian on the 2^N basis and
fixed-step RK4 integration of the Lindblad master equation with dephasing
and decay channels.

The Hamiltonian is never materialized as a generic sparse matrix.  Its
diagonal (detunings + pairwise van der Waals shifts) is stored as a vector
and the drive term is applied through single-bit-flip index gathers, one
pass per atom.  Basis-state index convention: bit k of the integer index is
atom k's occupation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import AtomNetwork, Configuration, DetuningSchedule, SimParams
from .timeseries import TimeSeries

DEFAULT_DT_FACTOR = 0.005  # dt = 0.005 / omega unless overridden
ATOM_CAP = 12


class CapacityError(ValueError):
    """Too many atoms for the dense 2^N representation."""


class IntegrationError(RuntimeError):
    """Integration left the physical manifold (trace drift)."""


@dataclass(frozen=True)
class SparseHamiltonian:
    """Diagonal vector + implicit spin-flip structure of the drive."""

    diagonal: np.ndarray
    omega: float
    n_atoms: int

    @property
    def dim(self) -> int:
        return 1 << self.n_atoms

    def to_dense(self) -> np.ndarray:
        """Dense matrix, for small-N verification only."""
        dim = self.dim
        h = np.diag(self.diagonal.astype(complex))
        for k in range(self.n_atoms):
            flipped = np.arange(dim) ^ (1 << k)
            h[np.arange(dim), flipped] += self.omega
        return h


@lru_cache(maxsize=8)
def _basis_tables(n_atoms: int):
    """Bit-occupation matrix, per-atom flip index arrays and excited-index
    lists for the 2^N basis."""
    dim = 1 << n_atoms
    idx = np.arange(dim)
    bits = ((idx[:, None] >> np.arange(n_atoms)[None, :]) & 1).astype(np.float64)
    flips = [idx ^ (1 << k) for k in range(n_atoms)]
    excited = [np.nonzero(idx & (1 << k))[0] for k in range(n_atoms)]
    popcount = bits.sum(axis=1)
    return bits, flips, excited, popcount


def _check_cap(n_atoms: int):
    if n_atoms > ATOM_CAP:
        raise CapacityError(f"N={n_atoms} exceeds dense-engine cap {ATOM_CAP}")


def build_hamiltonian(network: AtomNetwork, detunings: np.ndarray,
                      omega: float) -> SparseHamiltonian:
    """Hamiltonian for the given per-atom detunings (schedule snapshot)."""
    n = network.n_atoms
    _check_cap(n)
    bits, _, _, _ = _basis_tables(n)
    v = network.interaction_matrix()
    det = np.asarray(detunings, dtype=float)
    diagonal = bits @ det + 0.5 * np.einsum("ci,ij,cj->c", bits, v, bits)
    return SparseHamiltonian(diagonal, float(omega), n)


def _damping_weights(n_atoms: int, gamma: float, kappa: float) -> np.ndarray:
    """Elementwise damping of coherences and populations.

    Dephasing contributes -gamma/2 * popcount(i XOR j) (n_k^2 = n_k collapses
    the anticommutator), decay's anticommutator -kappa/2 * (pop(i) + pop(j)).
    """
    bits, _, _, pop = _basis_tables(n_atoms)
    idx = np.arange(1 << n_atoms)
    xor_pop = pop[idx[:, None] ^ idx[None, :]].astype(float)
    return -0.5 * gamma * xor_pop - 0.5 * kappa * (pop[:, None] + pop[None, :])


def lindblad_rhs(rho: np.ndarray, ham: SparseHamiltonian,
                 params: SimParams) -> np.ndarray:
    """d(rho)/dt under the master equation with dephasing and decay."""
    n = ham.n_atoms
    if rho.shape != (ham.dim, ham.dim):
        raise ValueError("rho shape does not match Hamiltonian dimension")
    weights = _damping_weights(n, params.gamma, params.kappa)
    return _rhs(rho, ham.diagonal, ham.omega, params.kappa, weights, n)


def _rhs(rho, diagonal, omega, kappa, weights, n_atoms):
    _, flips, excited, _ = _basis_tables(n_atoms)
    out = (-1j) * (diagonal[:, None] * rho - rho * diagonal[None, :])
    for k in range(n_atoms):
        f = flips[k]
        out += (-1j * omega) * (rho[f, :] - rho[:, f])
    out += weights * rho
    if kappa > 0:
        b = 1
        for k in range(n_atoms):
            e = excited[k]
            t = e ^ (1 << k)
            out[np.ix_(t, t)] += kappa * rho[np.ix_(e, e)]
    return out


def density_from_configuration(config: Configuration) -> np.ndarray:
    """Pure computational-basis density matrix |c><c|."""
    dim = 1 << len(config)
    rho = np.zeros((dim, dim), dtype=complex)
    i = config.to_index()
    rho[i, i] = 1.0
    return rho


def site_densities(rho: np.ndarray, n_atoms: int) -> np.ndarray:
    """<n_j> for every atom from the diagonal of rho."""
    bits, _, _, _ = _basis_tables(n_atoms)
    return np.real(np.diag(rho)) @ bits


def measure_output(rho: np.ndarray, output_sites, n_atoms: int) -> float:
    """Expected excitation count summed over the output sites."""
    dens = site_densities(rho, n_atoms)
    sites = np.asarray(list(output_sites), dtype=int)
    if sites.size and (sites.min() < 0 or sites.max() >= n_atoms):
        raise ValueError("output site index out of range")
    return float(dens[sites].sum())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def _segment_nodes(schedule, t_end: float) -> np.ndarray:
    nodes = [0.0]
    if schedule is not None:
        for b in schedule.breakpoints():
            if 0.0 < b < t_end:
                nodes.append(float(b))
    nodes.append(float(t_end))
    return np.unique(nodes)


def evolve_quantum(network: AtomNetwork, params: SimParams, initial,
                   t_end: float, dt: float | None = None,
                   schedule: DetuningSchedule | None = None,
                   output_sites=()) -> TimeSeries:
    """Integrate the master equation with fixed-step RK4.

    `initial` is a Configuration (basis state) or a density matrix.  The
    diagonal is rebuilt at schedule breakpoints, which are snapped to the
    step grid by adjusting dt per segment.  Records every step.
    """
    n = network.n_atoms
    _check_cap(n)
    if isinstance(initial, Configuration):
        if len(initial) != n:
            raise ValueError("initial configuration length mismatch")
        rho = density_from_configuration(initial)
    else:
        rho = np.array(initial, dtype=complex)
    if dt is None:
        dt = DEFAULT_DT_FACTOR / params.omega
    if dt > 0.01 / params.omega:
        raise ValueError("dt must be <= 0.01/omega")

    weights = _damping_weights(n, params.gamma, params.kappa)
    static = network.static_detunings
    nodes = _segment_nodes(schedule, t_end)

    times = [0.0]
    dens = [site_densities(rho, n)]
    for seg_start, seg_end in zip(nodes[:-1], nodes[1:]):
        det = static if schedule is None else schedule.detunings_at(seg_start, static)
        ham = build_hamiltonian(network, det, params.omega)
        length = seg_end - seg_start
        steps = max(1, int(round(length / dt)))
        h = length / steps
        for s in range(steps):
            k1 = _rhs(rho, ham.diagonal, ham.omega, params.kappa, weights, n)
            k2 = _rhs(rho + 0.5 * h * k1, ham.diagonal, ham.omega, params.kappa, weights, n)
            k3 = _rhs(rho + 0.5 * h * k2, ham.diagonal, ham.omega, params.kappa, weights, n)
            k4 = _rhs(rho + h * k3, ham.diagonal, ham.omega, params.kappa, weights, n)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            times.append(seg_start + (s + 1) * h)
            dens.append(site_densities(rho, n))
            if s % 50 == 49 or s == steps - 1:
                drift = abs(np.real(np.trace(rho)) - 1.0)
                if not drift < 1e-6:
                    raise IntegrationError(
                        f"trace drift {drift:.2e} at t={times[-1]:.3f}; "
                        "reduce dt")

    times = np.array(times)
    dens = np.array(dens)
    sites = np.asarray(list(output_sites), dtype=int)
    n_o = dens[:, sites].sum(axis=1) if sites.size else np.zeros_like(times)
    ts = TimeSeries(times, dens, n_o,
                    metadata={"engine": "quantum", "dt": dt,
                              "output_sites": [int(s) for s in sites]})
    ts.final_state = rho
    return ts
