"""Time-series results: per-site excitation densities, output excitation
count and run metadata, with CSV/JSON export."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


class TimeSeriesError(ValueError):
    pass


def config_hash(config: dict) -> str:
    """Stable short hash of a JSON-serializable config dict."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TimeSeries:
    """Observables on a strictly increasing time grid.

    site_density has shape (n_times, n_sites); output_count is the summed
    density over the device's output sites.
    """

    times: np.ndarray
    site_density: np.ndarray
    output_count: np.ndarray
    output_stderr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.site_density = np.atleast_2d(np.asarray(self.site_density, dtype=float))
        self.output_count = np.asarray(self.output_count, dtype=float)
        if self.site_density.shape[0] != self.times.size:
            raise TimeSeriesError("site_density rows must match time grid")
        if self.output_count.shape != self.times.shape:
            raise TimeSeriesError("output_count must match time grid")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise TimeSeriesError("times must be strictly increasing")

    @property
    def n_sites(self) -> int:
        return self.site_density.shape[1]

    def value_at(self, t: float) -> float:
        """Output count linearly interpolated at time t (t within range)."""
        if t < self.times[0] or t > self.times[-1]:
            raise TimeSeriesError(f"t={t} outside recorded range")
        return float(np.interp(t, self.times, self.output_count))

    def plateau_value(self, fraction: float = 0.1) -> float:
        """Mean output count over the trailing fraction of the run."""
        n = max(1, int(round(fraction * self.times.size)))
        return float(np.mean(self.output_count[-n:]))

    def resample(self, times: np.ndarray) -> "TimeSeries":
        """Linear-interpolation resample onto a new grid within range."""
        times = np.asarray(times, dtype=float)
        dens = np.empty((times.size, self.n_sites))
        for j in range(self.n_sites):
            dens[:, j] = np.interp(times, self.times, self.site_density[:, j])
        out = np.interp(times, self.times, self.output_count)
        err = None
        if self.output_stderr is not None:
            err = np.interp(times, self.times, self.output_stderr)
        return TimeSeries(times, dens, out, err, dict(self.metadata))

    def to_csv(self, path) -> None:
        """Write `t, site_0..site_{N-1}, N_o[, N_o_stderr]` with 9 significant
        digits."""
        cols = [self.times] + [self.site_density[:, j] for j in range(self.n_sites)]
        cols.append(self.output_count)
        header = ["t"] + [f"site_{j}" for j in range(self.n_sites)] + ["N_o"]
        if self.output_stderr is not None:
            cols.append(self.output_stderr)
            header.append("N_o_stderr")
        data = np.column_stack(cols)
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(f"{x:.9g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        n_sites = sum(1 for h in header if h.startswith("site_"))
        err = data[:, -1] if header[-1] == "N_o_stderr" else None
        return cls(data[:, 0], data[:, 1:1 + n_sites],
                   data[:, 1 + n_sites], err)

    def summary(self) -> dict:
        return {
            "n_times": int(self.times.size),
            "t_end": float(self.times[-1]),
            "final_output_count": float(self.output_count[-1]),
            "metadata": self.metadata,
        }
