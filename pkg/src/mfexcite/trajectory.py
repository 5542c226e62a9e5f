"""Sampled mean trajectories shared by the particle and reduced integrators."""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class MeanTrajectory:
    times: np.ndarray
    means: np.ndarray
    cov: Optional[np.ndarray] = None
    coeffs: Optional[list] = None
    meta: dict = field(default_factory=dict)
    drift: Optional[np.ndarray] = None  # empirical mean of F(X) at each record

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        if self.means.ndim == 1:
            self.means = self.means[:, None]
        if len(self.times) != len(self.means):
            raise ValueError("times and means lengths differ")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("means must be finite")
        if self.drift is not None:
            self.drift = np.asarray(self.drift, dtype=float).reshape(self.means.shape)

    @property
    def d(self):
        return self.means.shape[1]

    def __len__(self):
        return len(self.times)

    def window(self, t0, t1=np.inf):
        sel = (self.times >= t0) & (self.times <= t1)
        return MeanTrajectory(
            self.times[sel], self.means[sel],
            None if self.cov is None else self.cov[sel],
            None if self.coeffs is None else [c for c, s in zip(self.coeffs, sel) if s],
            dict(self.meta),
            None if self.drift is None else self.drift[sel],
        )

    def polar(self, center):
        """(r, unwrapped theta) of the mean about ``center`` (first two axes)."""
        rel = self.means[:, :2] - np.asarray(center, dtype=float)[:2]
        r = np.hypot(rel[:, 0], rel[:, 1])
        theta = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
        return r, theta

    def winding_number(self, center):
        _, theta = self.polar(center)
        return (theta[-1] - theta[0]) / (2 * np.pi)

    # ------------------------------------------------------------ CSV

    def header(self):
        cols = ["t"] + [f"m{i + 1}" for i in range(self.d)]
        if self.cov is not None:
            cols += [f"c{i + 1}{j + 1}" for i in range(self.d) for j in range(self.d)]
        if self.drift is not None:
            cols += [f"f{i + 1}" for i in range(self.d)]
        return cols

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for i in range(len(self.times)):
                row = [self.times[i], *self.means[i]]
                if self.cov is not None:
                    row += list(self.cov[i].ravel())
                if self.drift is not None:
                    row += list(self.drift[i])
                w.writerow([format(float(v), ".17g") for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        d = sum(1 for h in head if h.startswith("m"))
        cov = drift = None
        if any(h.startswith("c") for h in head):
            cov = data[:, 1 + d:1 + d + d * d].reshape(-1, d, d)
        if any(h.startswith("f") for h in head):
            drift = data[:, -d:]
        return cls(data[:, 0], data[:, 1:1 + d], cov, drift=drift)
