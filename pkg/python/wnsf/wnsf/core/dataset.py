from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sampled trajectories u (N x n_u) and y (N x n_y) with loop metadata."""
    u: np.ndarray
    y: np.ndarray
    loop: Literal["open", "closed"] = "open"
    controller: dict[str, Any] | None = field(default=None, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        u = np.asarray(self.u, dtype=float)
        if u.size == 0:
            u = np.zeros((y.shape[0], 0))
        elif u.ndim == 1:
            u = u[:, None]

        if y.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if u.shape[0] != y.shape[0]:
            raise ValueError(f"u and y must have equal row counts, got {u.shape[0]} and {y.shape[0]}")
        if self.loop not in ("open", "closed"):
            raise ValueError("loop must be 'open' or 'closed'")

        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    @property
    def sample_count(self) -> int:
        return self.y.shape[0]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[1]

    @property
    def z(self) -> np.ndarray:
        """Stacked samples z_k = [u_k, y_k]."""
        return np.hstack([self.u, self.y])

    def split(self, fraction: float) -> tuple["Dataset", "Dataset"]:
        cut = split_index(self.sample_count, fraction)
        return (Dataset(self.u[:cut], self.y[:cut], self.loop, self.controller),
                Dataset(self.u[cut:], self.y[cut:], self.loop, self.controller))

    def __repr__(self):
        return f"<Dataset N={self.sample_count} n_u={self.n_u} n_y={self.n_y} loop={self.loop}>"


def split_index(count: int, fraction: float) -> int:
    """First sample of the second segment; both segments keep at least one sample."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("split must lie in (0, 1)")
    if count < 2:
        raise ValueError(f"cannot split a record of {count} sample(s)")
    return min(max(int(fraction * count), 1), count - 1)
