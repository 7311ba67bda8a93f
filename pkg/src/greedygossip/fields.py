"""Initial node values x(0) for the gossip experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Graph

KINDS = ("gaussian_bumps", "linear", "spike", "iid_gaussian")

# amplitude, center x, center y, width
DEFAULT_BUMPS = ((1.0, 0.25, 0.25, 0.15), (-1.0, 0.75, 0.75, 0.15))


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    """Which initial field to synthesize.

    ``bumps`` is only used by ``gaussian_bumps``; ``seed`` only by ``spike``
    and ``iid_gaussian``.
    """

    kind: str = "gaussian_bumps"
    bumps: tuple[tuple[float, float, float, float], ...] = DEFAULT_BUMPS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FieldError(f"unknown field kind {self.kind!r}; expected one of {KINDS}")
        for b in self.bumps:
            if len(b) != 4:
                raise FieldError("each bump is (amplitude, cx, cy, width)")
            if not b[3] > 0:
                raise FieldError("bump widths must be positive")


def synthesize(spec: FieldSpec, g: Graph) -> np.ndarray:
    if spec.kind in ("gaussian_bumps", "linear"):
        if g.locations is None:
            raise FieldError(f"{spec.kind} field needs node locations")
        loc = g.locations
        if spec.kind == "linear":
            return loc[:, 0] + loc[:, 1]
        x = np.zeros(g.n)
        for amp, cx, cy, width in spec.bumps:
            d2 = (loc[:, 0] - cx) ** 2 + (loc[:, 1] - cy) ** 2
            x += amp * np.exp(-d2 / (2.0 * width * width))
        return x
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "spike":
        x = np.zeros(g.n)
        x[rng.integers(g.n)] = 1.0
        return x
    return rng.standard_normal(g.n)
