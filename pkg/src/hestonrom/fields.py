"""Coefficient fields of the diffusion-convection-reaction operator."""

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class CoefficientField:
    """Variable coefficients A(v, x), b(v, x) and a constant reaction rate.

    `diffusion(v, x)` must return a symmetric matrix array of shape
    (..., 2, 2) and `convection(v, x)` a vector array of shape (..., 2),
    broadcasting over the common shape of v and x.
    """

    diffusion: Callable
    convection: Callable
    reaction: float

    @classmethod
    def constant(cls, a, b, reaction=0.0):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)

        def diff(v, x):
            v = np.asarray(v, dtype=float)
            return np.broadcast_to(a, v.shape + (2, 2))

        def conv(v, x):
            v = np.asarray(v, dtype=float)
            return np.broadcast_to(b, v.shape + (2,))

        return cls(diffusion=diff, convection=conv, reaction=float(reaction))

    def min_diffusion_eigenvalue(self, v, x):
        """Smallest eigenvalue of A over the sample points (PD check)."""
        a = np.asarray(self.diffusion(np.asarray(v, float), np.asarray(x, float)))
        tr = a[..., 0, 0] + a[..., 1, 1]
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        disc = np.sqrt(np.maximum(0.25 * tr**2 - det, 0.0))
        return float(np.min(0.5 * tr - disc))
