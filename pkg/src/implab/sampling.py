"""Deterministic low-discrepancy sample sets.

All sup-norms over compacts are approximated on fixed seeded samples so
that every experiment is reproducible bit-for-bit; the seed only rotates
the golden-angle phases.
"""

from __future__ import annotations

import math

import numpy as np

from .fatou import PetalSpec

__all__ = ["golden_seq", "petal_samples", "disk_samples", "segment_samples"]

_GOLDEN = 0.6180339887498949


def golden_seq(count: int, seed: int = 0, stride: float = _GOLDEN):
    """Equidistributed points of [0, 1): the rotation orbit of the seed."""
    offset = (seed * 0.7548776662466927) % 1.0  # plastic-ratio scramble
    return ((np.arange(count) + 0.5) * stride + offset) % 1.0


def petal_samples(spec: PetalSpec, eta: complex, count: int, seed: int = 0,
                  t_lo: float = 0.15, t_hi: float = 0.85, shrink: float = 0.97):
    """Points spread through a petal, away from its boundary.

    Radial placement is area-uniform in the x-disk; the tangential
    modulus sweeps [t_lo, t_hi] of the level C.
    """
    u = golden_seq(count, seed)
    v = golden_seq(count, seed + 1, stride=0.3819660112501051)
    w = golden_seq(count, seed + 2, stride=0.2548776662466927)
    center = -spec.r if spec.orientation == "incoming" else spec.r
    x = center + spec.r * shrink * np.sqrt(u) * np.exp(2j * math.pi * v)
    tmag = spec.C * (t_lo + (t_hi - t_lo) * w)
    t = tmag * np.exp(2j * math.pi * golden_seq(count, seed + 3))
    base = -x if spec.orientation == "incoming" else x
    y = t * np.exp(eta * np.log(base))
    return x, y


def disk_samples(center: complex, radius: float, count: int, seed: int = 0):
    u = golden_seq(count, seed)
    v = golden_seq(count, seed + 1, stride=0.3819660112501051)
    return center + radius * np.sqrt(u) * np.exp(2j * math.pi * v)


def segment_samples(a: complex, b: complex, count: int):
    ts = (np.arange(count) + 0.5) / count
    return a + (b - a) * ts
