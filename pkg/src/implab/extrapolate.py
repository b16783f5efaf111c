"""Limit extraction for slowly convergent orbit sequences.

Two tools:

* :func:`asymptotic_fit` -- least-squares fit of orbit samples against the
  tail basis ``{1, 1/X, log X/X, ..., log X/X^3}``.  The constant term is
  the limit.  This matches the known expansion of Fatou-type coordinates,
  where corrections decay in the abstract coordinate ``X`` with polynomial
  log factors.
* :func:`neville` -- polynomial extrapolation to 0 on a decreasing
  parameter grid (used for eigenvalue-data limits).
"""

from __future__ import annotations

import numpy as np

from .errors import ExtrapolationUnstable

__all__ = ["asymptotic_fit", "neville", "default_rungs"]

#: geometric ladder of orbit indices at which samples are recorded
def default_rungs(n0: int = 64, levels: int = 8) -> list[int]:
    return [n0 * 2**i for i in range(levels)]


def asymptotic_fit(X, s, nbasis: int = 8):
    """Extract ``lim s`` from samples ``s[r, p]`` taken at coordinates ``X[r, p]``.

    Parameters
    ----------
    X, s : complex arrays of shape (rungs, npoints)
        Abstract coordinate and sample value at each ladder rung.
    nbasis : int
        Number of tail basis functions (max 10); must be <= rungs.

    Returns
    -------
    limit, residual : complex array (npoints,), float array (npoints,)
        Fitted limits and per-point root-mean-square fit residuals.
    """
    X = np.asarray(X, dtype=complex)
    s = np.asarray(s, dtype=complex)
    rungs, npts = X.shape
    if nbasis > rungs:
        raise ValueError(f"nbasis={nbasis} exceeds available rungs={rungs}")
    out = np.empty(npts, dtype=complex)
    resid = np.empty(npts, dtype=float)
    for p in range(npts):
        Xp = X[:, p]
        L = np.log(Xp)
        cols = [
            np.ones_like(Xp),
            1 / Xp,
            L / Xp,
            1 / Xp**2,
            L / Xp**2,
            L**2 / Xp**2,
            1 / Xp**3,
            L / Xp**3,
            L**2 / Xp**3,
            L**3 / Xp**3,
        ]
        A = np.stack(cols[:nbasis], axis=1)
        scale = np.abs(A).max(axis=0)
        coef, *_ = np.linalg.lstsq(A / scale, s[:, p], rcond=None)
        out[p] = coef[0] / scale[0]
        fit = (A / scale) @ coef
        resid[p] = float(np.sqrt(np.mean(np.abs(fit - s[:, p]) ** 2)))
    return out, resid


def neville(nodes, values):
    """Polynomial extrapolation of ``values`` at ``nodes`` to node 0.

    Intended for limits of eigenvalue data along a decreasing parameter
    grid.  Raises :class:`ExtrapolationUnstable` when the grid has fewer
    than 3 nodes or when the tableau corrections grow instead of shrink.
    """
    nodes = [complex(t) for t in nodes]
    vals = [complex(v) for v in values]
    m = len(nodes)
    if m < 3 or len(vals) != m:
        raise ExtrapolationUnstable("need at least 3 grid nodes")
    tab = list(vals)
    corrections = []
    for level in range(1, m):
        new = []
        for i in range(m - level):
            t0, t1 = nodes[i], nodes[i + level]
            if t0 == t1:
                raise ExtrapolationUnstable("repeated grid nodes")
            # value at 0 of the interpolant through (t0..t1)
            new.append((t1 * tab[i] - t0 * tab[i + 1]) / (t1 - t0))
        corrections.append(abs(new[0] - tab[0]))
        tab = new
    # diverging corrections signal an unstable extrapolation; growth inside
    # the noise floor of an (exactly constant) sequence is fine
    if len(corrections) >= 2 and corrections[-1] > 10.0 * (corrections[0] + 1e-300) \
            and corrections[-1] > 1e-4 * (abs(tab[0]) + 1.0):
        raise ExtrapolationUnstable(
            f"tableau corrections diverge: {corrections}"
        )
    err = corrections[-1] if corrections else 0.0
    return tab[0], err
