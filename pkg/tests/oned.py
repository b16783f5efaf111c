"""Independent 1-D oracle: the classical transit map of x -> x + x^2.

This is a from-scratch re-implementation of the same limit algorithm in
one variable, kept free of any imports from the package so it can serve
as a cross-check for the 2-D machinery restricted to the invariant line.
"""

import numpy as np

RUNGS = [64 * 2**i for i in range(8)]


def _fit_limit(Xs, ss):
    X = np.asarray(Xs, dtype=complex)
    L = np.log(X)
    A = np.stack(
        [np.ones_like(X), 1 / X, L / X, 1 / X**2, L / X**2, L**2 / X**2,
         1 / X**3, L / X**3],
        axis=1,
    )
    sc = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / sc, np.asarray(ss, dtype=complex), rcond=None)
    return complex(coef[0] / sc[0])


def fatou_in(x0: complex) -> complex:
    """Incoming Fatou coordinate of x -> x + x^2, normalized by the n-limit."""
    x0 = complex(x0)
    npre = 0
    while not (-0.25 < x0.real < 0 and abs(x0 + 0.125) < 0.125 and (-1 / x0).real >= 8):
        x0 = x0 + x0 * x0
        npre += 1
        if npre > 20000:
            raise RuntimeError("not in the parabolic basin")
    X0 = -1.0 / x0
    S = 0j
    comp = 0j
    x = x0
    Xs, ws = [], []
    k = 0
    for n in range(1, RUNGS[-1] + 1):
        x1 = x + x * x
        delta = -x * x * x / (x * x1)
        t = S + (delta - comp)
        comp = (t - S) - (delta - comp)
        S = t
        X = X0 + n + S
        x = -1.0 / X
        if n == RUNGS[k]:
            Xs.append(X)
            ws.append(X - np.log(X) - n)
            k += 1
    return _fit_limit(Xs, ws) - npre


def fatou_out(x0: complex) -> complex:
    """Outgoing Fatou coordinate (via the inverse-orbit construction)."""
    x0 = complex(x0)
    X0 = 1.0 / x0
    S = 0j
    comp = 0j
    x = x0
    Xs, ws = [], []
    k = 0
    for n in range(1, RUNGS[-1] + 1):
        z = x
        for _ in range(60):
            dz = (z + z * z - x) / (1 + 2 * z)
            z = z - dz
            if abs(dz) <= 1e-17 * (1 + abs(z)):
                break
        delta = -z**3 / (z * x)
        t = S + (delta - comp)
        comp = (t - S) - (delta - comp)
        S = t
        X = X0 + n + S
        x = 1.0 / X
        if n == RUNGS[k]:
            Xs.append(X)
            ws.append(X + np.log(X) - n)
            k += 1
    return -_fit_limit(Xs, ws)


def repelling_parametrization(X: complex, guard: float = 1e100):
    """psi_o(X) = p^n((phi_out)^{-1}(X - n)) for the smallest usable shift."""
    X = complex(X)
    n = max(0, int(np.ceil(X.real + max(12.0, abs(X.imag) / 2 + 1))))
    Xd = X - n
    x = -1.0 / Xd
    for _ in range(40):
        x = -1.0 / (Xd - np.log(x))
    slope = None
    for it in range(50):
        r = fatou_out(x) - Xd
        if abs(r) < 1e-12 * (1 + abs(Xd)):
            break
        if slope is None or it % 4 == 3:
            h = 1e-6 * abs(x)
            slope = (fatou_out(x + h) - fatou_out(x)) / h
        x = x - r / slope
    for j in range(n):
        x = x + x * x
        if abs(x) > guard:
            raise OverflowError(f"orbit beyond guard at step {j}")
    return x


def lavaurs_1d(x: complex, sigma: complex) -> complex:
    return repelling_parametrization(fatou_in(x) + sigma)


def basin_code(x: complex, r: float, budget: int, domain: float = 0.5) -> int:
    """1 inside the petal (ever), 2 escaped the domain, 0 budget exhausted."""
    x = complex(x)
    for _ in range(budget + 1):
        if abs(x + r) < r:
            return 1
        if abs(x) > domain:
            return 2
        x = x + x * x
    return 0
