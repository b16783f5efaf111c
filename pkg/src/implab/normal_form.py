"""Algebraic preprocessing: characteristic directions, formal invariant
curves, and the coordinate changes that bring a germ (or a raw family)
to the canonical coordinates consumed by the rest of the package.

Curve solving keeps exact coefficients exact (ints, Fractions,
ExactComplex) so resonance detection never depends on rounding.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ExactComplex, Jet1, Jet3, jet3_div_x2e2, jet3_div_y
from .errors import DegenerateSplitting, ResonanceObstruction
from .family import GermFamily

__all__ = [
    "HomogeneousQuadratic",
    "CharacteristicDirection",
    "GermJet",
    "RawFamily",
    "TransformStep",
    "TransformRecord",
    "characteristic_directions",
    "formal_invariant_curve",
    "straighten",
    "normalize_family",
]


# ---------------------------------------------------------------------------
# quadratic part and characteristic directions


@dataclass(frozen=True)
class HomogeneousQuadratic:
    """P2: C^2 -> C^2, coefficients of (x^2, xy, y^2) per output slot."""

    first: tuple  # (p20, p11, p02)
    second: tuple  # (q20, q11, q02)

    def __post_init__(self):
        if all(abs(complex(c)) == 0 for c in self.first + self.second):
            raise ValueError("P2 must not vanish identically")

    def __call__(self, v):
        x, y = v
        p20, p11, p02 = self.first
        q20, q11, q02 = self.second
        return (
            p20 * x * x + p11 * x * y + p02 * y * y,
            q20 * x * x + q11 * x * y + q02 * y * y,
        )


@dataclass(frozen=True)
class CharacteristicDirection:
    v: tuple  # projective representative, largest-modulus entry 1
    lam: complex
    alpha: complex | None  # director; None for degenerate directions

    @property
    def degenerate(self) -> bool:
        return abs(self.lam) <= 1e-10


def characteristic_directions(P2: HomogeneousQuadratic):
    """All projective solutions of P2(v) || v, with directors attached.

    The solutions are the roots of the homogeneous cubic
    x P2_2(x,y) - y P2_1(x,y), plus [0:1] when it occurs.
    """
    p20, p11, p02 = (complex(c) for c in P2.first)
    q20, q11, q02 = (complex(c) for c in P2.second)
    c0, c1, c2, c3 = q20, q11 - p20, q02 - p11, -p02
    scale = max(abs(c0), abs(c1), abs(c2), abs(c3))
    out = []

    def push(v, lam, chart):
        lam = complex(lam)
        alpha = None
        if abs(lam) > 1e-10 and chart is not None:
            if chart == "x":
                t0 = v[1] / v[0]
                rp = (q11 - p20) + 2 * (q02 - p11) * t0 - 3 * p02 * t0 * t0
            else:
                s0 = v[0] / v[1]
                rp = (p11 - q02) + 2 * (p20 - q11) * s0 - 3 * q20 * s0 * s0
            alpha = rp / lam
        # normalize so the largest-modulus entry is exactly 1; P2 is
        # quadratic, so the factor rescales with the representative
        if abs(v[0]) >= abs(v[1]):
            c = v[0]
        else:
            c = v[1]
        out.append(CharacteristicDirection((v[0] / c, v[1] / c), lam / c, alpha))

    if scale == 0:
        # dicritical: P2(v) || v everywhere; report the coordinate
        # directions, where the generic director theory does not apply
        push((1.0 + 0j, 0j), p20, None)
        push((0j, 1.0 + 0j), q02, None)
        return out

    coeffs = [c3, c2, c1, c0]
    while coeffs and abs(coeffs[0]) <= 1e-14 * scale:
        coeffs.pop(0)
    if len(coeffs) > 1:
        for t in np.roots(coeffs):
            t = complex(t)
            lam = p20 + p11 * t + p02 * t * t
            push((1.0 + 0j, t), lam, "x")
    if abs(c3) <= 1e-14 * scale:
        push((0j, 1.0 + 0j), q02, "y")
    return out


# ---------------------------------------------------------------------------
# germ jets


@dataclass
class GermJet:
    """A germ f(x, y) = (f1, f2) tangent to the identity, as jets.

    Only eps-degree-0 monomials are allowed (raw germs carry no parameter).
    """

    f1: Jet3
    f2: Jet3

    def __post_init__(self):
        for j in (self.f1, self.f2):
            if any(k != 0 for (_, _, k) in j.coeffs):
                raise ValueError("raw germ jets must not involve eps")
        if complex(self.f1.coeff(1, 0, 0)) != 1 or complex(self.f2.coeff(0, 1, 0)) != 1:
            raise ValueError("germ must be tangent to the identity")
        if abs(complex(self.f1.coeff(0, 1, 0))) > 0 or abs(complex(self.f2.coeff(1, 0, 0))) > 0:
            raise ValueError("germ must be tangent to the identity")
        if abs(complex(self.f1.coeff(0, 0, 0))) > 0 or abs(complex(self.f2.coeff(0, 0, 0))) > 0:
            raise ValueError("germ must fix the origin")

    @property
    def order(self) -> int:
        return self.f1.order

    def quadratic_part(self) -> HomogeneousQuadratic:
        return HomogeneousQuadratic(
            (self.f1.coeff(2, 0, 0), self.f1.coeff(1, 1, 0), self.f1.coeff(0, 2, 0)),
            (self.f2.coeff(2, 0, 0), self.f2.coeff(1, 1, 0), self.f2.coeff(0, 2, 0)),
        )


def _eval_at_curve(j3: Jet3, tx: Jet1, ty: Jet1) -> Jet1:
    """Evaluate a bivariate jet on (tx(t), ty(t)); exact when inputs are."""
    order = tx.order
    powx = [Jet1.constant(1, order)]
    powy = [Jet1.constant(1, order)]
    maxi = max((i for (i, _, _) in j3.coeffs), default=0)
    maxj = max((jj for (_, jj, _) in j3.coeffs), default=0)
    for _ in range(maxi):
        powx.append(powx[-1] * tx)
    for _ in range(maxj):
        powy.append(powy[-1] * ty)
    acc = Jet1.zero(order)
    for (i, jj, _), c in j3.coeffs.items():
        acc = acc + powx[i] * powy[jj] * c
    return acc


def _is_exactly_zero(v, tol: float) -> bool:
    if isinstance(v, ExactComplex):
        return v.is_zero()
    from fractions import Fraction

    if isinstance(v, (int, Fraction)):
        return v == 0
    return abs(complex(v)) <= tol


def formal_invariant_curve(f: GermJet, direction: CharacteristicDirection,
                           order: int):
    """Term-by-term solve of f(gamma(t)) = gamma(h(t)) with gamma = (t, zeta).

    Needs the direction rotated to (1, 0) and nondegenerate.  Each degree
    is one linear solve; a vanishing solve coefficient with a nonzero
    right-hand side raises :class:`ResonanceObstruction` carrying the
    degree.  A vanishing obstruction leaves that coefficient free and the
    solve sets it to zero.
    """
    if direction.degenerate:
        raise ValueError("need a nondegenerate characteristic direction")
    if abs(complex(direction.v[0]) - 1) > 1e-12 or abs(complex(direction.v[1])) > 1e-12:
        raise ValueError("rotate coordinates so the direction is (1, 0) first")
    if order + 1 > f.order:
        raise ValueError(
            f"curve order {order} needs germ jets to total order {order + 1}"
        )
    lam = f.f1.coeff(2, 0, 0)
    q11 = f.f2.coeff(1, 1, 0)
    if abs(complex(f.f2.coeff(2, 0, 0))) > 1e-12:
        raise ValueError("(1,0) is not a characteristic direction of this germ")
    W = order + 1  # residuals are read one degree above the solved one
    scale = max(f.f1.max_abs(), f.f2.max_abs(), 1.0)
    tol = 1e-10 * scale
    ident = Jet1.identity(W)
    zeta = Jet1.zero(W)
    for k in range(2, order + 1):
        h = _eval_at_curve(f.f1, ident, zeta)
        resid = _eval_at_curve(f.f2, ident, zeta) - zeta.compose(h)
        rk1 = resid[k + 1]
        ck = q11 - k * lam
        if _is_exactly_zero(ck, tol):
            if _is_exactly_zero(rk1, tol):
                continue  # resonant but unobstructed; leave zeta_k = 0
            raise ResonanceObstruction(k, rk1)
        coeffs = list(zeta.coeffs)
        coeffs[k] = -rk1 / ck
        zeta = Jet1(coeffs, W)
    h = _eval_at_curve(f.f1, ident, zeta).truncate(order)
    return zeta.truncate(order), h


# ---------------------------------------------------------------------------
# transform records


@dataclass
class TransformStep:
    kind: str
    data: dict
    fwd: "callable"
    bwd: "callable"
    eps_fwd: "callable" = field(default=lambda e: e)
    eps_bwd: "callable" = field(default=lambda e: e)


@dataclass
class TransformRecord:
    """Ordered coordinate changes; replays points forwards and backwards.

    ``forward(z, eps)`` carries a point of the original coordinates (with
    the original parameter value) into the normalized ones and returns
    (point, parameter) there; ``backward`` inverts the whole chain.
    """

    steps: list

    def forward(self, z, eps=0j):
        x, y = complex(z[0]), complex(z[1])
        eps = complex(eps)
        for s in self.steps:
            eps = s.eps_fwd(eps)
            x, y = s.fwd(x, y, eps)
        return (x, y), eps

    def backward(self, z, eps=0j):
        x, y = complex(z[0]), complex(z[1])
        eps = complex(eps)
        for s in reversed(self.steps):
            x, y = s.bwd(x, y, eps)
            eps = s.eps_bwd(eps)
        return (x, y), eps


def _step_linear_rescale(lam: complex) -> TransformStep:
    lam = complex(lam)
    return TransformStep(
        "linear_rescale",
        {"factor": lam},
        lambda x, y, e: (lam * x, y),
        lambda x, y, e: (x / lam, y),
    )


def _step_curve_flatten(J: Jet1) -> TransformStep:
    return TransformStep(
        "curve_flatten",
        {"jet": J},
        lambda x, y, e: (x, y - complex(J(x))),
        lambda x, y, e: (x, y + complex(J(x))),
    )


def _step_param_rescale(mu: complex) -> TransformStep:
    mu = complex(mu)
    return TransformStep(
        "param_rescale",
        {"factor": mu},
        lambda x, y, e: (x, y),
        lambda x, y, e: (x, y),
        eps_fwd=lambda e: mu * e,
        eps_bwd=lambda e: e / mu,
    )


def _step_affine_x(A: Jet1, B: Jet1) -> TransformStep:
    return TransformStep(
        "affine_x",
        {"scale": A, "shift": B},
        lambda x, y, e: (complex(A(e)) * x + complex(B(e)), y),
        lambda x, y, e: ((x - complex(B(e))) / complex(A(e)), y),
    )


def _step_shear(coeff: complex, m: int) -> TransformStep:
    coeff = complex(coeff)
    return TransformStep(
        "poly_shear",
        {"coeff": -coeff, "m": m},
        lambda x, y, e: (x, y - coeff * x ** (m - 1) * (x * x + e * e)),
        lambda x, y, e: (x, y + coeff * x ** (m - 1) * (x * x + e * e)),
    )


# ---------------------------------------------------------------------------
# straightening a single germ


def _shift_x_down(j3: Jet3, power: int) -> Jet3:
    out = {}
    for (i, jj, k), c in j3.coeffs.items():
        if i < power:
            raise ValueError(f"jet not divisible by x^{power}")
        out[(i - power, jj, k)] = c
    return Jet3(out, j3.order)


def _clean_small(j3: Jet3, tol: float) -> Jet3:
    out = {
        idx: c
        for idx, c in j3.coeffs.items()
        if isinstance(c, ExactComplex) or abs(complex(c)) > tol
    }
    return Jet3(out, j3.order)


def straighten(f: GermJet, direction: CharacteristicDirection):
    """Conjugate a germ with invariant-curve data to canonical shape.

    Returns an eps-independent :class:`GermFamily` together with the
    transform record (linear rescale to unit quadratic coefficient, then
    flattening of the truncated invariant curve).
    """
    steps = []
    lam = complex(f.f1.coeff(2, 0, 0))
    order = f.order
    xv, yv, ev = (Jet3.variable(n, order) for n in ("x", "y", "e"))
    f1, f2 = f.f1, f.f2
    if lam != 1.0:
        f1 = f1.subst(xv * (1.0 / lam), yv, ev) * lam
        f2 = f2.subst(xv * (1.0 / lam), yv, ev)
        steps.append(_step_linear_rescale(lam))
    g = GermJet(f1, f2)
    eta = complex(g.f2.coeff(1, 1, 0))
    m = math.floor(eta.real)
    zeta, _h = formal_invariant_curve(
        g, CharacteristicDirection((1.0 + 0j, 0j), 1.0 + 0j, eta - 1.0),
        min(m + 2, order - 1),
    )
    Jcoeffs = [complex(c) for c in zeta.coeffs]
    J = Jet1(Jcoeffs, zeta.order)
    Jx = Jet3({(i, 0, 0): c for i, c in enumerate(Jcoeffs) if c != 0}, order)
    sy = yv + Jx
    g1 = f1.subst(xv, sy, ev)
    g2 = f2.subst(xv, sy, ev) - J(g1)
    steps.append(_step_curve_flatten(J))

    scale = max(g1.max_abs(), g2.max_abs(), 1.0)
    g1 = _clean_small(g1, 1e-13 * scale)
    g2 = _clean_small(g2, 1e-13 * scale)
    g1_x = Jet3({idx: c for idx, c in g1.coeffs.items() if idx[1] == 0}, order)
    a = _shift_x_down(g1_x - xv, 2)
    b = jet3_div_y(g1 - g1_x)
    d = Jet3({idx: c for idx, c in g2.coeffs.items() if idx[1] == 0}, order)
    c = jet3_div_y(g2 - d - yv)
    fam = GermFamily(a, b, c, d)
    return fam, TransformRecord(steps)


# ---------------------------------------------------------------------------
# normalizing a raw family


@dataclass
class RawFamily:
    """Family (p_eps(x) + y b, y + y c + d) before fixed-point alignment."""

    p_series: Jet3
    b_series: Jet3
    c_series: Jet3
    d_series: Jet3
    gamma: float | None = None
    domain_radius: float = 0.5


def _poly_in_w(p: Jet3, order: int):
    """(p(eps W, eps) - eps W) / eps^2 as {W-degree: Jet1 in eps}."""
    buckets: dict[int, list] = {}
    for (i, jj, k), c in p.coeffs.items():
        if jj != 0:
            raise ValueError("the 1-D part must not involve y")
        if (i, k) == (1, 0):
            continue  # the identity term cancels
        tot = i + k
        if tot < 2:
            raise ValueError(
                "family must fix the origin to first order in eps "
                f"(offending monomial x^{i} eps^{k})"
            )
        buckets.setdefault(i, [0] * (order + 1))
        if tot - 2 <= order:
            buckets[i][tot - 2] = buckets[i][tot - 2] + complex(c)
    return {i: Jet1(cs, order) for i, cs in buckets.items()}


def _eval_poly_jets(poly: dict[int, Jet1], W: Jet1, order: int) -> Jet1:
    acc = Jet1.zero(order)
    powW = Jet1.constant(1, order)
    maxdeg = max(poly, default=0)
    for i in range(maxdeg + 1):
        if i in poly:
            acc = acc + poly[i] * powW
        powW = powW * W
    return acc


def normalize_family(raw: RawFamily):
    """Align the splitting fixed points at +-i eps and fix the d-order.

    Implements the parameter rescale, the affine change sending the two
    1-D fixed points to +-i eps, and the polynomial shear that removes the
    obstructing x^{m+2} term of d.  Returns the normalized family and the
    transform record.
    """
    order = raw.p_series.order
    p = raw.p_series
    if complex(p.coeff(0, 0, 0)) != 0 or complex(p.coeff(1, 0, 0)) != 1:
        raise ValueError("p_eps must be x + O(2)")
    if abs(complex(p.coeff(2, 0, 0)) - 1) > 1e-12:
        raise ValueError("p_0 must have unit quadratic coefficient (straighten first)")

    poly = _poly_in_w(p, order)
    a11 = complex(poly.get(1, Jet1.zero(order))[0]) if 1 in poly else 0j
    a02 = complex(poly.get(0, Jet1.zero(order))[0]) if 0 in poly else 0j
    disc = cmath.sqrt(a11 * a11 - 4 * a02)
    if abs(disc) <= 1e-10:
        raise DegenerateSplitting(
            f"fixed points split with equal speed (w'+ - w'- = {disc})"
        )

    dpoly = {i - 1: c * i for i, c in poly.items() if i >= 1}

    def newton_root(w0: complex) -> Jet1:
        W = Jet1.constant(w0, order)
        for _ in range(order.bit_length() + 3):
            val = _eval_poly_jets(poly, W, order)
            dval = _eval_poly_jets(dpoly, W, order)
            W = W - val / dval
        return W

    Wp = newton_root((-a11 + disc) / 2)
    Wm = newton_root((-a11 - disc) / 2)

    steps = []
    mu = disc / 2j
    b3, c3, d3 = raw.b_series, raw.c_series, raw.d_series
    if abs(mu - 1.0) > 1e-14:
        inv = 1.0 / mu

        def scale_eps_jet3(j: Jet3) -> Jet3:
            return Jet3(
                {idx: c * inv ** idx[2] for idx, c in j.coeffs.items()}, j.order
            )

        def scale_eps_jet1(j: Jet1) -> Jet1:
            return Jet1([c * inv**k for k, c in enumerate(j.coeffs)], j.order)

        p = scale_eps_jet3(p)
        b3 = scale_eps_jet3(b3)
        c3 = scale_eps_jet3(c3)
        d3 = scale_eps_jet3(d3)
        # w = eps W, so the rescaled slope carries a global 1/mu as well
        Wp = scale_eps_jet1(Wp) * inv
        Wm = scale_eps_jet1(Wm) * inv
        steps.append(_step_param_rescale(mu))

    # affine change N_eps(x) = A(eps) x + B(eps) sending w_+- to +-i eps
    diff = Wp - Wm
    A = Jet1.constant(2j, order) * diff.recip()
    wp = Jet1([0] + [complex(c) for c in Wp.coeffs[:-1]], order)  # eps * W_+
    iota = Jet1([0, 1j] + [0] * (order - 1), order)  # i eps
    Bj = iota - A * wp

    xv, yv, ev = (Jet3.variable(n, order) for n in ("x", "y", "e"))

    def jet1_to_eps3(j: Jet1) -> Jet3:
        return Jet3({(0, 0, k): c for k, c in enumerate(j.coeffs) if c != 0}, order)

    ident_affine = (
        max(abs(c) for c in (A - Jet1.constant(1, order)).coeffs) <= 1e-14
        and max(abs(c) for c in Bj.coeffs) <= 1e-14
    )
    if ident_affine:
        p_hat, b_hat, c_hat, d_hat = p, b3, c3, d3
    else:
        A3, B3 = jet1_to_eps3(A), jet1_to_eps3(Bj)
        Ainv3 = jet1_to_eps3(A.recip())
        sub_x = xv * Ainv3 - B3 * Ainv3
        p_hat = p.subst(sub_x, yv, ev) * A3 + B3
        b_hat = b3.subst(sub_x, yv, ev) * A3
        c_hat = c3.subst(sub_x, yv, ev)
        d_hat = d3.subst(sub_x, yv, ev)
        steps.append(_step_affine_x(A, Bj))

    eta = complex(c_hat.coeff(1, 0, 0))
    m = math.floor(eta.real)
    dd = complex(d_hat.coeff(m + 2, 0, 0))
    shear_c = dd / (m + 1 - eta)
    x2e2 = xv * xv + ev * ev

    if shear_c != 0:
        s_jet = Jet3({(m - 1, 0, 0): shear_c}, order) * x2e2
        y_s = yv + s_jet
        bh_s = b_hat.subst(xv, y_s, ev)
        ch_s = c_hat.subst(xv, y_s, ev)
        G1 = p_hat + y_s * bh_s
        Y1 = y_s + y_s * ch_s + d_hat
        # subtract the shear at the image point
        powg = [Jet3.constant(1, order)]
        for _ in range(m + 1):
            powg.append(powg[-1] * G1)
        sG1 = powg[m - 1] * (powg[2] + ev * ev * powg[0]) * shear_c
        G2 = Y1 - sG1
        steps.append(_step_shear(shear_c, m))
    else:
        G1 = p_hat + yv * b_hat
        G2 = yv + yv * c_hat + d_hat

    scale = max(G1.max_abs(), G2.max_abs(), 1.0)
    G1 = _clean_small(G1, 1e-12 * scale)
    G2 = _clean_small(G2, 1e-12 * scale)
    G1_x = Jet3({idx: c for idx, c in G1.coeffs.items() if idx[1] == 0}, order)
    a_new, rem = jet3_div_x2e2(G1_x - xv)
    if rem.max_abs() > 1e-9 * scale:
        raise ArithmeticError(
            f"fixed points not aligned at +-i eps (division remainder {rem.max_abs():.2e})"
        )
    b_new = jet3_div_y(G1 - G1_x)
    d_new = Jet3({idx: c for idx, c in G2.coeffs.items() if idx[1] == 0}, order)
    c_new = jet3_div_y(G2 - d_new - yv)
    fam = GermFamily(
        a_new, b_new, c_new, d_new,
        gamma=raw.gamma, domain_radius=raw.domain_radius,
    )
    return fam, TransformRecord(steps)
