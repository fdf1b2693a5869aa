"""Step-function scaling models, MRA axiom checks, low-pass filters m0 and
their QMF-type normalisations.

Three models are provided:

* ``HaarLine``: cells x^nu 1_(k, k+1] on the half line, measure x dx.
* ``AngularSector``: cells (k, k+1] x [N alpha, (N+1) alpha) in the plane,
  alpha = 2 pi / m.
* ``QAnnulus``: annuli q^{k+1} < |z| <= q^k.

Cells are left-open in the radius so that Jackson nodes q^k belong to exactly
one annulus.  Generator index k always labels the radial cell starting at k
(or at q^{k+1} for the annulus).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import special
from .special import DomainError, check_q

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MRAConstants:
    nu: int
    q: float
    c: float
    c_q: float
    d_q: float
    q_number: float

    @classmethod
    def build(cls, nu, q):
        check_q(q)
        if nu < 1:
            raise ValueError("nu must be >= 1")
        return cls(
            nu=nu,
            q=q,
            c=nu / (nu + 2),
            c_q=(1 - q**nu) / (1 - q ** (nu + 2)),
            d_q=1 / (1 - q ** (2 * (nu + 1))),
            q_number=(1 - q ** (2 * (nu + 1))) / (1 - q**2),
        )

    def identity_residuals(self):
        """Residuals of the defining identities (all should be ~eps)."""
        q, nu = self.q, self.nu
        return {
            "c": abs(self.c - nu / (nu + 2)),
            "c_q": abs(self.c_q - (1 - q**nu) / (1 - q ** (nu + 2))),
            "d_q": abs(self.d_q - 1 / (1 - q ** (2 * nu + 2))),
            "markov": abs(self.d_q - 1 / ((1 - q**2) * self.q_number)) / self.d_q,
        }


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HaarLine:
    nu: float

    kind = "haar_line"

    @property
    def weight_power(self):
        return self.nu

    @property
    def density_power(self):
        return 1.0

    @property
    def angular(self):
        return False

    def sectors(self):
        return [(0.0, 1.0)]

    def radial_cell(self, k):
        if k < 0:
            raise ValueError("HaarLine cells need k >= 0")
        return float(k), float(k + 1)

    def cells_covering(self, lo, hi, scale=1.0):
        return [(k * scale, (k + 1) * scale) for k in range(0, int(math.ceil(hi / scale)))]


@dataclass(frozen=True)
class AngularSector:
    nu: int
    m: int | None = None

    kind = "angular_sector"

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", self.nu + 1)
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def alpha_over_pi(self):
        """alpha / pi stored exactly; alpha * m == 2 pi."""
        return Fraction(2, self.m)

    @property
    def alpha(self):
        return float(self.alpha_over_pi) * math.pi

    @property
    def weight_power(self):
        return 0.0

    @property
    def density_power(self):
        return self.nu + 1.0

    @property
    def angular(self):
        return True

    def sectors(self):
        return [(N * self.alpha, (N + 1) * self.alpha) for N in range(self.m)]

    def radial_cell(self, k):
        if k < 0:
            raise ValueError("sector cells need k >= 0")
        return float(k), float(k + 1)

    def cells_covering(self, lo, hi, scale=1.0):
        return [(k * scale, (k + 1) * scale) for k in range(0, int(math.ceil(hi / scale)))]


@dataclass(frozen=True)
class QAnnulus:
    nu: int
    q: float

    kind = "q_annulus"

    def __post_init__(self):
        check_q(self.q)

    @property
    def weight_power(self):
        return 0.0

    @property
    def density_power(self):
        return self.nu + 1.0

    @property
    def angular(self):
        return True

    def sectors(self):
        return [(0.0, TWO_PI)]

    def radial_cell(self, k):
        return self.q ** (k + 1), self.q**k

    def cells_covering(self, lo, hi, scale=1.0):
        lq = math.log(self.q)
        k_hi = int(math.floor(math.log(hi / scale) / lq))
        k_lo = int(math.ceil(math.log(lo / scale) / lq))
        return [(scale * self.q ** (k + 1), scale * self.q**k) for k in range(k_hi, k_lo + 1)]

    def exact_refinement_shift(self):
        """s with nu+1 = q^{-s} if the annuli are closed under scaling by nu+1."""
        s = -math.log(self.nu + 1) / math.log(self.q)
        si = round(s)
        return si if abs(s - si) < 1e-12 else None


def scaling_model(variant, nu, q=None, m=None):
    if variant == "haar_line":
        return HaarLine(nu)
    if variant == "angular_sector":
        return AngularSector(nu, m)
    if variant == "q_annulus":
        return QAnnulus(nu, q)
    raise ValueError(f"unknown scaling model {variant!r}")


# ---------------------------------------------------------------------------
# Step functions: r^p * sum_c v_c 1_{(r0, r1] x [t0, t1)}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepFunction:
    r0: np.ndarray
    r1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    values: np.ndarray
    power: float = 0.0

    def __post_init__(self):
        for name in ("r0", "r1", "t0", "t1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))

    @classmethod
    def zero(cls, power=0.0):
        e = np.empty(0)
        return cls(e, e, e, e, e, power)

    def __add__(self, other):
        if self.power != other.power:
            raise ValueError("weight powers differ")
        cat = lambda a, b: np.concatenate([a, b])  # noqa: E731
        return StepFunction(
            cat(self.r0, other.r0), cat(self.r1, other.r1), cat(self.t0, other.t0),
            cat(self.t1, other.t1), cat(self.values, other.values), self.power,
        )

    def scaled(self, c):
        return StepFunction(self.r0, self.r1, self.t0, self.t1, self.values * c, self.power)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def __call__(self, r, theta=0.0):
        r = np.asarray(r, dtype=float)
        th = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
        out = np.zeros(r.shape, dtype=np.complex128)
        for a, b, c, d, v in zip(self.r0, self.r1, self.t0, self.t1, self.values):
            out += v * ((r > a) & (r <= b) & (th >= c) & (th < d))
        with np.errstate(invalid="ignore"):
            w = np.where(r > 0, r**self.power, 0.0 if self.power > 0 else 1.0)
        return out * w


def generator(model, k, N=0, level=0):
    """U^level applied to the (k, N) generator (values carry (nu+1)^{-level/2})."""
    r0, r1 = model.radial_cell(k)
    t0, t1 = model.sectors()[N % len(model.sectors())]
    f = StepFunction([r0], [r1], [t0], [t1], [1.0], model.weight_power)
    return scale_step(f, model.nu, level)


def scale_step(f, nu, j):
    """(U^j f)(z) = (nu+1)^{-j/2} f(z / (nu+1)^j) on a step function."""
    s = float(nu + 1) ** j
    # r^p factor: (r/s)^p = r^p s^{-p}
    return StepFunction(f.r0 * s, f.r1 * s, f.t0, f.t1, f.values * s ** (-0.5 - f.power), f.power)


def _radial_integral(e, r0, r1, radial):
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    if radial[0] == "lebesgue":
        half = 0.5 * (r1 - r0)
        x = 0.5 * (r0 + r1)[..., None] + half[..., None] * _GL_X
        with np.errstate(divide="ignore"):
            vals = np.where(x > 0, x**e, 0.0)
        return half * (vals @ _GL_W)
    if radial[0] == "jackson":
        q = radial[1]
        out = np.zeros(np.broadcast(r0, r1).shape)
        lq = math.log(q)
        flat0, flat1 = np.broadcast_arrays(r0, r1)
        res = out.ravel()
        for i, (a, b) in enumerate(zip(flat0.ravel(), flat1.ravel())):
            if b <= a:
                continue
            k_lo = int(math.ceil(math.log(b) / lq - 1e-12))
            k_hi = int(math.floor(math.log(a) / lq + 1e-12)) if a > 0 else k_lo + 4000
            terms = []
            for k in range(k_lo, k_hi + 1):
                x = q**k
                if a < x <= b:
                    terms.append((1 - q) * x * x**e)
                if x**(e + 1) < 1e-300:
                    break
            res[i] = math.fsum(terms)
        return res.reshape(out.shape)
    raise ValueError(f"unknown radial measure {radial!r}")


def _angular_integral(t0, t1, angular, nu):
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    if angular == "none":
        return np.ones(np.broadcast(t0, t1).shape)
    if angular == "plain":
        return t1 - t0
    if angular == "complex":
        half = 0.5 * (t1 - t0)
        th = 0.5 * (t0 + t1)[..., None] + half[..., None] * _GL_X
        return half * (np.exp(1j * (nu + 1) * th) @ _GL_W)
    raise ValueError(f"unknown angular measure {angular!r}")


def inner_product(model, f, g, radial=("lebesgue",), angular=None):
    """<f|g> = int conj(f) g r^s dr dtheta over cell overlaps, by 16-point
    Gauss-Legendre in r and theta (or a Jackson sum in r).

    ``angular`` is "plain" (dtheta), "complex" (e^{i(nu+1)theta} dtheta) or
    "none" (line model); default "plain" for planar models.
    """
    angular = angular or ("plain" if model.angular else "none")
    if f.values.size == 0 or g.values.size == 0:
        return 0j
    lo = np.maximum(f.r0[:, None], g.r0[None, :])
    hi = np.minimum(f.r1[:, None], g.r1[None, :])
    tlo = np.maximum(f.t0[:, None], g.t0[None, :])
    thi = np.minimum(f.t1[:, None], g.t1[None, :])
    mask = (hi > lo) & (thi > tlo)
    if not mask.any():
        return 0j
    e = f.power + g.power + model.density_power
    rad = _radial_integral(e, lo[mask], hi[mask], radial)
    ang = _angular_integral(tlo[mask], thi[mask], angular, model.nu)
    coef = np.conj(f.values)[:, None] * g.values[None, :]
    return complex(np.sum(coef[mask] * rad * ang))


def difference_norm(model, f, g):
    """||f - g|| in the positive measure, on the common refinement of cells
    (no cancellation between large terms)."""
    if f.power != g.power:
        raise ValueError("weight powers differ")
    d = f - g
    if d.values.size == 0:
        return 0.0
    redges = np.unique(np.concatenate([d.r0, d.r1]))
    tedges = np.unique(np.concatenate([d.t0, d.t1]))
    rm = 0.5 * (redges[:-1] + redges[1:])
    tm = 0.5 * (tedges[:-1] + tedges[1:])
    R, Tm = np.meshgrid(rm, tm, indexing="ij")
    vals = np.zeros(R.shape, dtype=np.complex128)
    for a, b, c, e, v in zip(d.r0, d.r1, d.t0, d.t1, d.values):
        vals += v * ((R > a) & (R <= b) & (Tm >= c) & (Tm < e))
    rad = _radial_integral(2 * f.power + model.density_power, redges[:-1], redges[1:], ("lebesgue",))
    ang = np.diff(tedges) if model.angular else np.ones(tm.size)
    return math.sqrt(max(0.0, math.fsum((np.abs(vals) ** 2 * rad[:, None] * ang[None, :]).ravel().tolist())))


# ---------------------------------------------------------------------------
# Closed forms for the generator pairings
# ---------------------------------------------------------------------------


def sector_pairing_closed_form(nu, alpha, k=0, N=0, jackson_q=None):
    """delta_{k0} delta_{N0} * R * (e^{i alpha (nu+1)} - 1)/(i (nu+1)) where
    R = 1/(nu+2) (Lebesgue radius) or (1-q)/(1-q^{nu+2}) (Jackson radius)."""
    if k != 0 or N != 0:
        return 0j
    R = 1 / (nu + 2) if jackson_q is None else (1 - jackson_q) / (1 - jackson_q ** (nu + 2))
    return R * (np.exp(1j * alpha * (nu + 1)) - 1) / (1j * (nu + 1))


def sector_pairing(model, k, N, jackson_q=None):
    """<phi^{(k,N)} | phi^{(0,0)}> with the weight r^{nu+1} e^{i(nu+1)theta},
    radial part by quadrature or Jackson sum."""
    radial = ("lebesgue",) if jackson_q is None else ("jackson", jackson_q)
    return inner_product(model, generator(model, k, N), generator(model, 0, 0), radial, "complex")


# ---------------------------------------------------------------------------
# Scale and translation on sampled functions
# ---------------------------------------------------------------------------


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class SampledFunction:
    """Samples on nodes with quadrature weights for the plain L^2(dx) norm."""

    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if not (self.nodes.shape == self.values.shape == self.weights.shape):
            raise ValueError("nodes, values and weights must have equal length")

    @classmethod
    def geometric(cls, func, ratio, i_min, i_max, per_step=1):
        """Nodes ratio^{i/per_step}; weights x ln(ratio)/per_step (log-uniform rule)."""
        s = np.arange(i_min * per_step, i_max * per_step + 1) / per_step
        x = float(ratio) ** s
        return cls(x, func(x), x * math.log(ratio) / per_step)

    def norm(self):
        return math.sqrt(math.fsum((self.weights * np.abs(self.values) ** 2).tolist()))

    def resample(self, nodes, weights):
        """Linear interpolation onto other nodes (zero outside)."""
        re = np.interp(nodes, self.nodes, self.values.real, left=0.0, right=0.0)
        im = np.interp(nodes, self.nodes, self.values.imag, left=0.0, right=0.0)
        return SampledFunction(nodes, re + 1j * im, weights)


def scale_operator(xi, nu, j, target=None, interpolate=False):
    """U^j xi with (U xi)(x) = (nu+1)^{-1/2} xi(x/(nu+1)).

    The samples move with the dilated nodes, so the discrete norm is preserved
    exactly.  With ``target`` the result is returned on that node set, which
    must be closed under the dilation unless ``interpolate`` is set.
    """
    s = float(nu + 1) ** j
    out = SampledFunction(xi.nodes * s, xi.values * s ** -0.5, xi.weights * s)
    if target is None:
        return out
    nodes, weights = target
    idx = np.searchsorted(nodes, out.nodes)
    idx = np.clip(idx, 0, len(nodes) - 1)
    on_grid = np.isclose(nodes[idx], out.nodes, rtol=1e-13, atol=0.0)
    if on_grid.all():
        vals = np.zeros(len(nodes), dtype=np.complex128)
        vals[idx] = out.values
        return SampledFunction(nodes, vals, weights)
    if not interpolate:
        raise GridError("dilated nodes fall off the target grid; enable interpolation")
    return out.resample(nodes, weights)


def translate_operator(xi, k):
    """(T^k xi)(x) = xi(x - k): the samples move with the shifted nodes."""
    return SampledFunction(xi.nodes + k, xi.values, xi.weights)


# ---------------------------------------------------------------------------
# MRA axiom report
# ---------------------------------------------------------------------------


def _test_function(model):
    if model.angular:
        return lambda r, th: np.exp(-r * r) * (1 + 0.5 * np.cos(th))
    return lambda r, th: np.exp(-r * r) * (1 + r)


def _bump(model):
    def f(r, th):
        s = (r - 0.3) / 1.4
        inside = (s > 0) & (s < 1)
        out = np.zeros_like(r)
        out[inside] = np.exp(-1.0 / (s[inside] * (1 - s[inside])))
        return out * ((1 + 0.5 * np.sin(th)) if model.angular else 1.0)

    return f


def _cell_quadrature(model, r0, r1, t0, t1):
    # tensor GL nodes on one cell, weights include the positive density
    rx = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * _GL_X
    rw = 0.5 * (r1 - r0) * _GL_W * rx**model.density_power
    if model.angular:
        tx = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * _GL_X
        tw = 0.5 * (t1 - t0) * _GL_W
    else:
        tx, tw = np.zeros(1), np.ones(1)
    R, T = np.meshgrid(rx, tx, indexing="ij")
    return R, T, rw[:, None] * tw[None, :]


def projection_stats(model, f, level, r_lo=1e-6, r_hi=7.0):
    """Norm of P_{V_level} f and of f - P f (cellwise Gauss-Legendre)."""
    scale = float(model.nu + 1) ** level
    proj2, err2 = [], []
    for r0, r1 in model.cells_covering(r_lo, r_hi, scale):
        # sub-panels keep the quadrature accurate on wide coarse cells
        nsub = max(1, int(math.ceil((min(r1, r_hi) - r0) / 0.25))) if r0 < r_hi else 1
        edges = np.linspace(r0, r1, nsub + 1)
        for t0, t1 in model.sectors():
            Rs, Ts, Ws = [], [], []
            for a, b in zip(edges[:-1], edges[1:]):
                R, T, W = _cell_quadrature(model, a, b, t0, t1)
                Rs.append(R)
                Ts.append(T)
                Ws.append(W)
            R = np.concatenate(Rs)
            T = np.concatenate(Ts)
            W = np.concatenate(Ws)
            g = R**model.weight_power
            gg = np.sum(W * g * g)
            fv = f(R, T)
            c = np.sum(W * g * fv) / gg
            proj2.append(abs(c) ** 2 * gg)
            err2.append(np.sum(W * np.abs(fv - c * g) ** 2))
    return math.sqrt(math.fsum(proj2)), math.sqrt(math.fsum(err2))


@dataclass(frozen=True)
class AxiomReport:
    model: str
    gram_offdiag: float
    gram_diag_dev: float
    refinement_residual: float
    refinement_coeffs: dict
    coarse_projection_norms: tuple
    fine_projection_errors: tuple

    @property
    def coarse_decreasing(self):
        v = self.coarse_projection_norms
        return all(b < a for a, b in zip(v[:-1], v[1:]))

    @property
    def fine_decreasing(self):
        v = self.fine_projection_errors
        return all(b < a for a, b in zip(v[:-1], v[1:]))

    def passed(self, tol=1e-10):
        return (
            self.gram_offdiag <= tol
            and self.gram_diag_dev <= tol
            and self.refinement_residual <= tol
            and self.coarse_decreasing
            and self.fine_decreasing
        )

    def as_dict(self):
        return {
            "model": self.model,
            "gram_offdiag": self.gram_offdiag,
            "gram_diag_dev": self.gram_diag_dev,
            "refinement_residual": self.refinement_residual,
            "refinement_coeffs": {str(k): [v.real, v.imag] for k, v in sorted(self.refinement_coeffs.items())},
            "coarse_projection_norms": list(self.coarse_projection_norms),
            "coarse_decreasing": self.coarse_decreasing,
            "fine_projection_errors": list(self.fine_projection_errors),
            "fine_decreasing": self.fine_decreasing,
        }


def _generator_indices(model, count):
    if isinstance(model, QAnnulus):
        return list(range(-count // 2, count - count // 2))
    return list(range(count))


def refinement(model):
    """Project U phi^{(0,0)} onto V_0; returns ({(k, N): a}, residual norm)."""
    target = scale_step(generator(model, 0, 0), model.nu, 1)
    lo = target.r0.min()
    hi = target.r1.max()
    coeffs = {}
    approx = StepFunction.zero(model.weight_power)
    for r0, r1 in model.cells_covering(lo * (1 + 1e-12), hi, 1.0):
        k = _cell_index(model, r0)
        for N in range(len(model.sectors())):
            g = generator(model, k, N)
            a = inner_product(model, g, target) / inner_product(model, g, g)
            if abs(a) > 1e-15:
                coeffs[(k, N)] = a
                approx = approx + g.scaled(a)
    return coeffs, difference_norm(model, target, approx)


def _cell_index(model, r0):
    if isinstance(model, QAnnulus):
        return int(round(math.log(r0) / math.log(model.q))) - 1
    return int(round(r0))


def mra_axiom_report(model, J=6, n_generators=8):
    """Checks (i) Gram orthogonality, (ii) refinement, (iii)/(iv) proxies.

    (iii): ||P_{V_j} f|| for j = 1..J (coarser spaces) should decrease;
    (iv): ||f - P_{V_{-j}} f|| for a compactly supported f should decrease.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    gens = [generator(model, k, N) for k in _generator_indices(model, n_generators) for N in range(len(model.sectors()))]
    G = np.array([[inner_product(model, a, b) for b in gens] for a in gens])
    d = np.sqrt(np.abs(np.diag(G)))
    Gn = G / np.outer(d, d)
    off = float(np.max(np.abs(Gn - np.diag(np.diag(Gn)))))
    diag = float(np.max(np.abs(np.diag(Gn) - 1)))
    coeffs, resid = refinement(model)
    f = _test_function(model)
    coarse = tuple(projection_stats(model, f, j)[0] for j in range(1, J + 1))
    bump = _bump(model)
    fine = tuple(projection_stats(model, bump, -j, r_lo=0.3, r_hi=1.7)[1] for j in range(1, J + 1))
    return AxiomReport(model.kind, off, diag, resid, coeffs, coarse, fine)


# ---------------------------------------------------------------------------
# Low-pass filters
# ---------------------------------------------------------------------------


def _bessel_any(order, z):
    z = np.asarray(z, dtype=np.complex128)
    if np.all(z.imag == 0) and np.all(z.real >= 0):
        return special.bessel_j(order, z.real).astype(np.complex128)
    return special.bessel_j_complex(order, z, radius=np.inf)


def build_m0_from_coeffs(b, nu, literal=False, addition_terms=None):
    """m0(t) = sum_k b_k [(k+1)^{nu+1} J_{nu+1}((k+1) t) - k^{p} J_{nu+1}(k t)].

    p = nu + 1 (what the step transforms give); ``literal`` uses p = nu.
    ``addition_terms`` evaluates J_{nu+1}((k+1) t) through the addition
    formula sum_h J_h(k t) J_{nu+1-h}(t), truncated at |h| <= addition_terms
    (integer nu, real t).  ``b`` is a dict {k: b_k} or a sequence from k = 0.
    """
    items = sorted(b.items()) if isinstance(b, dict) else list(enumerate(b))
    items = [(int(k), complex(v)) for k, v in items if v != 0]
    p = nu if literal else nu + 1
    if addition_terms is not None and float(nu) != int(nu):
        raise ValueError("addition formula route needs integer nu")

    def m0(t):
        t = np.asarray(t, dtype=np.complex128)
        out = np.zeros(t.shape, dtype=np.complex128)
        for k, bk in items:
            if addition_terms is None:
                head = _bessel_any(nu + 1, (k + 1) * t)
            else:
                if np.any(t.imag != 0):
                    raise ValueError("addition formula route needs real t")
                head = special.bessel_addition(int(nu) + 1, k * t.real, t.real, addition_terms)
            tail = _bessel_any(nu + 1, k * t) * float(k) ** p if k != 0 else 0.0
            out += bk * ((k + 1.0) ** (nu + 1) * head - tail)
        return out

    return m0


def haar_step_function(b, nu):
    """xi(x) = sum_k b_k x^nu 1_(k, k+1](x) as a callable plus its breakpoints."""
    items = sorted(b.items()) if isinstance(b, dict) else list(enumerate(b))

    def xi(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=np.complex128)
        for k, bk in items:
            out += bk * ((x > k) & (x <= k + 1))
        return out * x**nu

    ks = [k for k, _ in items]
    return xi, tuple(float(k) for k in range(min(ks), max(ks) + 2))


def build_m0_annular(nu, q, a=None):
    """m0(t) = sum_k a_k [q^{k(nu+1)} J_{nu+1}((1-q) t q^k; q)
                          - q^{(k+1)(nu+1)} J_{nu+1}((1-q) t q^{k+1}; q)]

    with Hahn-Exton J in base q.  Default a: the exact refinement coefficients
    of the q-annulus model when nu+1 = q^{-s}, else a = delta_0.
    """
    check_q(q)
    if a is None:
        a = annulus_refinement_coeffs(nu, q)
    items = sorted(a.items()) if isinstance(a, dict) else list(enumerate(a))
    items = [(int(k), complex(v)) for k, v in items if v != 0]

    def m0(t):
        # radial filter: depends on |t| only
        t = np.abs(np.asarray(t))
        out = np.zeros(t.shape, dtype=np.complex128)
        for k, ak in items:
            x0 = (1 - q) * t * q**k
            out += ak * (
                q ** (k * (nu + 1)) * special.q_bessel_hahn_exton(nu + 1, x0, q)
                - q ** ((k + 1) * (nu + 1)) * special.q_bessel_hahn_exton(nu + 1, x0 * q, q)
            )
        return out

    return m0


def annulus_refinement_coeffs(nu, q):
    model = QAnnulus(nu, q)
    s = model.exact_refinement_shift()
    if s is None:
        return {0: 1.0}
    return {-s: (nu + 1) ** -0.5}


def lattice_step_filter(nu, q):
    """m0(s) = sqrt(d_q/(nu+1)) q^{j(s)}, j(s) = floor(log s / log q): the
    exact solution of the annular QMF identity for t in (q, 1] (not at t = q)."""
    d_q = 1 / (1 - q ** (2 * (nu + 1)))
    kappa = math.sqrt(d_q / (nu + 1))

    def m0(s):
        s = np.abs(np.asarray(s))
        j = np.floor(np.log(s) / math.log(q) + 1e-12)
        return kappa * q**j + 0j

    return m0


def constant_annular_filter(nu, q):
    """|m0| = sqrt(d_q / sum_j q^{-2j}), the constant solution of the annular identity."""
    d_q = 1 / (1 - q ** (2 * (nu + 1)))
    kappa = math.sqrt(d_q / math.fsum(q ** (-2.0 * j) for j in range(nu + 1)))
    return lambda s: kappa + 0j * np.abs(np.asarray(s))


# ---------------------------------------------------------------------------
# QMF-type checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QMFReport:
    residual: float
    reference_constant: float
    empirical_constant: float
    empirical_spread: float

    def as_dict(self):
        return {
            "residual": self.residual,
            "reference_constant": self.reference_constant,
            "empirical_constant": self.empirical_constant,
            "empirical_spread": self.empirical_spread,
        }


def _branch_sums(m0, nu, t_grid):
    t = np.asarray(t_grid, dtype=np.complex128)
    roots = np.exp(2j * math.pi * np.arange(nu + 1) / (nu + 1))
    vals = np.asarray(m0(t[:, None] * roots[None, :]))
    return np.sum(np.abs(vals) ** 2, axis=1) / (nu + 1)


def _report(avg, const):
    res = float(np.max(np.abs(avg / const - 1))) if avg.size else 0.0
    return QMFReport(res, const, float(np.mean(avg)), float(np.max(avg) - np.min(avg)))


def qmf_check_classical(m0, nu, t_grid, c=None):
    """max_t |(1/(c(nu+1))) sum_j |m0(t e^{2 pi i j/(nu+1)})|^2 - 1|, c = nu/(nu+2)."""
    c = nu / (nu + 2) if c is None else c
    return _report(_branch_sums(m0, nu, t_grid), c)


def qmf_check_q(m0, nu, q, t_grid):
    """As qmf_check_classical with c_q = (1-q^nu)/(1-q^{nu+2})."""
    check_q(q)
    return _report(_branch_sums(m0, nu, t_grid), (1 - q**nu) / (1 - q ** (nu + 2)))


def qmf_check_annular(m0, nu, q, t_grid):
    """max_t |d_q^{-1} sum_{j=0}^{nu} q^{-2j} |m0(t q^j)|^2 - 1|, t in [q, 1]."""
    check_q(q)
    t = np.asarray(t_grid, dtype=float)
    if np.any((t < q - 1e-15) | (t > 1 + 1e-15)):
        raise DomainError("annular QMF check needs t in [q, 1]")
    d_q = 1 / (1 - q ** (2 * (nu + 1)))
    j = np.arange(nu + 1)
    vals = np.asarray(m0(t[:, None] * q**j[None, :]))
    s = np.sum(q ** (-2.0 * j)[None, :] * np.abs(vals) ** 2, axis=1)
    return _report(s, d_q)
