"""Hankel transforms (classical and q-deformed) and Jackson q-integration.

The classical transform

    F(t) = int_0^inf J_a(x t) f(x) x dx

is computed by Gauss-Legendre panels split at the zeros of J_a(. t).  The
q-transform pair lives on the lattice {q^k} and reads

    g(q^n) = sum_k q^{2k} J_a(q^{k+n}; q^2) f(q^k)
    f(q^k) = sum_n q^{2n} J_a(q^{k+n}; q^2) g(q^n).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import special
from .special import AccuracyError, DomainError, check_order, check_q


class AccuracyWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Data carriers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    kind: str = "uniform"
    q: float | None = None
    k_min: int | None = None
    k_max: int | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.size and (np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0)):
            raise ValueError("grid nodes must be positive and strictly increasing")
        if self.kind not in ("uniform", "q-geometric"):
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @classmethod
    def q_geometric(cls, q, k_min, k_max):
        """Nodes {q^k : k_min <= k <= k_max} in ascending order."""
        check_q(q)
        ks = np.arange(k_max, k_min - 1, -1)
        return cls(q ** ks.astype(float), kind="q-geometric", q=q, k_min=int(k_min), k_max=int(k_max))

    @property
    def exponents(self):
        """Lattice exponents k aligned with ``nodes`` (q-geometric grids only)."""
        if self.kind != "q-geometric":
            raise ValueError("exponents are only defined on q-geometric grids")
        return np.arange(self.k_max, self.k_min - 1, -1)

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class SampledRadialFunction:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.grid),):
            raise ValueError("values must match the grid length")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")

    @classmethod
    def on_lattice(cls, q, k_min, k_max, func):
        grid = RadialGrid.q_geometric(q, k_min, k_max)
        return cls(grid, func(grid.nodes))

    def by_exponent(self):
        return dict(zip(self.grid.exponents.tolist(), self.values))


@dataclass(frozen=True)
class QuadratureConfig:
    support_end: float = 12.0
    panels_per_bessel_period: int = 4
    abs_tol: float = 1e-10
    max_panel: float = 0.5

    def __post_init__(self):
        if not self.support_end > 0:
            raise ValueError("support_end must be positive")
        if self.panels_per_bessel_period < 4:
            raise ValueError("panels_per_bessel_period must be >= 4")
        if not self.max_panel > 0:
            raise ValueError("max_panel must be positive")


# ---------------------------------------------------------------------------
# Bessel zeros and panel quadrature
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@lru_cache(maxsize=64)
def _bessel_zeros_cached(order, upto):
    step = 0.25
    xs = np.arange(step, upto + step, step)
    vals = special.bessel_j(order, xs)
    zeros = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        zeros.append(brentq(lambda u: special.bessel_j(order, u), xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
    out = np.asarray(zeros)
    out.setflags(write=False)
    return out


def bessel_zeros(order, upto):
    """Positive zeros of J_order up to ``upto`` (bracketing + bisection)."""
    check_order(order)
    if upto <= 0:
        return np.empty(0)
    # round the cache key up so nearby requests share a table
    table = _bessel_zeros_cached(float(order), float(math.ceil(upto / 16.0) * 16.0))
    return table[: np.searchsorted(table, upto, side="right")]


def panel_edges(order, t, end, breakpoints=(), cfg=None):
    """Panel boundaries on [0, end]: zeros of J_order(x t), user breakpoints,
    each gap further split into ``panels_per_bessel_period // 2`` pieces no
    longer than ``max_panel``."""
    cfg = cfg or QuadratureConfig(support_end=end)
    parts = [np.array([0.0, end])]
    if t > 0:
        parts.append(bessel_zeros(order, end * t) / t)
    if len(breakpoints):
        b = np.asarray(breakpoints, dtype=float)
        parts.append(b[(b > 0) & (b < end)])
    cuts = np.unique(np.concatenate(parts))
    gaps = np.diff(cuts)
    n = np.maximum(max(1, cfg.panels_per_bessel_period // 2), np.ceil(gaps / cfg.max_panel).astype(np.int64))
    start = np.repeat(cuts[:-1], n)
    width = np.repeat(gaps / n, n)
    frac = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    return np.append(start + frac * width, end)


def gauss_nodes(edges):
    """Gauss-Legendre (16 point) nodes and weights over consecutive panels."""
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    x = (a + b) * 0.5 + half * _GL_X[None, :]
    w = half * _GL_W[None, :]
    return x.ravel(), w.ravel()


def _evaluate(f, x):
    if callable(f):
        return np.asarray(f(x), dtype=np.complex128) * np.ones_like(x)
    if np.isscalar(f):
        return np.full(x.shape, complex(f))
    raise TypeError("f must be callable or a scalar")


def _as_callable(f):
    if isinstance(f, SampledRadialFunction):
        from scipy.interpolate import CubicSpline

        nodes = f.grid.nodes
        re = CubicSpline(nodes, f.values.real)
        im = CubicSpline(nodes, f.values.imag)
        end = nodes[-1]

        def g(x):
            x = np.asarray(x, dtype=float)
            inside = x <= end
            return np.where(inside, re(np.minimum(x, end)) + 1j * im(np.minimum(x, end)), 0.0)

        return g, float(end)
    return f, None


def _transform_many(f, order, ts, cfg, breakpoints):
    # all t share one batched Bessel/f evaluation
    end = cfg.support_end
    xs, ws, ks, starts = [], [], [], []
    pos = 0
    for t in ts:
        x, w = gauss_nodes(panel_edges(order, t, end, breakpoints, cfg))
        starts.append(pos)
        pos += x.size
        xs.append(x)
        ws.append(w)
        ks.append(x * t)
    x = np.concatenate(xs)
    vals = np.concatenate(ws) * special.bessel_j(order, np.concatenate(ks)) * _evaluate(f, x) * x
    return np.add.reduceat(vals, np.asarray(starts))


def hankel_forward(f, order, t, cfg=QuadratureConfig(), breakpoints=()):
    """int_0^support_end J_order(x t) f(x) x dx.

    ``f`` is a callable (vectorised), a scalar constant or a
    SampledRadialFunction (cubic-spline interpolated, zero past the last node).
    ``breakpoints`` marks discontinuities of f.  ``t`` may be an array.
    """
    check_order(order)
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DomainError("transform variable must be non-negative")
    f, sampled_end = _as_callable(f)
    if sampled_end is not None:
        cfg = QuadratureConfig(sampled_end, cfg.panels_per_bessel_period, cfg.abs_tol, cfg.max_panel)
    if callable(f):
        # probe just past the cut; compactly supported f gives exactly 0
        probe = 1.25 * cfg.support_end
        tail = np.abs(_evaluate(f, np.array([probe])))[0] * probe
        if tail > 1e-3 and sampled_end is None:
            warnings.warn(
                f"f does not decay beyond support_end={cfg.support_end} (|x f(x)| = {tail:.2e})",
                AccuracyWarning,
                stacklevel=2,
            )
    elif f == 0:
        return 0j if ta.ndim == 0 else np.zeros(ta.shape, dtype=np.complex128)
    out = _transform_many(f, order, ta.ravel(), cfg, breakpoints)
    out = out.reshape(ta.shape)
    return complex(out) if out.ndim == 0 else out


def hankel_inverse(g, order, y, cfg=QuadratureConfig(), breakpoints=(), tail=None):
    """int_0^inf J_order(y t) g(t) t dt (the pair is symmetric).

    ``tail="window"`` treats a slowly decaying, oscillating g: the partial
    integral is averaged against a smooth window over the second half of
    [0, support_end], which suppresses the 1/T oscillating remainder.
    """
    if tail is None:
        return hankel_forward(g, order, y, cfg, breakpoints)
    if tail != "window":
        raise ValueError(f"unknown tail treatment {tail!r}")
    check_order(order)
    ya = np.asarray(y, dtype=float)
    out = np.array([_windowed_one(g, order, float(yy), cfg, breakpoints) for yy in ya.ravel()])
    out = out.reshape(ya.shape)
    return complex(out) if out.ndim == 0 else out


def _bump_average(T, values, lo, hi):
    s = (T - lo) / (hi - lo)
    inside = (s > 0) & (s < 1)
    bump = np.zeros_like(T)
    bump[inside] = np.exp(-1.0 / (s[inside] * (1 - s[inside])))
    w = bump * np.gradient(T)
    return np.sum(w * values) / np.sum(w)


def window_limit(ends, partial, end, richardson=False):
    """Limit of partial integrals I(T) sampled at panel ends T.

    A C-infinity bump average over [end/2, end] removes the oscillating
    O(1/T) part.  With ``richardson`` a second window over [end/4, end/2]
    also removes a monotone C/T remainder.
    """
    a2 = _bump_average(ends, partial, 0.5 * end, end)
    if not richardson:
        return a2
    a1 = _bump_average(ends, partial, 0.25 * end, 0.5 * end)
    m2 = _bump_average(ends, 1.0 / ends, 0.5 * end, end)
    m1 = _bump_average(ends, 1.0 / ends, 0.25 * end, 0.5 * end)
    return (a2 * m1 - a1 * m2) / (m1 - m2)


def _windowed_one(g, order, y, cfg, breakpoints):
    end = cfg.support_end
    edges = panel_edges(order, y, end, breakpoints, cfg)
    x, w = gauss_nodes(edges)
    contrib = w * special.bessel_j(order, x * y) * _evaluate(g, x) * x
    partial = np.cumsum(contrib.reshape(-1, _GL_X.size).sum(axis=1))
    return complex(window_limit(edges[1:], partial, end))


def hankel_forward_improper(f, order, t, n_zeros=400, levels=None, start=0.0):
    """Improper int_0^inf J_order(x t) f(x) x dx for slowly decaying f.

    Partial integrals are taken at successive zeros of J_order(x t) and the
    sequence is accelerated by repeated averaging of neighbours.  Meant for
    validating closed forms such as int_0^inf J_0(u) du = 1.
    """
    check_order(order)
    if t <= 0:
        raise DomainError("t must be positive")
    zeros = bessel_zeros(order, (n_zeros + 2) * math.pi + abs(order) * 2)[:n_zeros] / t
    edges = np.concatenate([[start], zeros[zeros > start]])
    fine = []
    for a, b in zip(edges[:-1], edges[1:]):
        fine.extend(np.linspace(a, b, 5)[:-1].tolist())
    fine.append(edges[-1])
    x, w = gauss_nodes(np.asarray(fine))
    contrib = (w * special.bessel_j(order, x * t) * _evaluate(f, x) * x).reshape(-1, 4 * _GL_X.size).sum(axis=1)
    partial = np.cumsum(contrib)
    seq = partial[len(partial) // 2 :]
    levels = levels or min(40, len(seq) - 1)
    for _ in range(levels):
        seq = 0.5 * (seq[:-1] + seq[1:])
    return complex(seq[-1])


def hankel_of_monomial_step(a, order, t):
    """Closed form of int_0^a J_order(x t) x^order x dx = a^{order+1} J_{order+1}(a t)/t.

    Near t = 0 the value is a^{2 order+2} t^order / (2^{order+1} Gamma(order+2)),
    so the limit at t = 0 is a^2/2 for order 0, 0 for order > 0 and +inf below.
    """
    check_order(order)
    if not a > 0:
        raise DomainError("a must be positive")
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DomainError("t must be non-negative")
    limit = a * a / 2 if order == 0 else (0.0 if order > 0 else math.inf)
    safe = np.where(ta > 0, ta, 1.0)
    val = np.where(ta > 0, a ** (order + 1) * special.bessel_j(order + 1, a * safe) / safe, limit)
    return float(val) if val.ndim == 0 else val


def plancherel_residual(f, g, order, cfg_x=QuadratureConfig(), cfg_t=None, breakpoints=(), F=None, G=None, tail=None):
    """|int rho F G drho - int x f g dx| with F, G the order-``order`` transforms.

    ``F``/``G`` may be passed as callables (closed forms); otherwise they are
    computed by quadrature.  ``cfg_t`` controls the rho integral; for
    discontinuous f, g (slow 1/rho^2 decay of rho F G) pass ``tail="window"``.
    """
    check_order(order)
    cfg_t = cfg_t or cfg_x
    if not callable(f) and f == 0 or not callable(g) and g == 0:
        return 0.0
    cuts = [0.0, cfg_x.support_end] + [b for b in breakpoints if 0 < b < cfg_x.support_end]
    x, w = gauss_nodes(panel_edges(order, 0.0, cfg_x.support_end, cuts, cfg_x))
    space = np.sum(w * x * _evaluate(f, x) * _evaluate(g, x))
    F = F or (lambda r: hankel_forward(f, order, r, cfg_x, breakpoints))
    G = G or (lambda r: hankel_forward(g, order, r, cfg_x, breakpoints))
    edges = panel_edges(order, 0.0, cfg_t.support_end, (), cfg_t)
    r, wr = gauss_nodes(edges)
    contrib = wr * r * np.asarray(F(r)) * np.asarray(G(r))
    if tail is None:
        freq = np.sum(contrib)
    elif tail == "window":
        partial = np.cumsum(contrib.reshape(-1, _GL_X.size).sum(axis=1))
        freq = window_limit(edges[1:], partial, cfg_t.support_end, richardson=True)
    else:
        raise ValueError(f"unknown tail treatment {tail!r}")
    return float(abs(freq - space))


# ---------------------------------------------------------------------------
# Jackson q-integral
# ---------------------------------------------------------------------------


def _jackson_terms(f, q, b, k_start=0, max_k=2_000_000):
    terms = []
    small = 0
    rising = 0
    prev = math.inf
    k = k_start
    while True:
        x = b * q**k
        term = complex(f(x)) * q**k if x > 0 else 0j
        terms.append(term)
        mag = abs(term)
        rising = rising + 1 if mag >= prev and mag > 0 else 0
        if rising >= 50:
            raise AccuracyError("Jackson sum diverges (terms not decreasing)", partial=math.fsum(t.real for t in terms))
        prev = mag
        if mag <= 1e-18 * max(abs(terms[0]), 1e-300) or mag == 0:
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        k += 1
        if k - k_start > max_k:
            raise AccuracyError("Jackson sum did not terminate")
    return terms


def _fsum_complex(terms):
    re = math.fsum(t.real for t in terms)
    im = math.fsum(t.imag for t in terms)
    return complex(re, im)


def jackson_q_integral(f, q, b=1.0, a=None):
    """Jackson integral of f over [0, b] or [a, b].

    int_0^b f d_q t = b (1-q) sum_{k>=0} f(b q^k) q^k.  For [a, b] with
    a = b q^m the difference of the two [0, .] integrals is the finite sum over
    k < m; other endpoints fall back to the literal difference.  Real-valued f
    returns a float.
    """
    check_q(q)
    if not callable(f):
        if f == 0:
            return 0.0
        c = f
        f = lambda x: c  # noqa: E731
    if a is None or a == 0:
        terms = _jackson_terms(f, q, b)
        val = (1 - q) * b * _fsum_complex(terms)
    else:
        m = math.log(a / b) / math.log(q)
        mi = round(m)
        if abs(m - mi) < 1e-9 and mi >= 0:
            terms = [complex(f(b * q**k)) * q**k for k in range(mi)]
            val = (1 - q) * b * _fsum_complex(terms)
        else:
            val = jackson_q_integral(f, q, b) - jackson_q_integral(f, q, a)
            return val
    return val.real if val.imag == 0 else val


def jackson_q_integral_full(f, q, k_min=-200):
    """int_0^inf f d_q t = (1-q) sum_{k in Z} f(q^k) q^k, summed from k_min up."""
    check_q(q)
    terms = [complex(f(q**k)) * q**k for k in range(k_min, 0)]
    terms.extend(_jackson_terms(f, q, 1.0))
    val = (1 - q) * _fsum_complex(terms)
    return val.real if val.imag == 0 else val


# ---------------------------------------------------------------------------
# q-Hankel transform on the lattice
# ---------------------------------------------------------------------------


def _lattice_data(f):
    if isinstance(f, SampledRadialFunction):
        if f.grid.kind != "q-geometric":
            raise ValueError("q-Hankel transform needs a q-geometric grid")
        return f.grid.q, f.grid.exponents, f.values
    raise TypeError("expected a SampledRadialFunction on a q-geometric grid")


def _apply_lattice(order, q, src_exp, src_vals, dst_exp):
    # out[n] = sum_k q^{2k} J(q^{k+n}; q^2) v_k = sum_k q^{k-n} K(k+n) v_k
    src_exp = np.asarray(src_exp, dtype=np.int64)
    dst_exp = np.asarray(dst_exp, dtype=np.int64)
    if src_exp.size == 0 or dst_exp.size == 0:
        return np.zeros(dst_exp.shape, dtype=np.complex128)
    sums = (src_exp[None, :] + dst_exp[:, None]).ravel()
    uniq, inv = np.unique(sums, return_inverse=True)
    Kv = special.lattice_kernel(uniq, q**order, q * q)[inv].reshape(dst_exp.size, src_exp.size)
    scale = q ** (src_exp[None, :] - dst_exp[:, None]).astype(float)
    return (Kv * scale) @ np.asarray(src_vals, dtype=np.complex128)


def q_hankel_forward(f, order, q, n):
    """g(q^n) = sum_k q^{2k} J_order(q^{k+n}; q^2) f(q^k) for f on the lattice.

    ``n`` may be an int or an array of ints.  ``q`` must match the grid.
    """
    check_order(order)
    check_q(q)
    fq, ks, vals = _lattice_data(f)
    if not math.isclose(fq, q, rel_tol=0, abs_tol=1e-15):
        raise ValueError("grid q does not match the transform q")
    na = np.asarray(n, dtype=np.int64)
    out = _apply_lattice(order, q, ks, vals, na.ravel()).reshape(na.shape)
    return complex(out) if out.ndim == 0 else out


def q_hankel_inverse(g, order, q, k):
    """f(q^k) = sum_n q^{2n} J_order(q^{k+n}; q^2) g(q^n) (same kernel as forward)."""
    return q_hankel_forward(g, order, q, k)


def q_hankel_transform(f, order, q, abs_tol=1e-14, start=8):
    """Transform a lattice function onto an automatically sized lattice.

    The output exponent range is the reflection of the input range widened by
    K on both sides; K doubles until the weighted edge values q^n |g(q^n)| drop
    below ``abs_tol``.
    """
    check_order(order)
    fq, ks, vals = _lattice_data(f)
    if fq != q:
        raise ValueError("grid q does not match the transform q")
    if not np.any(vals):
        grid = RadialGrid.q_geometric(q, -int(ks.max()), -int(ks.min()))
        return SampledRadialFunction(grid, np.zeros(len(grid)))
    K = start
    while True:
        lo = -int(ks.max()) - K
        hi = -int(ks.min()) + K
        grid = RadialGrid.q_geometric(q, lo, hi)
        out = _apply_lattice(order, q, ks, vals, grid.exponents)
        edge = np.abs(out) * q ** grid.exponents.astype(float)
        if max(edge[0], edge[-1]) < abs_tol or K > 512:
            break
        K *= 2
    return SampledRadialFunction(grid, out)


def lattice_weighted_norm(f):
    """sqrt(sum_k q^{2k} |f(q^k)|^2)."""
    _, ks, vals = _lattice_data(f)
    w = f.grid.q ** (2.0 * ks)
    return math.sqrt(math.fsum((w * np.abs(vals) ** 2).tolist()))


def lattice_orthogonality_delta(m, n, x, q, K):
    """Truncated orthogonality sum sum_{|k|<=K} K(k+n) K(k+m) (~ delta_{mn}).

    K(j) = x^j q^{j/2} (x^2 q;q)_inf/(q;q)_inf 1phi1(0; x^2 q; q, q^{j+1}).
    """
    check_q(q)
    if not abs(x) < q ** -0.5:
        raise DomainError("|x| must be below q^(-1/2)")
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(-K, K + 1)
    a = special.lattice_kernel(ks + n, x, q)
    b = special.lattice_kernel(ks + m, x, q)
    return math.fsum((a * b).tolist())


def q_hankel_jackson(f, order, q, lam, x_max=8.0, x_min=1e-9):
    """Jackson-integral form of the q-transform at an arbitrary point lam:

        (1-q) sum_k f(q^k) J_order((1-q) lam q^k; q^2) q^{2k}

    which tends to the classical transform as q -> 1.  Lattice points outside
    [x_min, x_max] are dropped (f must be negligible there).
    """
    check_order(order)
    check_q(q)
    k_lo = int(math.floor(math.log(x_max) / math.log(q)))
    k_hi = int(math.ceil(math.log(x_min) / math.log(q)))
    ks = np.arange(k_lo, k_hi + 1)
    x = q ** ks.astype(float)
    fx = _evaluate(f, x)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty(lam.shape, dtype=np.complex128)
    for i, L in enumerate(lam):
        J = special.q_bessel_hahn_exton(order, (1 - q) * L * x, q * q)
        out[i] = (1 - q) * np.sum(fx * J * x * x)
    return out
