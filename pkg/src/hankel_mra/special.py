"""Classical and basic-hypergeometric special functions.

Gamma, Bessel J, q-Pochhammer symbols, the 1phi1 series and the Hahn-Exton
q-Bessel function.  Complex powers use the principal branch,
``Arg in (-pi, pi]``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from . import _kernels
from ._accel import USE_NUMBA


class DomainError(ValueError):
    """Argument outside the domain where a function is defined/supported."""


class AccuracyError(ArithmeticError):
    """A series failed to converge within its term budget."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SeriesPolicy:
    rel_tail_tol: float = 1e-16
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tail_tol > 0:
            raise ValueError("rel_tail_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_POLICY = SeriesPolicy()

# below this |x| the power series is used; above it scipy's jv.
# series cancellation costs about I_0(|x|)*eps absolute: ~1e-14 at 8, ~4e-13 at 12.
SERIES_SWITCH = 8.0
COMPLEX_RADIUS = 50.0


def check_order(order):
    if not order > -1:
        raise DomainError(f"order must exceed -1, got {order}")


def check_q(q):
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

# Lanczos g = 7, n = 9 (Godfrey's coefficients)
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos(z):
    # valid for z >= 0.5
    z -= 1.0
    x = _LANCZOS_C[0]
    for i in range(1, 9):
        x += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * x


def gamma(z):
    """Gamma function for real ``z > 0``.

    Lanczos approximation with the argument shifted into [1.5, 2.5] by the
    recurrence, which keeps the relative error near 1e-15 on (0, 50].
    """
    z = float(z)
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"gamma requires a positive finite argument, got {z}")
    if z == math.floor(z) and z <= 30:
        return float(math.factorial(int(z) - 1))
    scale = 1.0
    while z < 1.5:
        scale /= z
        z += 1.0
    shift = 1.0
    while z > 2.5:
        z -= 1.0
        shift *= z
    return scale * shift * _lanczos(z)


# ---------------------------------------------------------------------------
# Bessel J
# ---------------------------------------------------------------------------


def _even_series(nu, w, policy):
    w = np.ascontiguousarray(w, dtype=np.complex128).ravel()
    if USE_NUMBA:
        s, ok = _kernels.bessel_even_series_loop(float(nu), w, policy.rel_tail_tol, policy.max_terms)
    else:
        s, ok = _kernels.bessel_even_series_np(float(nu), w, policy.rel_tail_tol, policy.max_terms)
    return s, ok


def bessel_series(order, z, policy=DEFAULT_POLICY):
    """Power series value of J_order(z); complex z, principal branch."""
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    flat = z.ravel()
    s, ok = _even_series(order, -0.25 * flat * flat, policy)
    pref = _principal_power(0.5 * flat, order) / gamma(order + 1.0)
    out = (pref * s).reshape(shape)
    if not ok.all():
        raise AccuracyError("Bessel series did not converge within max_terms", partial=out)
    return out


def _principal_power(z, a):
    z = np.asarray(z, dtype=np.complex128)
    if a == 0:
        return np.ones_like(z)
    if float(a).is_integer():
        return z ** int(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(a * np.log(z))
    return np.where(z == 0, 0.0, out)


def _bessel_int_order(n, x):
    # integer (possibly negative) order; J_{-n} = (-1)^n J_n
    if n < 0:
        return (-1) ** (-n) * _bessel_int_order(-n, x)
    return bessel_j(n, x)


def bessel_j(order, x, policy=DEFAULT_POLICY):
    """J_order(x) for real ``x >= 0``; scalar or array.

    The power series is used for ``x <= SERIES_SWITCH``; above that scipy's
    ``jv`` (which agrees with a high-precision series to ~1e-15).
    """
    check_order(order)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bessel_j requires x >= 0")
    out = np.empty(xa.shape)
    small = xa <= SERIES_SWITCH
    if small.any():
        out[small] = bessel_series(order, xa[small], policy).real
    if (~small).any():
        out[~small] = _sp.jv(order, xa[~small])
    return out if out.ndim else float(out)


def bessel_j_complex(order, z, policy=DEFAULT_POLICY, radius=COMPLEX_RADIUS, winding=0):
    """J_order(z) for complex z on the principal branch.

    ``winding`` selects the sheet of the log: the result is evaluated at
    ``z * exp(i*pi*winding)`` with ``z**order`` continued as
    ``exp(order*(log z + i*pi*winding))``.  With ``winding=0`` this is the
    ordinary principal-branch value.
    """
    check_order(order)
    za = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(za) > radius):
        raise DomainError(f"|z| exceeds the configured radius {radius}")
    if not winding:
        out = _principal(order, za, policy)
        return out if out.ndim else complex(out)
    # evaluate at the rotated point itself, then move from the principal
    # sheet of w^order to the continued sheet of z^order
    w = za * cmath.exp(1j * math.pi * winding)
    out = _principal(order, w, policy)
    nz = za != 0
    shift = np.log(za[nz]) + 1j * math.pi * winding - np.log(w[nz])
    out[nz] *= np.exp(order * shift)
    return out if out.ndim else complex(out)


def _principal(order, za, policy):
    out = np.empty(za.shape, dtype=np.complex128)
    small = np.abs(za) <= SERIES_SWITCH
    if small.any():
        out[small] = bessel_series(order, za[small], policy)
    if (~small).any():
        out[~small] = _sp.jv(order, za[~small])
    return out


def bessel_j_int(n, z):
    """J_n(z) for any integer n and complex z (entire in z)."""
    n = int(n)
    za = np.asarray(z, dtype=np.complex128)
    sign = (-1) ** (-n) if n < 0 else 1
    val = bessel_j_complex(abs(n), za, radius=np.inf)
    return sign * val


def bessel_addition(n, x, y, K):
    """Truncated Neumann addition sum  sum_{k=-K}^{K} J_k(x) J_{n-k}(y)."""
    if K < 0:
        raise ValueError("K must be non-negative")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    terms = np.array([_bessel_int_order(k, x) * _bessel_int_order(n - k, y) for k in range(-K, K + 1)])
    if terms.ndim == 1:
        return math.fsum(terms.tolist())
    flat = terms.reshape(terms.shape[0], -1)
    return np.array([math.fsum(col) for col in flat.T.tolist()]).reshape(x.shape)


# ---------------------------------------------------------------------------
# q-series
# ---------------------------------------------------------------------------


def q_pochhammer(a, q, n=math.inf, policy=DEFAULT_POLICY):
    """(a; q)_n = prod_{j<n} (1 - a q^j); ``n=math.inf`` for the infinite product.

    The infinite product stops once ``|a q^j| < rel_tail_tol``.
    """
    if n == math.inf:
        if not abs(q) < 1:
            raise DomainError("infinite q-Pochhammer needs |q| < 1")
        prod = 1.0
        aj = a
        j = 0
        while abs(aj) >= policy.rel_tail_tol:
            prod *= 1 - aj
            aj *= q
            j += 1
            if j > 10_000_000:
                raise AccuracyError("q-Pochhammer product did not terminate", partial=prod)
        return prod
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative or inf")
    prod = 1.0
    aj = a
    for _ in range(n):
        prod *= 1 - aj
        aj *= q
    return prod


def _pole_check(b, q, terms):
    # (b;q)_k vanishes iff b = q^{-m} for some 0 <= m < k
    if b == 0:
        return
    m = math.log(abs(b)) / math.log(abs(q)) if abs(b) > 0 else None
    if m is not None and abs(b.imag if isinstance(b, complex) else 0.0) == 0:
        mm = round(-m)
        if mm >= 0 and mm < terms and abs(complex(b) - complex(q) ** (-mm)) <= 1e-14 * abs(b):
            raise DomainError(f"1phi1 lower parameter b = q^-{mm} is a pole")


def phi_1_1(b, q, z, policy=DEFAULT_POLICY):
    """Basic hypergeometric 1phi1(0; b; q, z).

    Standard (Gasper-Rahman) normalisation:
        sum_k (-1)^k q^{k(k-1)/2} z^k / ((b;q)_k (q;q)_k).
    For |z| > 4 the symmetric representation
        (b;q)_inf 1phi1(0;b;q,z) = sum_k (-1)^k q^{k(k-1)/2} b^k (zq^k;q)_inf/(q;q)_k
    is summed instead, which has no cancellation for large z.
    """
    check_q(q)
    b = complex(b)
    z = complex(z)
    _pole_check(b, q, policy.max_terms)
    if abs(z) <= 4.0:
        return _phi11_direct(b, q, z, policy)
    bq_inf = q_pochhammer(b, q, policy=policy)
    if abs(bq_inf) == 0:
        return _phi11_direct(b, q, z, policy)
    return _phi11_symmetric(b, q, z, policy) / bq_inf


def _phi11_direct(b, q, z, policy):
    term = 1.0 + 0j
    s = 1.0 + 0j
    small = 0
    for k in range(1, policy.max_terms):
        term *= -(q ** (k - 1)) * z / ((1 - b * q ** (k - 1)) * (1 - q**k))
        s += term
        if abs(term) <= policy.rel_tail_tol * abs(s):
            small += 1
            if small >= 3:
                return s
        else:
            small = 0
    raise AccuracyError("1phi1 series did not converge", partial=s)


def _phi11_symmetric(c, q, z, policy):
    s = 0j
    small = 0
    qq = 1.0
    for k in range(policy.max_terms):
        if k:
            qq *= 1 - q**k
        term = (-1) ** k * q ** (k * (k - 1) / 2) * c**k * q_pochhammer(z * q**k, q, policy=policy) / qq
        s += term
        if abs(term) <= policy.rel_tail_tol * abs(s) or (term == 0 and k > 2):
            small += 1
            if small >= 3:
                return s
        else:
            small = 0
    raise AccuracyError("1phi1 symmetric series did not converge", partial=s)


def qbessel_prefactor(order, q):
    """(q^{order+1}; q)_inf / (q; q)_inf as a single product (no under/overflow)."""
    ratio = 1.0
    j = 0
    while True:
        qa = q ** (order + 1 + j)
        q1 = q ** (1 + j)
        if q1 < 1e-18 and qa < 1e-18:
            break
        ratio *= (1 - qa) / (1 - q1)
        j += 1
    return ratio


def q_bessel_hahn_exton(order, x, q, policy=DEFAULT_POLICY):
    """Hahn-Exton q-Bessel J_order(x; q) for real ``x >= 0`` (array aware).

    Small arguments (x^2 q <= 4) use the direct 1phi1 series; larger ones the
    symmetric representation, summed in log space.
    """
    check_order(order)
    check_q(q)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("q_bessel_hahn_exton requires x >= 0")
    flat = xa.ravel()
    out = np.zeros(flat.shape)
    direct = flat * flat * q <= 4.0
    if direct.any():
        out[direct] = _hahn_exton_direct(order, flat[direct], q, policy).real
    for i in np.flatnonzero(~direct):
        out[i] = _hahn_exton_large(order, float(flat[i]), q, policy)
    out = out.reshape(xa.shape)
    return out if out.ndim else float(out)


def _hahn_exton_direct(order, x, q, policy):
    x = np.asarray(x, dtype=np.complex128)
    x2 = np.ascontiguousarray(x * x)
    if USE_NUMBA:
        s, ok = _kernels.hahn_exton_series_loop(float(order), x2, q, policy.rel_tail_tol, policy.max_terms)
    else:
        s, ok = _kernels.hahn_exton_series_np(float(order), x2, q, policy.rel_tail_tol, policy.max_terms)
    val = qbessel_prefactor(order, q) * _principal_power(x, order) * s
    if not np.all(ok):
        raise AccuracyError("Hahn-Exton series did not converge", partial=val)
    return val


def _log_qpoch_signed(a, q):
    # log|(a;q)_inf| and its sign for real a
    logabs = 0.0
    sign = 1.0
    j = 0
    aj = a
    while abs(aj) >= 1e-18:
        f = 1.0 - aj
        if f == 0.0:
            return -math.inf, 0.0
        logabs += math.log(abs(f))
        if f < 0:
            sign = -sign
        aj *= q
        j += 1
    return logabs, sign


def _hahn_exton_large(order, x, q, policy):
    # x^a/(q;q)_inf * sum_k (-1)^k q^{k(k-1)/2} q^{(a+1)k} (x^2 q^{1+k};q)_inf/(q;q)_k
    logq = math.log(q)
    log_qq_inf, _ = _log_qpoch_signed(q, q)
    base = order * math.log(x) - log_qq_inf
    s = 0.0
    small = 0
    log_head = 0.0
    for k in range(policy.max_terms):
        if k:
            log_head += math.log1p(-(q**k))
        lp, sg = _log_qpoch_signed(x * x * q ** (1 + k), q)
        if sg == 0.0:
            term = 0.0
        else:
            lt = base + (0.5 * k * (k - 1) + (order + 1) * k) * logq + lp - log_head
            term = sg * (-1) ** k * math.exp(lt) if lt > -745 else 0.0
        s += term
        if abs(term) <= policy.rel_tail_tol * abs(s):
            small += 1
            if small >= 3:
                return s
        else:
            small = 0
    raise AccuracyError("Hahn-Exton symmetric series did not converge", partial=s)


def q_bessel_complex(order, z, q, policy=DEFAULT_POLICY):
    """Hahn-Exton J_order(z; q) for complex z by the direct series
    (principal branch for z**order)."""
    check_order(order)
    check_q(q)
    za = np.asarray(z, dtype=np.complex128)
    out = _hahn_exton_direct(order, za.ravel(), q, policy).reshape(za.shape)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Lattice values K(j) = x^j q^{j/2} (x^2 q;q)_inf/(q;q)_inf 1phi1(0;x^2 q;q,q^{j+1})
# ---------------------------------------------------------------------------


def lattice_kernel(js, x, q, policy=DEFAULT_POLICY):
    """The orthogonality kernel on the lattice {q^j}.

    ``sum_k K(k+n) K(k+m) = delta_{mn}`` for |x| < q^{-1/2}.  With base q^2
    and x = q^a this equals q^j J_a(q^j; q^2).
    """
    check_q(q)
    if not abs(x) < q ** -0.5:
        raise DomainError("lattice kernel requires |x| < q^(-1/2)")
    js = np.ascontiguousarray(np.asarray(js, dtype=np.int64).ravel())
    if js.size == 0:
        return np.zeros(0)
    span = int(np.max(np.abs(js))) + 2
    n_tab = span + min(policy.max_terms, 400) + 2
    log_tail, log_head = _tables(q, n_tab)
    logx = math.log(abs(x)) if x != 0 else -math.inf
    max_terms = min(policy.max_terms, 400)
    if USE_NUMBA:
        vals, ok = _kernels.lattice_kernel_loop(js, logx, q, log_tail, log_head, policy.rel_tail_tol, max_terms)
    else:
        vals, ok = _kernels.lattice_kernel_np(js, logx, q, log_tail, log_head, policy.rel_tail_tol, max_terms)
    if x < 0:
        vals = vals * np.where(js % 2 == 0, 1.0, -1.0)
    if not np.all(ok):
        raise AccuracyError("lattice kernel series did not converge", partial=vals)
    return vals


_TABLE_CACHE: dict = {}


def _tables(q, n):
    key = (q, n)
    hit = _TABLE_CACHE.get(key)
    if hit is None:
        hit = _kernels.log_tail_products(q, n)
        if len(_TABLE_CACHE) > 64:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[key] = hit
    return hit


def q_bessel_lattice(order, ks, q, policy=DEFAULT_POLICY):
    """J_order(q^k; q^2) at integer k, via the lattice kernel (stable for k < 0)."""
    check_order(order)
    check_q(q)
    ks = np.asarray(ks, dtype=np.int64)
    K = lattice_kernel(ks, q**order, q * q, policy)
    return K * q ** (-ks.astype(float))
