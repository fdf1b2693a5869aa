"""Wavelet families generated by a filter bank, cascade products and frame bounds.

A family is described by its tap matrix C (rows r = 0..nu, columns indexed by
integer offsets s): band r has the two-scale form

    psi_r(x) = sqrt(N) sum_s C[r, s] phi(N x - s),   phi = 1_[0, 1)

so that its Fourier transform is m_r(e^{-it/N}) phi^(t/N) / sqrt(N) with
m_r(w) = sum_s C[r, s] w^s.  Members are

    psi_r^{(j, m)}(x) = N^{-m/2} psi_r(N^{-m} x - j),  |m| <= J, |j| <= K, r >= 1.

Coefficients <f, psi> are exact differences of an antiderivative of f, and
frame sums are accumulated with math.fsum so that enlarging (J, K) can never
decrease them.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .filter_bank import BranchSystem, FilterBank, bank_unitarity, default_grid, householder_complete
from .special import DomainError


class PreconditionError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Cascade product
# ---------------------------------------------------------------------------


def cascade_product(m0, nu, t, L, tol=1e-10):
    """prod_{l=1}^{L} m0(t / N^l).  Returns (value, |Pi_L - Pi_{L-1}|)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    m00 = complex(np.asarray(m0(np.zeros(1)))[0])
    if abs(m00 - 1) > tol:
        raise PreconditionError(f"m0(0) = {m00} is not 1")
    t = np.asarray(t, dtype=float)
    N = nu + 1
    prod = np.ones(t.shape, dtype=np.complex128)
    prev = prod
    for l in range(1, L + 1):
        prev = prod
        prod = prod * np.asarray(m0(t / float(N) ** l), dtype=np.complex128)
    return prod, np.abs(prod - prev)


def haar_lowpass(nu):
    """t -> (1/N) sum_{s<N} e^{-i s t}; the cascade limit is the transform of 1_[0,1)."""
    N = nu + 1
    s = np.arange(N)

    def m0(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * np.multiply.outer(t, s)).mean(axis=-1)

    return m0


def box_transform(t):
    """int_0^1 e^{-ixt} dx."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-8
    ts = np.where(small, 1.0, t)
    val = (1 - np.exp(-1j * ts)) / (1j * ts)
    return np.where(small, 1 - 0.5j * t, val)


def cascade_l2_norm(m0, nu, T=400.0, n=40001, L=40):
    """(1/2pi) int_{-T}^{T} |Pi_L(t)|^2 dt, a truncated Plancherel estimate of ||phi||^2."""
    t = np.linspace(-T, T, n)
    val, _ = cascade_product(m0, nu, t, L)
    return float(np.trapezoid(np.abs(val) ** 2, t) / (2 * math.pi))


# ---------------------------------------------------------------------------
# Tap matrices and banks
# ---------------------------------------------------------------------------


def haar_taps(nu):
    """Householder completion of the constant vector: a unitary N x N tap
    matrix whose row 0 is 1/sqrt(N)."""
    N = nu + 1
    G = householder_complete(np.full((1, N), 1 / math.sqrt(N)))[0]
    return np.arange(N), G


def tap_bank(offsets, C, sys=None):
    """FilterBank with m_k(w) = sum_s C[k, s] w^s."""
    C = np.asarray(C, dtype=np.complex128)
    offsets = np.asarray(offsets)
    nu = C.shape[0] - 1
    sys = BranchSystem(nu) if sys is None else sys

    def make(k):
        def m(w):
            w = np.asarray(w, dtype=np.complex128)
            return np.sum(C[k] * w[..., None] ** offsets, axis=-1)

        return m

    return FilterBank(nu, [make(k) for k in range(nu + 1)], np.ones(nu + 1), 1.0, sys, "taps")


def taps_from_bank(bank, P=64, cutoff=1e-15):
    """Laurent coefficients of the filters on the unit circle by FFT.

    Returns (offsets, C, residual) where residual is the max reconstruction
    error at points between the FFT nodes, after dropping columns below cutoff.
    """
    theta = 2 * math.pi * np.arange(P) / P
    vals = bank.evaluate(np.exp(1j * theta))  # (N, P)
    coef = np.fft.fft(vals, axis=1) / P
    offsets = np.fft.fftfreq(P, 1.0 / P).astype(int)
    order = np.argsort(offsets)
    offsets, coef = offsets[order], coef[:, order]
    keep = np.max(np.abs(coef), axis=0) > cutoff
    offsets, coef = offsets[keep], coef[:, keep]
    mid = np.exp(1j * (theta + math.pi / P))
    recon = np.sum(coef[:, None, :] * mid[None, :, None] ** offsets, axis=-1)
    residual = float(np.max(np.abs(recon - bank.evaluate(mid)))) if offsets.size else float(np.max(np.abs(vals)))
    return offsets, coef, residual


# ---------------------------------------------------------------------------
# Test functions: known antiderivative and norm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    antiderivative: object
    norm2: float
    label: str = ""

    __test__ = False  # not a pytest class


def neumann_cosines(coeffs):
    """f(x) = sum_n c_n cos(n pi x) on [0, 1), zero elsewhere (n >= 1, so mean zero)."""
    c = np.asarray(coeffs, dtype=float)
    n = np.arange(1, c.size + 1)

    def F(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return np.sum(c * np.sin(np.multiply.outer(x, n) * math.pi) / (n * math.pi), axis=-1)

    return TestFunction(F, float(math.fsum(c**2) / 2), f"cos{c.size}")


def step_test_function(edges, values):
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=np.complex128)
    cum = np.concatenate([[0.0], np.cumsum(values * np.diff(edges))])

    def F(x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, edges, cum.real) + 1j * np.interp(x, edges, cum.imag)

    return TestFunction(F, float(math.fsum(np.abs(values) ** 2 * np.diff(edges))), "step")


def random_band_limited(n, seed=0, n_max=2):
    """Seeded Neumann-cosine test functions of degree <= n_max."""
    rng = np.random.default_rng(seed)
    return [neumann_cosines(rng.normal(size=n_max)) for _ in range(n)]


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveletFamily:
    offsets: np.ndarray
    taps: np.ndarray  # (N, n_offsets)
    J: int = 4
    K: int = 32
    duplicate: tuple | None = None  # (r, j, m) counted twice
    identity_residual: float = 0.0
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def nu(self):
        return self.taps.shape[0] - 1

    @property
    def N(self):
        return self.taps.shape[0]

    @property
    def size(self):
        return self.nu * (2 * self.J + 1) * (2 * self.K + 1) + (self.duplicate is not None)

    def truncated(self, J, K):
        return WaveletFamily(self.offsets, self.taps, J, K, self.duplicate, self.identity_residual, self.label)

    def with_duplicate(self, r=1, j=0, m=0):
        return WaveletFamily(self.offsets, self.taps, self.J, self.K, (r, j, m), self.identity_residual, self.label)

    def member(self, r, j, m):
        """Step-function description (edges, values) of psi_r^{(j,m)}."""
        N = self.N
        h = float(N) ** (m - 1)
        s = self.offsets
        left = h * (N * j + s)
        amp = float(N) ** ((1 - m) / 2) * self.taps[r]
        order = np.argsort(left)
        edges = np.concatenate([left[order], [left[order][-1] + h]])
        # offsets are consecutive integers, so cells tile [edges[0], edges[-1])
        return edges, amp[order]

    def fourier(self, r, t):
        """Exact transform of the mother band psi_r."""
        t = np.asarray(t, dtype=float)
        w = np.exp(-1j * t / self.N)
        m = np.sum(self.taps[r] * w[..., None] ** self.offsets, axis=-1)
        return m * box_transform(t / self.N) / math.sqrt(self.N)

    def to_dict(self):
        return {
            "nu": self.nu,
            "J": self.J,
            "K": self.K,
            "offsets": [int(s) for s in self.offsets],
            "taps_re": self.taps.real.tolist(),
            "taps_im": self.taps.imag.tolist(),
            "identity_residual": self.identity_residual,
            "label": self.label,
        }


def generate_wavelets(bank=None, J=4, K=32, taps=None, P=64):
    """Family from a bank (taps read off the filters) or from (offsets, C)."""
    if taps is None:
        if bank is None:
            raise ValueError("need a bank or taps")
        offsets, C, resid = taps_from_bank(bank, P)
        label = bank.label
    else:
        offsets, C = taps
        offsets = np.asarray(offsets)
        C = np.asarray(C, dtype=np.complex128)
        resid = 0.0
        label = "taps"
    if offsets.size == 0:
        offsets, C = np.zeros(1, dtype=int), np.zeros((bank.N if bank else 1, 1), dtype=np.complex128)
    span = np.arange(offsets.min(), offsets.max() + 1)
    full = np.zeros((C.shape[0], span.size), dtype=np.complex128)
    full[:, offsets - span[0]] = C
    return WaveletFamily(span, full, J, K, None, resid, label)


def transform_identity_residual(family, t, L=40):
    """max over bands of |psi_r^(N t) sqrt(N) - m_r(e^{-it}) Pi_L(t)| with the
    cascade of the normalised low-pass filter standing in for phi^."""
    N = family.N
    t = np.asarray(t, dtype=float)
    m0 = haar_lowpass(family.nu)
    phi, _ = cascade_product(m0, family.nu, t, L)
    worst = 0.0
    for r in range(N):
        m = np.sum(family.taps[r] * np.exp(-1j * t)[..., None] ** family.offsets, axis=-1)
        lhs = math.sqrt(N) * family.fourier(r, N * t)
        worst = max(worst, float(np.max(np.abs(lhs - m * phi))))
    return worst


def _coefficients(f, family):
    """Array (nu, 2J+1, 2K+1) of <f, psi_r^{(j,m)}>."""
    N = family.N
    ms = np.arange(-family.J, family.J + 1)
    js = np.arange(-family.K, family.K + 1)
    s = family.offsets
    h = np.power(float(N), ms - 1.0)
    a = h[:, None, None] * (N * js[None, :, None] + s[None, None, :])
    cell = f.antiderivative(a + h[:, None, None]) - f.antiderivative(a)
    amp = np.power(float(N), (1.0 - ms) / 2)
    bands = family.taps[1:]
    return np.einsum("rs,mjs->rmj", np.conj(bands), cell) * amp[None, :, None]


def _energy(coef, family):
    terms = list((np.abs(coef) ** 2).ravel())
    if family.duplicate is not None:
        r, j, m = family.duplicate
        terms.append(abs(coef[r - 1, m + family.J, j + family.K]) ** 2)
    return math.fsum(terms)


def frame_sum(f, family):
    """sum |<f, psi>|^2 / ||f||^2 over the truncated family."""
    if not f.norm2 > 0:
        raise DomainError("frame_sum needs a nonzero test function")
    return _energy(_coefficients(f, family), family) / f.norm2


def truncation_curve(f, family, steps):
    """Frame sums for each (J, K) in ``steps``; coefficients are computed once
    at the largest truncation and restricted, so the curve is monotone."""
    Jm = max(J for J, _ in steps)
    Km = max(K for _, K in steps)
    big = family.truncated(Jm, Km)
    coef = _coefficients(f, big)
    out = []
    for J, K in steps:
        sub = coef[:, Jm - J : Jm + J + 1, Km - K : Km + K + 1]
        out.append(_energy(sub, family.truncated(J, K)) / f.norm2)
    return out


DEFAULT_STEPS = ((1, 2), (2, 4), (3, 8), (4, 16), (5, 32), (6, 64))


@dataclass(frozen=True)
class FrameReport:
    ratio_min: float
    ratio_max: float
    truncation: tuple
    ratios: list
    curve: list  # (J, K, min, max)
    seed: int
    gap: float
    tight: bool
    label: str = ""

    def as_dict(self):
        return {
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "truncation": list(self.truncation),
            "ratios": list(self.ratios),
            "curve": [list(c) for c in self.curve],
            "seed": self.seed,
            "gap": self.gap,
            "tight": self.tight,
            "label": self.label,
            "inner_products": "exact cell integrals of an antiderivative",
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


def frame_bounds_estimate(family, n_tests=10, seed=0, tests=None, steps=None, gap=1e-3):
    """min/max frame ratios over seeded test functions, with a truncation
    curve ending at the family's own (J, K)."""
    tests = random_band_limited(n_tests, seed) if tests is None else tests
    if steps is None:
        steps = [s for s in DEFAULT_STEPS if s[0] < family.J and s[1] < family.K] + [(family.J, family.K)]
    curves = [truncation_curve(f, family, steps) for f in tests]
    ratios = [c[-1] for c in curves]
    curve = [(J, K, min(c[i] for c in curves), max(c[i] for c in curves)) for i, (J, K) in enumerate(steps)]
    lo, hi = min(ratios), max(ratios)
    if family.J * family.K <= 4:
        warnings.warn(f"truncation ({family.J}, {family.K}) is coarse; bounds are wide", TruncationWarning, stacklevel=2)
    tight = (hi - lo) <= gap and abs(1 - lo) <= gap
    return FrameReport(lo, hi, (family.J, family.K), ratios, curve, seed, gap, tight, family.label)


def haar_family(nu=1, J=4, K=32):
    offsets, G = haar_taps(nu)
    fam = generate_wavelets(tap_bank(offsets, G), J, K)
    return fam


def certify_bank(bank, n=64):
    """Max polyphase unitarity residual on the default grid."""
    return float(bank_unitarity(bank, default_grid(bank.branch, n)))
