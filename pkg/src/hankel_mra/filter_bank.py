"""Branch systems, polyphase matrices and filter-bank completion.

A bank of N = nu+1 filters m_0..m_nu is unitary when the matrix

    M_kj(z) = sqrt(rho_j) m_k(sigma_j(z)) / sqrt(norm_const * N)

is unitary at every z.  ``complete_from_m0`` builds m_1..m_nu from m_0 by a
pointwise Householder reflection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, special
from ._accel import USE_NUMBA
from .special import DomainError, check_q


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Branch systems
# ---------------------------------------------------------------------------

VARIANTS = ("roots_of_unity", "q_spiral", "half_turn")


@dataclass(frozen=True)
class BranchSystem:
    """Right inverses sigma_0..sigma_nu of the map sigma.

    roots_of_unity: sigma_j(z) = z^{1/N} e^{2 pi i j/N}, sigma(w) = w^N.
    q_spiral: on the radial domain (q^N, 1], sigma_j(x) = x^{1/N} q^j and
        sigma(y) = (y q^{-j})^N on the sheet (q^{j+1}, q^j].
    half_turn: sigma_j(z) = z^{1/N} e^{pi i j}; a branch system only for N = 2.
    """

    nu: int
    variant: str = "roots_of_unity"
    q: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown branch variant {self.variant!r}")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.variant == "q_spiral":
            if self.q is None:
                raise ValueError("q_spiral needs q")
            check_q(self.q)
        if self.variant == "half_turn" and self.nu != 1:
            # e^{pi i j} only runs through the square roots of unity
            raise ValueError("half_turn branches invert z^(nu+1) only for nu = 1")

    @property
    def N(self):
        return self.nu + 1

    def domain(self):
        """'circle' or ('radial', lo, hi)."""
        if self.variant == "q_spiral":
            return ("radial", self.q**self.N, 1.0)
        return "circle"

    def sigma0(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.variant == "q_spiral":
            return np.abs(z) ** (1.0 / self.N) + 0j
        r = np.abs(z)
        th = np.angle(z)
        # branch cut Arg in (-pi, pi]
        th = np.where(th == -math.pi, math.pi, th)
        return r ** (1.0 / self.N) * np.exp(1j * th / self.N)

    def branch_factors(self):
        j = np.arange(self.N)
        if self.variant == "roots_of_unity":
            return np.exp(2j * math.pi * j / self.N)
        if self.variant == "half_turn":
            return np.exp(1j * math.pi * j)
        return self.q**j + 0j

    def branch_points(self, z):
        """Array (..., N) of sigma_j(z)."""
        z = np.asarray(z, dtype=np.complex128)
        if self.variant == "q_spiral":
            lo = self.q**self.N
            x = np.abs(z)
            if np.any((x <= lo * (1 - 1e-15)) | (x > 1 + 1e-15)):
                raise DomainError("q_spiral branch points need z in (q^N, 1]")
        return self.sigma0(z)[..., None] * self.branch_factors()

    def sheet(self, w):
        """Index j with w = sigma_j(sigma(w))."""
        w = np.asarray(w, dtype=np.complex128)
        if self.variant == "q_spiral":
            x = np.abs(w)
            j = np.floor(np.log(x) / math.log(self.q) + 1e-12).astype(np.int64)
            if np.any((j < 0) | (j >= self.N)):
                raise DomainError("point outside the q-spiral domain")
            return j
        base = self.sigma0(self.sigma(w))
        ratio = w / np.where(base == 0, 1.0, base)
        step = (2 * math.pi / self.N) if self.variant == "roots_of_unity" else math.pi
        return np.mod(np.round(np.angle(ratio) / step).astype(np.int64), self.N)

    def sigma(self, w):
        w = np.asarray(w, dtype=np.complex128)
        if self.variant == "q_spiral":
            j = self.sheet(w)
            return (np.abs(w) * self.q ** (-j.astype(float))) ** self.N + 0j
        return w**self.N


def branch_points(z, sys):
    return sys.branch_points(z)


def branch_consistency(sys, zs):
    """max |sigma(sigma_j(z)) - z| over the points and branches."""
    pts = sys.branch_points(zs)
    return float(np.max(np.abs(sys.sigma(pts) - np.asarray(zs)[..., None])))


def branch_overlap(sys, zs):
    """Fraction of points whose image under sigma_j is not recognised as lying
    on sheet j.  Sheets partition the domain, so 0 means the images of
    different branches are disjoint at every sampled point."""
    pts = sys.branch_points(zs)
    sheets = sys.sheet(pts)
    return float(np.mean(sheets != np.arange(sys.N)[None, :]))


def default_grid(sys, n=64):
    """Evaluation points z: roots of unity times an offset on the circle, or a
    log-uniform grid on the radial domain (endpoint 1 included)."""
    if sys.variant == "q_spiral":
        u = (np.arange(n) + 1.0) / n
        return sys.q ** (sys.N * (1 - u)) + 0j
    return np.exp(2j * math.pi * (np.arange(n) + 0.5) / n - 1j * math.pi)


# ---------------------------------------------------------------------------
# Banks and polyphase samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterBank:
    nu: int
    filters: tuple
    rho: np.ndarray
    norm_const: float
    branch: BranchSystem
    label: str = ""

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "filters", tuple(self.filters))
        if rho.shape != (self.nu + 1,) or np.any(rho <= 0):
            raise ValueError("rho must hold nu+1 positive weights")
        if not self.norm_const > 0:
            raise ValueError("norm_const must be positive")
        if len(self.filters) != self.nu + 1:
            raise ValueError("need nu+1 filters")

    @property
    def N(self):
        return self.nu + 1

    def evaluate(self, w):
        """Array (N, ...) of m_k(w)."""
        w = np.asarray(w, dtype=np.complex128)
        return np.stack([np.asarray(f(w), dtype=np.complex128) * np.ones(w.shape) for f in self.filters])

    def with_filters(self, filters, label=None):
        return FilterBank(self.nu, filters, self.rho, self.norm_const, self.branch, label or self.label)


@dataclass(frozen=True)
class PolyphaseSample:
    z: complex
    matrix: np.ndarray


def polyphase_matrices(bank, zs):
    """Array (n, N, N) with M[p, k, j] = sqrt(rho_j) m_k(sigma_j(z_p)) / sqrt(norm_const N)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    pts = bank.branch.branch_points(zs)
    vals = bank.evaluate(pts)  # (N, n, N)
    pref = 1.0 / math.sqrt(bank.norm_const * bank.N)
    return pref * np.sqrt(bank.rho)[None, None, :] * np.transpose(vals, (1, 0, 2))


def assemble_polyphase(bank, z):
    return PolyphaseSample(complex(z), polyphase_matrices(bank, [z])[0])


def unitarity_residual(M):
    """max entry of |M* M - I|; accepts a PolyphaseSample, one matrix or a stack."""
    A = M.matrix if isinstance(M, PolyphaseSample) else np.asarray(M, dtype=np.complex128)
    if A.ndim == 2:
        A = A[None]
    n = A.shape[-1]
    G = np.conj(np.transpose(A, (0, 2, 1))) @ A
    return float(np.max(np.abs(G - np.eye(n)[None])))


def bank_unitarity(bank, zs):
    return unitarity_residual(polyphase_matrices(bank, zs))


# ---------------------------------------------------------------------------
# Completion
# ---------------------------------------------------------------------------


def householder_complete(V):
    """Unitaries with row 0 equal to each row of V (unit vectors)."""
    V = np.ascontiguousarray(np.atleast_2d(V), dtype=np.complex128)
    if USE_NUMBA:
        return _kernels.householder_complete_loop(V)
    return _kernels.householder_complete_np(V)


def _polyphase_vector(m0, sys, rho, norm_const, zs):
    pts = sys.branch_points(zs)
    vals = np.asarray(m0(pts), dtype=np.complex128) * np.ones(pts.shape)
    return np.sqrt(rho)[None, :] * vals / math.sqrt(norm_const * sys.N)


def complete_from_m0(m0, sys, rho=None, norm_const=1.0, check_grid=None, tol=1e-6, label="completed"):
    """Complete m0 to a unitary bank.

    m_k(w) = sqrt(norm_const N / rho_j) H(sigma(w))[k, j], j the sheet of w,
    where H(z) is the Householder completion of the polyphase vector of m0
    at z.  The unit-norm precondition is checked on ``check_grid``.
    """
    N = sys.N
    rho = np.ones(N) if rho is None else np.asarray(rho, dtype=float)
    grid = default_grid(sys) if check_grid is None else np.asarray(check_grid, dtype=np.complex128)
    norms = np.linalg.norm(_polyphase_vector(m0, sys, rho, norm_const, grid), axis=1)
    bad = np.flatnonzero(np.abs(norms - 1) > tol)
    if bad.size:
        z = grid[bad[0]]
        raise PreconditionError(f"polyphase vector of m0 has norm {norms[bad[0]]:.6g} at z={z:.6g}")
    scale = np.sqrt(norm_const * N / rho)

    def make(k):
        if k == 0:
            return m0

        def mk(w):
            w = np.asarray(w, dtype=np.complex128)
            flat = w.ravel()
            z = sys.sigma(flat)
            j = sys.sheet(flat)
            H = householder_complete(_polyphase_vector(m0, sys, rho, norm_const, z))
            out = H[np.arange(flat.size), k, j] * scale[j]
            return out.reshape(w.shape)

        return mk

    return FilterBank(sys.nu, [make(k) for k in range(N)], rho, norm_const, sys, label)


def complete_vectors(V):
    """Pointwise completion of sampled polyphase vectors (rows of V)."""
    V = np.atleast_2d(np.asarray(V, dtype=np.complex128))
    norms = np.linalg.norm(V, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1) > 1e-6)
    if bad.size:
        raise PreconditionError(f"sample {bad[0]} has norm {norms[bad[0]]:.6g}")
    return householder_complete(V)


def random_qmf_filter(sys, rho=None, norm_const=1.0, seed=0, degree=3):
    """A smooth QMF-valid m0: the polyphase vector is a normalised random
    polynomial vector p(z)/|p(z)|, read back through the sheets."""
    rng = np.random.default_rng(seed)
    N = sys.N
    rho = np.ones(N) if rho is None else np.asarray(rho, dtype=float)
    C = rng.normal(size=(N, degree + 1)) + 1j * rng.normal(size=(N, degree + 1))
    C[:, 0] += 3.0  # keep |p| away from zero

    def vec(z):
        z = np.asarray(z, dtype=np.complex128)
        P = np.stack([np.polyval(C[j], z) for j in range(N)], axis=-1)
        return P / np.linalg.norm(P, axis=-1, keepdims=True)

    scale = np.sqrt(norm_const * N / rho)

    def m0(w):
        w = np.asarray(w, dtype=np.complex128)
        flat = w.ravel()
        j = sys.sheet(flat)
        v = vec(sys.sigma(flat))
        return (v[np.arange(flat.size), j] * scale[j]).reshape(w.shape)

    return m0


def constant_filter(value):
    return lambda w: value + 0j * np.asarray(w, dtype=np.complex128)


def haar_bank(sys):
    """m_k(w) = e^{-2 pi i k j(w)/N}: the DFT bank, unitary with norm_const 1."""
    N = sys.N

    def make(k):
        return lambda w: np.exp(-2j * math.pi * k * sys.sheet(w) / N) + 0j

    return FilterBank(sys.nu, [make(k) for k in range(N)], np.ones(N), 1.0, sys, "haar")


# ---------------------------------------------------------------------------
# Weighted orthogonality on the q-spiral
# ---------------------------------------------------------------------------


def annular_bank_constants(nu, q):
    """(rho, norm_const) for which unitarity is the weighted orthogonality
    sum_j q^{-2j} m_r(t q^j) conj(m_r'(t q^j)) = delta_{rr'} / (1 - q^{2(nu+1)})."""
    d_q = 1 / (1 - q ** (2 * (nu + 1)))
    return q ** (-2.0 * np.arange(nu + 1)), d_q / (nu + 1)


def weighted_orthogonality_residual(bank, ts):
    """max_{r,r',t} |sum_j q^{-2j} m_r(t q^j) conj(m_r'(t q^j)) - delta d_q| for t in (q, 1]."""
    sys = bank.branch
    if sys.variant != "q_spiral":
        raise ValueError("weighted orthogonality is defined for q_spiral banks")
    q, nu = sys.q, sys.nu
    d_q = 1 / (1 - q ** (2 * (nu + 1)))
    ts = np.asarray(ts, dtype=float)
    j = np.arange(nu + 1)
    pts = ts[:, None] * q**j[None, :]
    vals = bank.evaluate(pts + 0j)  # (N, n, N)
    w = q ** (-2.0 * j)
    G = np.einsum("j,anj,bnj->nab", w, vals, np.conj(vals))
    return float(np.max(np.abs(G - d_q * np.eye(nu + 1)[None])))


def measure_selfsimilarity(nu, q, n_cells=16, measure="lebesgue"):
    """Ratios mu(sigma_r(E)) / mu(sigma_0(E)) over cells E of (q^N, 1] for
    mu = x^nu dx ('lebesgue') or the Jackson measure x^nu d_q x ('jackson').

    Returns {r: (mean, spread)} next to the weights q^{-2r} used by the
    weighted bank.
    """
    sys = BranchSystem(nu, "q_spiral", q)
    N = sys.N
    edges = np.geomspace(q**N, 1.0, n_cells + 1)

    def mu(a, b):
        if measure == "lebesgue":
            return (b ** (nu + 1) - a ** (nu + 1)) / (nu + 1)
        lq = math.log(q)
        k_lo = int(math.ceil(math.log(b) / lq - 1e-12))
        k_hi = int(math.floor(math.log(a) / lq + 1e-12))
        return math.fsum((1 - q) * q**k * q ** (k * nu) for k in range(k_lo, k_hi + 1) if a < q**k <= b)

    out = {}
    for r in range(N):
        ratios = []
        for a, b in zip(edges[:-1], edges[1:]):
            a0, b0 = a ** (1 / N), b ** (1 / N)
            m0 = mu(a0, b0)
            mr = mu(a0 * q**r, b0 * q**r)
            if m0 > 0:
                ratios.append(mr / m0)
        ratios = np.asarray(ratios)
        out[r] = (float(ratios.mean()), float(ratios.max() - ratios.min())) if ratios.size else (math.nan, math.nan)
    return {"ratios": out, "reference_rho": {r: q ** (-2 * r) for r in range(N)}}


# ---------------------------------------------------------------------------
# Cyclic Fourier pair
# ---------------------------------------------------------------------------


def cyclic_scale(nu, q=None):
    """(1/(1-q^{2(nu+1)}))^{-1}, or 1 without q."""
    return 1.0 if q is None else 1 - q ** (2 * (nu + 1))


def cyclic_fourier_forward(filters, nu, z, scale=1.0):
    """A_ij(z) = scale * sum_{w^N = z} w^{-j} m_i(w)."""
    N = nu + 1
    if z == 0:
        raise DomainError("z must be nonzero")
    roots = BranchSystem(nu).branch_points(z)
    A = np.empty((len(filters), N), dtype=np.complex128)
    for i, f in enumerate(filters):
        vals = np.asarray(f(roots), dtype=np.complex128) * np.ones(N)
        for j in range(N):
            A[i, j] = scale * np.sum(roots ** (-j) * vals)
    return A


def cyclic_fourier_inverse(A, w, scale=1.0):
    """m_i(w) = sum_j w^j A_ij(w^N) / (N scale), A computed at z = w^N.

    The 1/(N scale) factor makes this the exact inverse of the forward sum.
    """
    A = np.asarray(A, dtype=np.complex128)
    N = A.shape[1]
    powers = np.asarray(w, dtype=np.complex128) ** np.arange(N)
    return (A @ powers) / (N * scale)


def cyclic_round_trip(filters, nu, z, scale=1.0):
    roots = BranchSystem(nu).branch_points(z)
    A = cyclic_fourier_forward(filters, nu, z, scale)
    worst = 0.0
    for w in roots:
        back = cyclic_fourier_inverse(A, w, scale)
        direct = np.array([complex(np.asarray(f(np.array([w])))[0]) for f in filters])
        worst = max(worst, float(np.max(np.abs(back - direct))))
    return worst


# ---------------------------------------------------------------------------
# Bessel-series banks
# ---------------------------------------------------------------------------


def _coeff_items(b):
    items = sorted(b.items()) if isinstance(b, dict) else list(enumerate(b))
    return [(int(k), complex(v)) for k, v in items if v != 0]


def bessel_series_filters(b, nu=1, q=None, variant="half_turn"):
    """m_r(w) = sum_k b_k J_{k+r}(w) (or Hahn-Exton J_{k+r}(w; q)), r = 0..nu."""
    items = _coeff_items(b)
    if q is not None:
        check_q(q)
        if any(k < 0 for k, _ in items):
            raise ValueError("q-Bessel filters need coefficients with k >= 0")
    sys = BranchSystem(nu, variant, q if variant == "q_spiral" else None)

    def make(r):
        def m(w):
            w = np.asarray(w, dtype=np.complex128)
            out = np.zeros(w.shape, dtype=np.complex128)
            for k, bk in items:
                if q is None:
                    out += bk * special.bessel_j_int(k + r, w)
                else:
                    out += bk * special.q_bessel_complex(k + r, w, q)
            return out

        return m

    return FilterBank(nu, [make(r) for r in range(nu + 1)], np.ones(nu + 1), 1.0, sys, "bessel_series")


def residue_diagonal_condition(b, nu):
    """|1 - (nu+1) sum_{k>=0} |b_k|^2 / (k! 2^k)^2|; negative k is rejected."""
    items = _coeff_items(b)
    if any(k < 0 for k, _ in items):
        raise ValueError("the residue condition is only defined for k >= 0")
    s = math.fsum(abs(v) ** 2 / (math.factorial(k) * 2**k) ** 2 for k, v in items)
    return abs(1 - (nu + 1) * s)


def residue_contour_terms(ks, n_points=256):
    """(1/2 pi i) contour integral of J_k(z)^2 / z^{2k+1} over |z| = 1 by the
    trapezoid rule (exponentially accurate), next to 1/(k! 2^k)^2."""
    th = 2 * math.pi * np.arange(n_points) / n_points
    z = np.exp(1j * th)
    out = {}
    for k in ks:
        vals = special.bessel_j_int(k, z) ** 2 / z ** (2 * k)
        out[int(k)] = (complex(np.mean(vals)), 1.0 / (math.factorial(k) * 2**k) ** 2)
    return out


def residue_contour_check(b, nu, n_points=256):
    """Compare (nu+1) sum |b_k|^2 * contour value with the arithmetic sum.

    Also reports the mean of sum_r |m_r(sigma_r(z))|^2 over the unit circle,
    which is what the diagonal condition integrates before the leading-term
    residue is taken."""
    items = _coeff_items(b)
    terms = residue_contour_terms([k for k, _ in items], n_points)
    contour = (nu + 1) * math.fsum(abs(v) ** 2 * terms[k][0].real for k, v in items)
    arithmetic = (nu + 1) * math.fsum(abs(v) ** 2 * terms[k][1] for k, v in items)
    # half turns only cover the square roots of unity
    bank = bessel_series_filters(b, nu, variant="half_turn" if nu == 1 else "roots_of_unity")
    th = 2 * math.pi * (np.arange(n_points) + 0.5) / n_points
    z = np.exp(1j * th)
    pts = bank.branch.branch_points(z)
    diag = sum(np.abs(bank.filters[r](pts[:, r])) ** 2 for r in range(nu + 1))
    return {
        "contour": contour,
        "arithmetic": arithmetic,
        "agreement": abs(contour - arithmetic),
        "circle_mean_of_diagonal": float(np.mean(diag)),
    }


def off_diagonal_sums(bank, ts):
    """max_{k != l, t} |sum_r m_k(t e^{pi i r}) conj(m_l(t e^{pi i r}))|."""
    pts = bank.branch.branch_points(np.asarray(ts, dtype=np.complex128))
    vals = bank.evaluate(pts)
    G = np.einsum("anj,bnj->nab", vals, np.conj(vals))
    off = G - np.einsum("nab,ab->nab", G, np.eye(bank.N))
    return float(np.max(np.abs(off)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def bank_to_json(bank, grid=None):
    """JSON document with filter samples at the branch points of ``grid``."""
    grid = default_grid(bank.branch) if grid is None else np.asarray(grid, dtype=np.complex128)
    pts = bank.branch.branch_points(grid)
    vals = bank.evaluate(pts)
    doc = {
        "nu": bank.nu,
        "variant": bank.branch.variant,
        "q": bank.branch.q,
        "rho": [float(r) for r in bank.rho],
        "norm_const": float(bank.norm_const),
        "grid": [[float(z.real), float(z.imag)] for z in grid],
        "samples": [
            [[[float(v.real), float(v.imag)] for v in row] for row in vals[k]] for k in range(bank.N)
        ],
        "label": bank.label,
    }
    return json.dumps(doc, sort_keys=True)


@dataclass(frozen=True)
class SampledBank:
    nu: int
    variant: str
    q: float | None
    rho: np.ndarray
    norm_const: float
    grid: np.ndarray
    samples: np.ndarray  # (N, n_grid, N): m_k(sigma_j(z_p))
    label: str = ""

    def matrices(self):
        pref = 1.0 / math.sqrt(self.norm_const * (self.nu + 1))
        return pref * np.sqrt(self.rho)[None, None, :] * np.transpose(self.samples, (1, 0, 2))


def bank_from_json(text):
    doc = json.loads(text)
    grid = np.array([complex(a, b) for a, b in doc["grid"]])
    samples = np.array([[[complex(a, b) for a, b in row] for row in mk] for mk in doc["samples"]])
    return SampledBank(
        doc["nu"], doc["variant"], doc["q"], np.array(doc["rho"]), doc["norm_const"], grid, samples, doc.get("label", "")
    )


def sampled_to_json(sb):
    doc = {
        "nu": sb.nu,
        "variant": sb.variant,
        "q": sb.q,
        "rho": [float(r) for r in sb.rho],
        "norm_const": float(sb.norm_const),
        "grid": [[float(z.real), float(z.imag)] for z in sb.grid],
        "samples": [[[[float(v.real), float(v.imag)] for v in row] for row in mk] for mk in sb.samples],
        "label": sb.label,
    }
    return json.dumps(doc, sort_keys=True)
