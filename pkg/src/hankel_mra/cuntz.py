"""Cuntz-algebra representations from filter banks.

    (S_k xi)(w)    = kappa m_k(w) xi(sigma(w))
    (S_k^* eta)(z) = kappa sum_r rho'_r conj(m_k(sigma_r(z))) eta(sigma_r(z))

act on a tower of node sets: level L holds sigma_{d_1} o ... o sigma_{d_L}(z_b)
for base points z_b, so sigma maps level L+1 onto level L node for node and
sigma_r maps level L into level L+1.  Level L carries the self-similar
measure with node weights (1/M) prod rho'_{d_i}, so that
int f dmu = sum_r rho'_r int f o sigma_r dmu holds exactly between levels.  With rho' = rho / sum(rho) and kappa = sqrt(sum(rho) / (norm_const N))
S_k^* is the true adjoint and the relations reduce to unitarity of the
polyphase matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .filter_bank import BranchSystem, FilterBank, default_grid

CONVENTIONS = ("symmetric", "lumped")
RHO_CONVENTIONS = ("normalized", "unnormalized")


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Representation:
    bank: FilterBank
    levels: int = 4
    base_points: int = 8
    convention: str = "symmetric"
    rho_convention: str = "normalized"
    _nodes: list = field(default=None, repr=False, compare=False)
    _filters: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")
        if self.rho_convention not in RHO_CONVENTIONS:
            raise ValueError(f"unknown rho convention {self.rho_convention!r}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        sys = self.bank.branch
        base = default_grid(sys, self.base_points)
        nodes = [base]
        for _ in range(self.levels):
            bp = sys.branch_points(nodes[-1])  # (..., N): sigma_r of each node
            nodes.append(np.moveaxis(bp, -1, 1))
        # filter values m_k at every level >= 1
        filt = [None] + [self.bank.evaluate(n) for n in nodes[1:]]
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_filters", filt)

    @property
    def N(self):
        return self.bank.N

    @property
    def measure_rho(self):
        rho = self.bank.rho
        return rho / rho.sum() if self.rho_convention == "normalized" else rho

    @property
    def kappa(self):
        """Scalar on S_k; S_k^* carries the same factor (symmetric) or the square (lumped)."""
        if self.convention == "lumped":
            return 1.0
        return math.sqrt(self._adjoint_const())

    def _adjoint_const(self):
        # kappa^2 * rho' must equal rho / (norm_const N)
        b = self.bank
        scale = b.rho.sum() if self.rho_convention == "normalized" else 1.0
        return scale / (b.norm_const * b.N)

    @property
    def kappa_adjoint(self):
        if self.convention == "lumped":
            return self._adjoint_const()
        return math.sqrt(self._adjoint_const())

    def nodes(self, level):
        return self._nodes[level]

    def weights(self, level):
        """Node weights of the self-similar measure at ``level``."""
        w = np.full(self.base_points, 1.0 / self.base_points)
        rho = self.measure_rho
        for _ in range(level):
            w = w[:, None, ...] * rho.reshape((1, -1) + (1,) * (w.ndim - 1))
        return w

    def inner(self, level, xi, eta):
        return complex(np.sum(self.weights(level) * np.conj(xi) * eta))

    def norm(self, level, xi):
        return math.sqrt(max(0.0, self.inner(level, xi, xi).real))

    def _check(self, level, xi):
        shape = self._nodes[level].shape
        if np.shape(xi) != shape:
            raise GridError(f"function must be sampled on level {level} nodes {shape}")

    def apply_S(self, k, xi, level):
        """S_k: level -> level+1."""
        if level + 1 > self.levels:
            raise GridError("S_k leaves the tower; build more levels")
        self._check(level, xi)
        m = self._filters[level + 1][k]
        return self.kappa * m * np.asarray(xi)[:, None, ...]

    def apply_S_adjoint(self, k, eta, level):
        """S_k^*: level -> level-1."""
        if level < 1:
            raise GridError("S_k^* needs level >= 1")
        self._check(level, eta)
        m = self._filters[level][k]
        rho = self.measure_rho.reshape((1, -1) + (1,) * (np.ndim(eta) - 2))
        return self.kappa_adjoint * np.sum(rho * np.conj(m) * eta, axis=1)

    def random_function(self, level, rng):
        shape = self._nodes[level].shape
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    def descriptor(self):
        b = self.bank
        return {
            "nu": b.nu,
            "variant": b.branch.variant,
            "q": b.branch.q,
            "levels": self.levels,
            "base_points": self.base_points,
            "convention": self.convention,
            "rho_convention": self.rho_convention,
            "rho": [float(r) for r in b.rho],
            "norm_const": float(b.norm_const),
            "label": b.label,
        }


def representation(bank, **kw):
    return Representation(bank, **kw)


@dataclass(frozen=True)
class RelationReport:
    max_isometry_residual: float
    completeness_residual: float
    adjointness_residual: float
    range_orthogonality_residual: float
    test_count: int
    seed: int
    level: int
    descriptor: dict

    def passed(self, tol=1e-10):
        return self.max_isometry_residual <= tol and self.completeness_residual <= tol

    def as_dict(self):
        return {
            "max_isometry_residual": self.max_isometry_residual,
            "completeness_residual": self.completeness_residual,
            "adjointness_residual": self.adjointness_residual,
            "range_orthogonality_residual": self.range_orthogonality_residual,
            "test_count": self.test_count,
            "seed": self.seed,
            "level": self.level,
            "representation": self.descriptor,
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


def relation_report(rep, n_tests=20, seed=0, level=None):
    """Cuntz relations on seeded complex Gaussian test functions.

    isometry: max_{k,k'} ||S_k^* S_k' xi - delta xi|| / ||xi|| (xi on ``level``)
    completeness: ||sum_k S_k S_k^* eta - eta|| / ||eta|| (eta on ``level``)
    adjointness: |<S_k xi, eta> - <xi, S_k^* eta>| relative
    range orthogonality: |<S_k xi, S_k' eta> - delta <xi, eta>| relative
    """
    if n_tests < 1:
        raise ValueError("n_tests must be >= 1")
    level = rep.levels - 1 if level is None else level
    if not 1 <= level <= rep.levels - 1:
        raise GridError("level must leave room above and below")
    rng = np.random.default_rng(seed)
    N = rep.N
    iso = comp = adj = rng_orth = 0.0
    for _ in range(n_tests):
        xi = rep.random_function(level, rng)
        eta = rep.random_function(level, rng)
        up = rep.random_function(level + 1, rng)
        nx = rep.norm(level, xi)
        ne = rep.norm(level, eta)
        nu_ = rep.norm(level + 1, up)
        Sx = [rep.apply_S(k, xi, level) for k in range(N)]
        Se = [rep.apply_S(k, eta, level) for k in range(N)]
        for k in range(N):
            for kp in range(N):
                back = rep.apply_S_adjoint(k, Sx[kp], level + 1)
                target = xi if k == kp else 0.0
                diff = back - target
                iso = max(iso, rep.norm(level, diff) / nx)
                ip = rep.inner(level + 1, Sx[k], Se[kp]) - (rep.inner(level, xi, eta) if k == kp else 0.0)
                rng_orth = max(rng_orth, abs(ip) / (nx * ne))
            lhs = rep.inner(level + 1, Sx[k], up)
            rhs = rep.inner(level, xi, rep.apply_S_adjoint(k, up, level + 1))
            adj = max(adj, abs(lhs - rhs) / (nx * nu_))
        total = sum(rep.apply_S(k, rep.apply_S_adjoint(k, eta, level), level - 1) for k in range(N))
        # eta lives on `level`; S_k S_k^* maps level -> level-1 -> level
        comp = max(comp, rep.norm(level, total - eta) / ne)
    return RelationReport(iso, comp, adj, rng_orth, n_tests, seed, level, rep.descriptor())


def perturbed(bank, index=1, factor=1.01):
    """Copy of ``bank`` with filter ``index`` scaled (negative control)."""
    filters = list(bank.filters)
    f = filters[index]
    filters[index] = lambda w, f=f: factor * np.asarray(f(w))
    return bank.with_filters(filters, label=f"{bank.label}-perturbed")


# ---------------------------------------------------------------------------
# Measure self-similarity on the continuum domain
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _measure(sys, kind):
    """Return (density in the log-radius / angle variable, domain interval)."""
    nu = sys.nu
    if sys.variant == "q_spiral":
        lo = math.log(sys.q**sys.N)
        if kind == "lebesgue":  # x^nu dx = e^{(nu+1) s} ds, x = e^s
            return (lambda s: np.exp((nu + 1) * s)), (lo, 0.0)
        if kind == "haar":  # dx / x = ds
            return (lambda s: np.ones_like(s)), (lo, 0.0)
        raise ValueError(f"unknown measure {kind!r}")
    if kind in ("haar", "arc"):
        return (lambda s: np.ones_like(s)), (-math.pi, math.pi)
    raise ValueError(f"unknown measure {kind!r} on the circle")


def _to_point(sys, s):
    return np.exp(s) + 0j if sys.variant == "q_spiral" else np.exp(1j * s)


def _image(sys, s, r):
    """sigma_r in the log-radius / angle variable (affine, no wrapping)."""
    if sys.variant == "q_spiral":
        return s / sys.N + r * math.log(sys.q)
    return s / sys.N + float(np.angle(sys.branch_factors()[r]))


def _integrate(density, a, b, f=None, sys=None):
    x = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X
    vals = density(x) if f is None else density(x) * f(_to_point(sys, x))
    return 0.5 * (b - a) * np.sum(_GL_W * vals)


def measure_selfsimilarity_check(sys, kind="haar", n_cells=16, rho=None):
    """Per-cell ratios mu(sigma_r(E)) / mu(E) on a partition of the domain and
    the residual of int f dmu = sum_r rho_r int f(sigma_r(z)) dmu(z) for five
    test functions (rho defaults to the mean empirical ratios).

    Images sigma_r(E) of a cell are intervals in the same variable, so both
    measures are Gauss-Legendre integrals of the density.
    """
    density, (lo, hi) = _measure(sys, kind)
    edges = np.linspace(lo, hi, n_cells + 1)
    ratios = {r: [] for r in range(sys.N)}
    for a, b in zip(edges[:-1], edges[1:]):
        mE = _integrate(density, a, b)
        for r in range(sys.N):
            ia, ib = _image(sys, a, r), _image(sys, b, r)
            ratios[r].append(_integrate(density, ia, ib) / mE)
    stats = {r: (float(np.mean(v)), float(np.max(v) - np.min(v))) for r, v in ratios.items()}
    rho_used = np.array([stats[r][0] for r in range(sys.N)]) if rho is None else np.asarray(rho, dtype=float)

    tests = [
        lambda z: np.ones_like(z, dtype=float),
        lambda z: np.abs(z) ** 2 + np.real(z),
        lambda z: np.cos(3 * np.angle(z)) + np.abs(z),
        lambda z: np.exp(-np.abs(z - 0.3) ** 2),
        lambda z: np.real(z**2) + np.imag(z),
    ]
    worst = 0.0
    fine = np.linspace(lo, hi, 65)
    for f in tests:
        lhs = sum(_integrate(density, a, b, f, sys) for a, b in zip(fine[:-1], fine[1:]))
        rhs = 0.0
        for r in range(sys.N):

            def g(z, r=r):
                return f(sys.branch_points(z)[..., r])

            rhs += rho_used[r] * sum(_integrate(density, a, b, g, sys) for a, b in zip(fine[:-1], fine[1:]))
        size = sum(_integrate(density, a, b, lambda z: np.abs(f(z)), sys) for a, b in zip(fine[:-1], fine[1:]))
        worst = max(worst, abs(lhs - rhs) / size)
    return {
        "measure": kind,
        "ratios": {str(r): list(v) for r, v in stats.items()},
        "rho_used": [float(x) for x in rho_used],
        "identity_residual": float(worst),
    }
