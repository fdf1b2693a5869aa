"""Inner loops: Bessel/q-Bessel series, the q-lattice kernel, batched
Householder completion.

Every kernel has a ``*_loop`` version (numba-compiled when available) and a
``*_np`` version (vectorised numpy).  ``_accel.USE_NUMBA`` picks the one used
by the public modules; both are importable so they can be compared.
"""

import math

import numpy as np

from ._accel import njit

# ---------------------------------------------------------------------------
# Classical Bessel: even series S(w) = sum_k w^k / (k! (nu+1)_k), w = -x^2/4
# ---------------------------------------------------------------------------


@njit
def bessel_even_series_loop(nu, w, tol, max_terms):
    n = w.shape[0]
    out = np.empty(n, dtype=np.complex128)
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        term = 1.0 + 0.0j
        s = 1.0 + 0.0j
        small = 0
        k = 0
        while True:
            k += 1
            if k >= max_terms:
                ok[i] = False
                break
            term = term * w[i] / (k * (nu + k))
            s += term
            if abs(term) <= tol * abs(s):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        out[i] = s
    return out, ok


def bessel_even_series_np(nu, w, tol, max_terms):
    w = np.asarray(w, dtype=np.complex128)
    term = np.ones_like(w)
    s = np.ones_like(w)
    small = np.zeros(w.shape, dtype=np.int64)
    done = np.zeros(w.shape, dtype=bool)
    k = 0
    while not done.all():
        k += 1
        if k >= max_terms:
            break
        active = ~done
        term = np.where(active, term * w / (k * (nu + k)), term)
        s = np.where(active, s + term, s)
        tiny = np.abs(term) <= tol * np.abs(s)
        small = np.where(active & tiny, small + 1, np.where(active, 0, small))
        done = done | (small >= 3)
    return s, done


# ---------------------------------------------------------------------------
# Hahn-Exton q-Bessel, direct series
#   J_a(x;q) = pref * x^a * sum_k (-1)^k q^{k(k+1)/2} x^{2k} / ((q^{a+1};q)_k (q;q)_k)
# The x^a factor and pref are applied by the caller.
# ---------------------------------------------------------------------------


@njit
def hahn_exton_series_loop(alpha, x2, q, tol, max_terms):
    n = x2.shape[0]
    out = np.empty(n, dtype=np.complex128)
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        term = 1.0 + 0.0j
        s = 1.0 + 0.0j
        small = 0
        k = 0
        qk = 1.0
        while True:
            k += 1
            if k >= max_terms:
                ok[i] = False
                break
            qk *= q
            term = -term * qk * x2[i] / ((1.0 - q ** (alpha + k)) * (1.0 - qk))
            s += term
            if abs(term) <= tol * abs(s):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        out[i] = s
    return out, ok


def hahn_exton_series_np(alpha, x2, q, tol, max_terms):
    x2 = np.asarray(x2, dtype=np.complex128)
    term = np.ones_like(x2)
    s = np.ones_like(x2)
    small = np.zeros(x2.shape, dtype=np.int64)
    done = np.zeros(x2.shape, dtype=bool)
    k = 0
    qk = 1.0
    while not done.all():
        k += 1
        if k >= max_terms:
            break
        qk *= q
        active = ~done
        step = -qk / ((1.0 - q ** (alpha + k)) * (1.0 - qk))
        term = np.where(active, term * step * x2, term)
        s = np.where(active, s + term, s)
        tiny = np.abs(term) <= tol * np.abs(s)
        small = np.where(active & tiny, small + 1, np.where(active, 0, small))
        done = done | (small >= 3)
    return s, done


# ---------------------------------------------------------------------------
# Lattice kernel
#   K(j) = x^j q^{j/2} (x^2 q;q)_inf/(q;q)_inf  1phi1(0; x^2 q; q, q^{j+1})
# evaluated through the symmetric form
#   (c;q)_inf 1phi1(0;c;q,z) = sum_k (-1)^k q^{k(k-1)/2} c^k (z q^k;q)_inf / (q;q)_k
# which for z = q^{j+1} only keeps k >= max(0, -j) and carries non-negative
# powers of x.  Terms are built in log space so huge |j| underflow cleanly.
# ---------------------------------------------------------------------------


def log_tail_products(q, n):
    """Tables ``log (q^e;q)_inf`` for e = 0..n (entry 0 is -inf) and
    ``log (q;q)_k`` for k = 0..n."""
    tail = np.zeros(n + 1)
    # factors with q^i < 1e-18 do not change a double
    far = int(math.ceil(math.log(1e-18) / math.log(q))) + 1
    acc = 0.0
    for i in range(max(far, n), n, -1):
        acc += math.log1p(-(q**i))
    for e in range(n, 0, -1):
        acc += math.log1p(-(q**e))
        tail[e] = acc
    tail[0] = -np.inf
    head = np.zeros(n + 1)
    for k in range(1, n + 1):
        head[k] = head[k - 1] + math.log1p(-(q**k))
    return tail, head


@njit
def lattice_kernel_loop(js, logx, q, log_tail, log_head, tol, max_terms):
    logq = math.log(q)
    n_tab = log_tail.shape[0]
    out = np.empty(js.shape[0])
    ok = np.ones(js.shape[0], dtype=np.bool_)
    log_qq_inf = log_tail[1]
    for i in range(js.shape[0]):
        j = js[i]
        k0 = 0 if j >= 0 else -j
        s = 0.0
        small = 0
        k = k0
        while True:
            if k - k0 >= max_terms or k >= log_head.shape[0] or j + 1 + k >= n_tab:
                ok[i] = False
                break
            p = j + 2 * k
            if p == 0:
                lx = 0.0
            elif logx == -np.inf:
                lx = -np.inf
            else:
                lx = p * logx
            lt = (0.5 * j + 0.5 * k * (k + 1)) * logq + lx - log_qq_inf
            lt += log_tail[j + 1 + k] - log_head[k]
            term = math.exp(lt) if lt > -745.0 else 0.0
            if k % 2 == 1:
                term = -term
            s += term
            if abs(term) <= tol * abs(s) or (term == 0.0 and s == 0.0 and k > k0 + 2):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
            k += 1
        out[i] = s
    return out, ok


def lattice_kernel_np(js, logx, q, log_tail, log_head, tol, max_terms):
    js = np.asarray(js, dtype=np.int64)
    logq = math.log(q)
    k0 = np.where(js >= 0, 0, -js)
    n_tab = log_tail.shape[0]
    s = np.zeros(js.shape)
    small = np.zeros(js.shape, dtype=np.int64)
    done = np.zeros(js.shape, dtype=bool)
    ok = np.ones(js.shape, dtype=bool)
    log_qq_inf = log_tail[1]
    for step in range(max_terms):
        if done.all():
            break
        k = k0 + step
        over = (k >= log_head.shape[0]) | (js + 1 + k >= n_tab)
        ok &= ~(over & ~done)
        done |= over
        active = ~done
        kk = np.where(active, k, 0)
        p = js + 2 * kk
        if logx == -np.inf:
            lx = np.where(p == 0, 0.0, -np.inf)
        else:
            lx = p * logx
        idx = np.where(active, js + 1 + kk, 1)
        lt = (0.5 * js + 0.5 * kk * (kk + 1)) * logq + lx - log_qq_inf
        lt = lt + log_tail[idx] - log_head[kk]
        with np.errstate(under="ignore"):
            term = np.where(lt > -745.0, np.exp(np.minimum(lt, 700.0)), 0.0)
        term = np.where(kk % 2 == 1, -term, term)
        term = np.where(active, term, 0.0)
        s = s + term
        tiny = (np.abs(term) <= tol * np.abs(s)) | ((term == 0.0) & (s == 0.0) & (step > 2))
        small = np.where(active & tiny, small + 1, np.where(active, 0, small))
        done |= small >= 3
    ok &= done
    return s, ok


# ---------------------------------------------------------------------------
# Batched Householder completion: for unit vectors v (rows of V) build the
# unitary W with W[:, 0] = v, return M = W^T so that row 0 of M equals v.
# ---------------------------------------------------------------------------


@njit
def householder_complete_loop(V):
    n, N = V.shape
    out = np.empty((n, N, N), dtype=np.complex128)
    for p in range(n):
        v = V[p]
        a0 = abs(v[0])
        ph = v[0] / a0 if a0 > 0.0 else 1.0 + 0.0j
        alpha = -ph
        u = v.copy()
        u[0] = u[0] - alpha
        unorm2 = 0.0
        for i in range(N):
            unorm2 += u[i].real ** 2 + u[i].imag ** 2
        for i in range(N):
            for j in range(N):
                h = -2.0 * u[i] * np.conj(u[j]) / unorm2
                if i == j:
                    h += 1.0
                # W = H diag(alpha, 1, ..., 1)
                if j == 0:
                    h = h * alpha
                out[p, j, i] = h
    return out


def householder_complete_np(V):
    V = np.asarray(V, dtype=np.complex128)
    n, N = V.shape
    a0 = np.abs(V[:, 0])
    ph = np.where(a0 > 0, V[:, 0] / np.where(a0 > 0, a0, 1.0), 1.0)
    alpha = -ph
    u = V.copy()
    u[:, 0] -= alpha
    unorm2 = np.sum(np.abs(u) ** 2, axis=1)
    H = np.eye(N, dtype=np.complex128)[None] - 2.0 * u[:, :, None] * np.conj(u)[:, None, :] / unorm2[:, None, None]
    H[:, :, 0] *= alpha[:, None]
    return np.transpose(H, (0, 2, 1))
