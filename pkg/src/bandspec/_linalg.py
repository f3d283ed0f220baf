"""Compiled dense eigenvalue / singular value kernels.

Two independent routes to the same spectrum:

* ``tridiagonalize`` + ``tridiagonal_ql``: Householder reduction of a symmetric
  matrix followed by implicit-shift QL, eigenvalues only.
* ``bidiagonalize`` + ``bidiagonal_qr``: Golub-Kahan reduction of a general
  square matrix followed by implicit-shift bidiagonal QR, singular values only.

The kernels work in place on float64 arrays and report failure through an
integer status so that the Python wrappers can raise.
"""

import math

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps


@njit(cache=True)
def tridiagonalize(a):
    """Reduce symmetric ``a`` (lower triangle used, destroyed) to tridiagonal form.

    Returns ``(d, e)`` with ``e[k]`` coupling ``d[k]`` and ``d[k+1]``.
    """
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(max(n - 1, 0))
    v = np.zeros(n)
    p = np.zeros(n)
    for k in range(n - 2):
        m = n - k - 1
        scale = 0.0
        for i in range(k + 1, n):
            scale += abs(a[i, k])
        if scale == 0.0:
            d[k] = a[k, k]
            e[k] = 0.0
            continue
        norm2 = 0.0
        for i in range(k + 1, n):
            v[i - k - 1] = a[i, k] / scale
            norm2 += v[i - k - 1] * v[i - k - 1]
        alpha = math.sqrt(norm2)
        if v[0] > 0.0:
            alpha = -alpha
        v[0] -= alpha
        vv = norm2 - 2.0 * alpha * (v[0] + alpha) + alpha * alpha
        d[k] = a[k, k]
        e[k] = alpha * scale
        if vv == 0.0:
            continue
        tau = 2.0 / vv
        # p = tau * A22 v using the lower triangle only
        for i in range(m):
            p[i] = 0.0
        for i in range(m):
            row = k + 1 + i
            vi = v[i]
            acc = 0.0
            for j in range(i):
                aij = a[row, k + 1 + j]
                acc += aij * v[j]
                p[j] += aij * vi
            p[i] += acc + a[row, row] * vi
        kk = 0.0
        for i in range(m):
            p[i] *= tau
            kk += v[i] * p[i]
        kk *= 0.5 * tau
        for i in range(m):
            p[i] -= kk * v[i]
        for i in range(m):
            row = k + 1 + i
            vi = v[i]
            wi = p[i]
            for j in range(i + 1):
                a[row, k + 1 + j] -= vi * p[j] + wi * v[j]
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        e[n - 2] = a[n - 1, n - 2]
    if n >= 1:
        d[n - 1] = a[n - 1, n - 1]
    return d, e


@njit(cache=True)
def tridiagonal_ql(d, e, max_sweeps):
    """Implicit QL with a Wilkinson-type shift on the tridiagonal ``(d, e)``.

    ``d`` is overwritten with the (unsorted) eigenvalues. At most
    ``max_sweeps * n`` sweeps in total. Returns 0 on success,
    or ``l + 1`` for the first eigenvalue index that failed to converge.
    """
    n = d.shape[0]
    if n <= 1:
        return 0
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    # one budget shared by all eigenvalues: clusters at roundoff level can
    # take many sweeps for the first member and almost none for the rest
    budget = max_sweeps * n
    it = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it >= budget:
                return l + 1
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return 0


@njit(cache=True)
def bidiagonalize(a):
    """Golub-Kahan reduction of square ``a`` (destroyed) to upper bidiagonal form."""
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(max(n - 1, 0))
    v = np.zeros(n)
    w = np.zeros(n)
    for k in range(n):
        # left reflector on column k, rows k..n-1
        norm2 = 0.0
        for i in range(k, n):
            norm2 += a[i, k] * a[i, k]
        alpha = math.sqrt(norm2)
        if alpha > 0.0:
            if a[k, k] > 0.0:
                alpha = -alpha
            for i in range(k, n):
                v[i] = a[i, k]
            v[k] -= alpha
            vv = 0.0
            for i in range(k, n):
                vv += v[i] * v[i]
            if vv > 0.0:
                tau = 2.0 / vv
                for j in range(k + 1, n):
                    w[j] = 0.0
                for i in range(k, n):
                    vi = v[i]
                    for j in range(k + 1, n):
                        w[j] += vi * a[i, j]
                for i in range(k, n):
                    tvi = tau * v[i]
                    for j in range(k + 1, n):
                        a[i, j] -= tvi * w[j]
        d[k] = alpha
        if k >= n - 1:
            break
        # right reflector on row k, columns k+1..n-1
        norm2 = 0.0
        for j in range(k + 1, n):
            norm2 += a[k, j] * a[k, j]
        alpha = math.sqrt(norm2)
        if alpha > 0.0:
            if a[k, k + 1] > 0.0:
                alpha = -alpha
            for j in range(k + 1, n):
                v[j] = a[k, j]
            v[k + 1] -= alpha
            vv = 0.0
            for j in range(k + 1, n):
                vv += v[j] * v[j]
            if vv > 0.0:
                tau = 2.0 / vv
                for i in range(k + 1, n):
                    acc = 0.0
                    for j in range(k + 1, n):
                        acc += a[i, j] * v[j]
                    acc *= tau
                    for j in range(k + 1, n):
                        a[i, j] -= acc * v[j]
        e[k] = alpha
    return d, e


@njit(cache=True)
def _givens(f, g):
    if g == 0.0:
        return 1.0, 0.0, f
    r = math.hypot(f, g)
    return f / r, g / r, r


@njit(cache=True)
def _gk_step(d, e, p, q):
    """One implicit-shift Golub-Kahan sweep on the unreduced block ``p..q``."""
    t11 = d[q - 1] * d[q - 1]
    if q - 1 > p:
        t11 += e[q - 2] * e[q - 2]
    t12 = d[q - 1] * e[q - 1]
    t22 = d[q] * d[q] + e[q - 1] * e[q - 1]
    half = 0.5 * (t11 - t22)
    rad = math.hypot(half, t12)
    if half >= 0.0:
        mu = t22 - t12 * t12 / (half + rad) if half + rad != 0.0 else t22
    else:
        mu = t22 + t12 * t12 / (rad - half)
    y = d[p] * d[p] - mu
    z = d[p] * e[p]
    for k in range(p, q):
        c, s, r = _givens(y, z)
        if k > p:
            e[k - 1] = r
        dk = d[k]
        ek = e[k]
        y = c * dk + s * ek
        ek = -s * dk + c * ek
        z = s * d[k + 1]
        dk1 = c * d[k + 1]
        c, s, r = _givens(y, z)
        d[k] = r
        y = c * ek + s * dk1
        d[k + 1] = -s * ek + c * dk1
        e[k] = y
        if k < q - 1:
            z = s * e[k + 1]
            e[k + 1] = c * e[k + 1]
    e[q - 1] = y


@njit(cache=True)
def bidiagonal_qr(d, e, max_sweeps):
    """Singular values of the upper bidiagonal ``(d, e)``; ``d`` holds the result.

    Returns 0 on success, 1 if the total sweep budget ``max_sweeps * n`` ran out.
    """
    n = d.shape[0]
    if n <= 1:
        if n == 1:
            d[0] = abs(d[0])
        return 0
    bnorm = 0.0
    for i in range(n):
        bnorm = max(bnorm, abs(d[i]))
    for i in range(n - 1):
        bnorm = max(bnorm, abs(e[i]))
    tiny = EPS * bnorm
    budget = max_sweeps * n
    sweeps = 0
    q = n - 1
    while q > 0:
        for i in range(q):
            if abs(e[i]) <= EPS * (abs(d[i]) + abs(d[i + 1])) or abs(e[i]) <= tiny * EPS:
                e[i] = 0.0
        while q > 0 and e[q - 1] == 0.0:
            q -= 1
        if q == 0:
            break
        p = q - 1
        while p > 0 and e[p - 1] != 0.0:
            p -= 1
        if sweeps >= budget:
            return 1
        sweeps += 1
        zero_at = -1
        for k in range(p, q + 1):
            if abs(d[k]) <= tiny:
                zero_at = k
                break
        if zero_at < 0:
            _gk_step(d, e, p, q)
        elif zero_at < q:
            k = zero_at
            d[k] = 0.0
            f = e[k]
            e[k] = 0.0
            for j in range(k + 1, q + 1):
                c, s, r = _givens(d[j], f)
                d[j] = r
                if j < q:
                    f = -s * e[j]
                    e[j] = c * e[j]
        else:
            d[q] = 0.0
            f = e[q - 1]
            e[q - 1] = 0.0
            for j in range(q - 1, p - 1, -1):
                c, s, r = _givens(d[j], f)
                d[j] = r
                if j > p:
                    f = -s * e[j - 1]
                    e[j - 1] = c * e[j - 1]
    for i in range(n):
        d[i] = abs(d[i])
    return 0
