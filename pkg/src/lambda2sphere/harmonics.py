"""Real orthonormal spherical harmonics on S^m for any m >= 1.

Harmonics are built recursively over the last coordinate.  With
y = (y', y_m) and y' in R^m, every degree-n harmonic on S^m is a product

    P(y') * C_{n-l}^{(l + (m-1)/2)}(y_m),

where P is a homogeneous harmonic polynomial of degree l on R^m (a
harmonic on S^{m-1} extended by |y'|^l) and C is a Gegenbauer polynomial.
The base case S^1 uses Re/Im (y_0 + i y_1)^k.  Everything is evaluated as
polynomials, so the poles need no special handling.

Labels are tuples (n, l_{m-1}, ..., l_1, sign) describing the degree chain
n >= l_{m-1} >= ... >= l_1 >= 0 and the S^1 branch (+1 cos, -1 sin, 0 for
l_1 = 0).  For m = 2 the label (l, k, sign) corresponds to the usual
Y_{l, +-k}; `label_m2` converts.
"""

from functools import lru_cache
from math import gamma, lgamma, pi, exp

import numpy as np
from scipy.special import gegenbauer


def dim_harmonics(m, n):
    """Dimension of the degree-n harmonics on S^m."""
    if n == 0:
        return 1
    if m == 1:
        return 2
    return sum(dim_harmonics(m - 1, l) for l in range(n + 1))


@lru_cache(maxsize=None)
def labels(m, n):
    """Labels of the degree-n basis functions on S^m, in basis order."""
    if m == 1:
        return ((0, 0),) if n == 0 else ((n, 1), (n, -1))
    out = []
    for l in range(n + 1):
        for sub in labels(m - 1, l):
            out.append((n,) + sub)
    return tuple(out)


def all_labels(m, L):
    """Labels of every basis function of degree <= L, ordered by degree."""
    return [lab for n in range(L + 1) for lab in labels(m, n)]


def label_m2(l, k):
    """Label on S^2 for the real harmonic Y_{l,k}, -l <= k <= l."""
    if abs(k) > l:
        raise ValueError(f"|k| = {abs(k)} exceeds degree {l}")
    if k == 0:
        return (l, 0, 0)
    return (l, abs(k), 1 if k > 0 else -1)


def _gegenbauer_norm_sq(k, alpha):
    # int_{-1}^{1} (1 - x^2)^(alpha - 1/2) C_k^alpha(x)^2 dx
    if alpha == 0:
        return pi if k else 2 * pi  # Chebyshev limit, unused for m >= 2
    logv = (lgamma(k + 2 * alpha) - lgamma(k + 1) - 2 * lgamma(alpha)
            + (1 - 2 * alpha) * np.log(2.0))
    return pi * exp(logv) / (k + alpha)


@lru_cache(maxsize=None)
def _gegenbauer_coeffs(k, alpha):
    # ascending power coefficients of C_k^alpha
    return tuple(np.asarray(gegenbauer(k, alpha).coeffs[::-1], dtype=float))


def _homog_gegenbauer(k, alpha, x, r2):
    """r^k C_k^alpha(x / r), a polynomial in x and r^2 since C_k has parity k."""
    c = _gegenbauer_coeffs(k, alpha)
    out = np.zeros_like(x)
    for j in range(k % 2, k + 1, 2):
        out = out + c[j] * x ** j * r2 ** ((k - j) // 2)
    return out


def _norm_sq(label, m):
    """Squared L^2(S^m) norm of the unnormalized basis function `label`."""
    if m == 1:
        n, s = label
        return 2 * pi if n == 0 else pi
    n = label[0]
    l = label[1]
    alpha = l + (m - 1) / 2
    return _gegenbauer_norm_sq(n - l, alpha) * _norm_sq(label[1:], m - 1)


def _eval_poly(label, y):
    """Unnormalized homogeneous harmonic polynomial for `label` at points y."""
    m = y.shape[-1] - 1
    if m == 1:
        n, s = label
        z = (y[..., 0] + 1j * y[..., 1]) ** n
        return z.real if s >= 0 else z.imag
    n, l = label[0], label[1]
    head = y[..., :-1]
    x = y[..., -1]
    r2 = np.einsum("...i,...i->...", y, y)
    alpha = l + (m - 1) / 2
    return _eval_poly(label[1:], head) * _homog_gegenbauer(n - l, alpha, x, r2)


def harmonic(label, y):
    """Evaluate the orthonormal real harmonic `label` at unit vectors y."""
    y = np.asarray(y, dtype=float)
    m = y.shape[-1] - 1
    if len(label) != m + 1:
        raise ValueError(f"label {label} does not belong to S^{m}")
    return _eval_poly(label, y) / np.sqrt(_norm_sq(label, m))


def basis_matrix(y, L):
    """Matrix B with B[i, j] = j-th basis function (degree <= L) at y[i]."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    m = y.shape[-1] - 1
    return np.stack([harmonic(lab, y) for lab in all_labels(m, L)], axis=-1)


def laplace_eigenvalue(m, n):
    """-Delta Y = n (n + m - 1) Y on the round S^m."""
    return n * (n + m - 1)


def sphere_volume(m):
    """Volume sigma_m = 2 pi^{(m+1)/2} / Gamma((m+1)/2) of the unit S^m."""
    return 2.0 * pi ** ((m + 1) / 2) / gamma((m + 1) / 2)
