"""Special functions backing the closed-form potential layer.

The three classical functions (log-gamma, digamma, regularized incomplete
beta) are range-checked wrappers around scipy.special; the regularized Gauss
hypergeometric function 2F1(a,b;c;z)/Gamma(c) is evaluated by a direct power
series because scipy only ships the unregularized function, which is useless
near the poles of Gamma(c).
"""

from __future__ import annotations

import numpy as np
import scipy.special as sc

__all__ = ["ln_gamma", "digamma", "reg_inc_beta", "reg_hyp2f1"]


def ln_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not x > 0.0:
        raise ValueError(f"ln_gamma requires x > 0, got {x!r}")
    return float(sc.gammaln(x))


def digamma(x: float) -> float:
    """Gamma'(x)/Gamma(x) for x > 0."""
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    return float(sc.psi(x))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b), x in [0, 1], a, b > 0."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    return float(sc.betainc(a, b, x))


def reg_hyp2f1(a: float, b: float, c: float, z: float,
               rtol: float = 1e-14, max_terms: int = 20000) -> float:
    """Regularized Gauss hypergeometric function 2F1(a,b;c;z) / Gamma(c).

    Power series sum_k (a)_k (b)_k z^k / (Gamma(c+k) k!), valid for
    0 <= z < 1.  Terms with c+k at a pole of Gamma vanish (1/Gamma = 0),
    so nonpositive c is handled without special casing: leading terms are
    accumulated with explicit reciprocal gammas until c+k is safely
    positive, after which the usual term ratio recursion takes over.
    """
    if not 0.0 <= z < 1.0:
        raise ValueError(f"reg_hyp2f1 requires 0 <= z < 1, got {z!r}")

    # index from which c+k >= 1 (so the ratio recursion never divides by ~0)
    k_switch = max(0, int(np.floor(1.0 - c)) + 1)

    total = 0.0
    poch = 1.0  # (a)_k (b)_k z^k / k!
    k = 0
    while k <= k_switch:
        total += poch * sc.rgamma(c + k)
        poch *= (a + k) * (b + k) / (k + 1.0) * z
        k += 1

    term = poch * sc.rgamma(c + k)
    while k < max_terms:
        total += term
        # geometric tail bound: remaining terms shrink at least like z once
        # the parameter ratios settle, so term*(z/(1-z)) bounds the tail
        if abs(term) <= rtol * (abs(total) + 1e-300) * (1.0 - z):
            return total
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        k += 1
    raise ArithmeticError(
        f"reg_hyp2f1 series did not converge (a={a}, b={b}, c={c}, z={z})")
