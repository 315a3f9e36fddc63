"""Zeros of integer-order Bessel functions J_m."""

import numpy as np
from scipy.special import jv


def _jprime(m, x):
    return 0.5 * (jv(m - 1, x) - jv(m + 1, x))


def _refine(m, a, b, rtol):
    # safeguarded Newton inside a sign-change bracket
    fa = jv(m, a)
    x = 0.5 * (a + b)
    for _ in range(200):
        fx = jv(m, x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b = x
        d = _jprime(m, x)
        xn = x - fx / d if d != 0.0 else 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= rtol * abs(xn) or (b - a) <= rtol * abs(x):
            return xn
        x = xn
    raise RuntimeError(f"Bessel zero refinement did not converge (m={m})")


def bessel_zeros(m: int, count: int, rtol: float = 1e-14) -> np.ndarray:
    """First ``count`` positive zeros of J_m.

    Brackets come from a sign scan with step 0.25 (zeros of J_m are
    separated by more than pi and the first one exceeds m); each bracket is
    refined by Newton steps that fall back to bisection.
    """
    if m < 0 or count < 1:
        raise ValueError("need m >= 0 and count >= 1")
    step = 0.25
    x0 = max(float(m), step)
    upper = (count + 0.5 * m + 1.0) * np.pi + m + 1.0
    zeros = []
    while len(zeros) < count:
        xs = np.arange(x0, upper + step, step)
        fs = jv(m, xs)
        idx = np.nonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0)[0]
        for i in idx:
            zeros.append(_refine(m, xs[i], xs[i + 1], rtol))
            if len(zeros) == count:
                break
        x0 = xs[-1]
        upper = x0 + count * np.pi
    return np.asarray(zeros)
