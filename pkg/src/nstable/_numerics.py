"""Small scalar solvers shared across modules.

Both routines are deliberately simple: the functions they are applied to are
monotone (bisection) or unimodal in practice (golden section), and the checks
built on top need predictable, derivative-free behaviour.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ConvergenceError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect_increasing(func: Callable[[np.ndarray], np.ndarray], target, lo, hi,
                      tol: float = 1e-12, ftol: float | None = None,
                      max_iter: int = 200) -> np.ndarray:
    """Vectorised bisection for ``func(x) = target`` with ``func`` increasing.

    The bracket ``[lo, hi]`` must already contain the solution for every
    entry of ``target``. Iteration stops once every bracket is narrower than
    ``tol`` and, when ``ftol`` is given, every midpoint satisfies
    ``|func(x) - target| <= ftol`` (or the bracket has collapsed to adjacent
    floats).

    Raises
    ------
    ConvergenceError
        If the iteration budget runs out, or the final ``ftol`` test fails,
        which indicates a non-monotone function or a target outside the
        function's range on the bracket.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        width = hi - lo
        collapsed = (mid <= lo) | (mid >= hi)
        done = (width <= tol) | collapsed
        if ftol is not None:
            done &= (np.abs(fmid - target) <= ftol) | collapsed
        if np.all(done):
            break
        below = fmid < target
        lo = np.where(below & ~done, mid, lo)
        hi = np.where(~below & ~done, mid, hi)
    else:
        raise ConvergenceError(f"bisection did not converge in {max_iter} iterations")
    if ftol is not None:
        err = np.abs(fmid - target)
        if np.any(err > ftol):
            raise ConvergenceError(
                f"bisection residual {float(np.max(err)):.3e} exceeds {ftol:.1e}; "
                "function is not monotone on the bracket or target is out of range")
    return mid


def golden_section(func: Callable[[float], float], lo: float, hi: float,
                   xtol: float = 1e-12, max_iter: int = 500):
    """Minimise a scalar function on ``[lo, hi]`` by golden-section search.

    Returns ``(x_best, f_best, converged)``. ``converged`` is False when the
    bracket is still wider than ``xtol`` after ``max_iter`` steps.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = func(c), func(d)
    converged = False
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            converged = True
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = func(d)
    # the endpoints are candidates too: boundary minima are common here
    candidates = [(fc, c), (fd, d), (func(lo), float(lo)), (func(hi), float(hi))]
    f_best, x_best = min(candidates)
    return x_best, f_best, converged
