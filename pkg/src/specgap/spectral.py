"""Spectral gaps of symmetric generators.

Small state spaces are diagonalized densely (LAPACK ``syevd``).  Larger ones use
Lanczos on ``-Q`` with the constant vector deflated out of the start vector and
every iterate, and full reorthogonalization against the stored basis; the gap
then becomes the smallest eigenvalue of the deflated operator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BudgetExceeded, ConvergenceError, ReducibleChainError
from .operators import Generator

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 2000
DEFAULT_TOL = 1e-9
DEFAULT_SEED = 1
MAX_ITER = 5000
ZERO_TOL = 1e-9


@dataclass
class SpectrumResult:
    gap: float
    eigenvector: np.ndarray
    residual: float
    method: str
    iterations: int = 0
    seed: int | None = None

    def summary(self) -> dict:
        return {
            "gap": self.gap,
            "residual": self.residual,
            "method": self.method,
            "iterations": self.iterations,
            "seed": self.seed,
        }


def check_eigenpair(gen: Generator, f: np.ndarray, lam: float) -> float:
    """``||Qf + lam f|| / ||f||``."""
    f = np.asarray(f, dtype=float)
    norm = np.linalg.norm(f)
    if norm == 0.0:
        raise ValueError("eigenpair check needs a nonzero vector")
    return float(np.linalg.norm(gen.apply(f) + lam * f) / norm)


def dense_eigh(gen: Generator, dense_threshold: int = DENSE_THRESHOLD) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues (ascending) and orthonormal eigenvectors of ``-Q``."""
    if gen.size > dense_threshold:
        raise BudgetExceeded("dense eigensolve", gen.size, dense_threshold, "dense_threshold")
    return np.linalg.eigh(-gen.to_dense())


def full_spectrum(gen: Generator, dense_threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    return dense_eigh(gen, dense_threshold)[0]


def _dense_gap(gen: Generator, dense_threshold: int) -> SpectrumResult:
    w, V = dense_eigh(gen, dense_threshold)
    if len(w) < 2:
        raise ReducibleChainError("a single-state chain has no spectral gap")
    if w[1] <= ZERO_TOL * max(1.0, abs(w[-1])):
        raise ReducibleChainError(f"second zero eigenvalue ({w[1]:.3e}): chain is reducible")
    f = V[:, 1]
    return SpectrumResult(float(w[1]), f, check_eigenpair(gen, f, w[1]), "dense")


class _Basis:
    """Row-stacked orthonormal vectors with amortized growth."""

    def __init__(self, size: int, capacity: int = 64):
        self.data = np.empty((capacity, size))
        self.count = 0

    def append(self, v: np.ndarray) -> None:
        if self.count == len(self.data):
            grown = np.empty((2 * len(self.data), self.data.shape[1]))
            grown[: self.count] = self.data[: self.count]
            self.data = grown
        self.data[self.count] = v
        self.count += 1

    @property
    def rows(self) -> np.ndarray:
        return self.data[: self.count]


def lanczos_smallest(apply, size: int, *, tol: float, seed: int, max_iter: int):
    """Smallest eigenpair of the PSD operator ``apply`` on the complement of constants.

    Returns ``(theta, y, residual, iterations)`` or raises ConvergenceError.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(size)
    v -= v.mean()
    v /= np.linalg.norm(v)
    basis = _Basis(size, min(64, size))
    basis.append(v)
    alphas: list[float] = []
    betas: list[float] = []
    dim = size - 1  # deflated space
    best = None
    for j in range(min(max_iter, dim)):
        w = apply(basis.rows[j])
        w -= w.mean()
        alpha = float(basis.rows[j] @ w)
        alphas.append(alpha)
        for _ in range(2):
            w -= basis.rows.T @ (basis.rows @ w)
        w -= w.mean()
        beta = float(np.linalg.norm(w))
        if len(alphas) == 1:
            theta_all, s_all = np.array(alphas), np.ones((1, 1))
        else:
            theta_all, s_all = eigh_tridiagonal(
                np.array(alphas), np.array(betas), select="i", select_range=(0, 0)
            )
        theta, s = float(theta_all[0]), s_all[:, 0]
        estimate = beta * abs(s[-1])
        exhausted = j + 1 == dim or beta <= 1e-14 * max(1.0, abs(alpha))
        if estimate <= 0.5 * tol or exhausted:
            y = basis.rows.T @ s
            y -= y.mean()
            y /= np.linalg.norm(y)
            residual = float(np.linalg.norm(apply(y) - theta * y))
            best = (theta, y, residual, j + 1)
            if residual <= tol:
                return best
            if exhausted:
                break
        betas.append(beta)
        basis.append(w / beta)
    msg = f"Lanczos did not reach residual {tol:g} within {min(max_iter, dim)} iterations (seed {seed})"
    if best is not None:
        msg += f"; best residual {best[2]:.3e}"
    raise ConvergenceError(msg)


def spectral_gap(
    gen: Generator,
    *,
    method: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = MAX_ITER,
) -> SpectrumResult:
    """Smallest nonzero eigenvalue of ``-Q`` with an eigenvector and residual.

    The chain must be irreducible on its state space.  ``method`` is ``dense``,
    ``lanczos`` or ``auto`` (dense up to ``dense_threshold`` states).
    """
    if method == "auto":
        method = "dense" if gen.size <= dense_threshold else "lanczos"
    if method == "dense":
        # an explicit dense request overrides the threshold
        return _dense_gap(gen, max(dense_threshold, gen.size))
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    if gen.size < 2:
        raise ReducibleChainError("a single-state chain has no spectral gap")

    def apply(x):
        return -gen.apply(x)

    last_error = None
    for attempt_seed in (seed, seed + 1):
        try:
            theta, y, residual, iters = lanczos_smallest(
                apply, gen.size, tol=tol, seed=attempt_seed, max_iter=max_iter
            )
        except ConvergenceError as exc:
            log.warning("%s; restarting", exc)
            last_error = exc
            continue
        if theta <= ZERO_TOL * max(1.0, gen.norm_bound()):
            raise ReducibleChainError(f"zero eigenvalue orthogonal to constants ({theta:.3e}): chain is reducible")
        return SpectrumResult(theta, y, residual, "lanczos", iters, attempt_seed)
    raise last_error
