"""Gaussian-kernel interpolation of sparse gradients into smooth vector fields.

The field v(x) = sum_i rho_sigma(|x - x_i|) alpha_i interpolates the
constraint vectors a_i at the centers, with alpha = K^-1 a for the Gram
matrix K_ij = rho_sigma(|x_i - x_j|). The scalar kernel acts diagonally on
R^d, so one symmetric factorization serves all d right-hand sides.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh, LinAlgError

from .gradient import SparseGradient
from .rips import as_point_cloud

JITTER_START = 1e-12
JITTER_MAX = 1e-6


class SingularKernelError(RuntimeError):
    """Gram matrix stayed non-factorizable through jitter escalation."""


@dataclass(frozen=True)
class Interpolant:
    """A fitted Gaussian-kernel vector field."""

    centers: np.ndarray     # (m, d)
    coeffs: np.ndarray      # (m, d) alpha
    sigma: float
    jitter: float           # ridge actually added to the Gram matrix
    kappa: float            # condition number of the factorized matrix

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return evaluate(self, points)


def _gram(centers: np.ndarray, sigma: float) -> np.ndarray:
    sq = np.sum((centers[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return np.exp(-sq / (2.0 * sigma ** 2))


def fit(centers, vectors, sigma: float,
        jitter_start: float = JITTER_START,
        jitter_max: float = JITTER_MAX) -> Interpolant:
    """Solve K alpha = a for the minimal-norm interpolating field.

    On factorization failure a ridge eps*I is added, escalating tenfold from
    jitter_start; past jitter_max the fit fails loudly rather than silently
    degrading the interpolation property.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if centers.shape != vectors.shape:
        raise ValueError(f"centers {centers.shape} and vectors {vectors.shape} differ")
    if centers.shape[0] < 1:
        raise ValueError("need at least one constraint")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    base = _gram(centers, sigma)
    eps = 0.0
    gram = base
    while True:
        try:
            factor = cho_factor(gram, lower=True)
            break
        except LinAlgError:
            eps = jitter_start if eps == 0.0 else eps * 10.0
            if eps > jitter_max:
                raise SingularKernelError(
                    f"Gram matrix not factorizable up to jitter {jitter_max:g}; "
                    "centers may coincide (consolidate first)") from None
            gram = base + eps * np.eye(len(base))
    coeffs = cho_solve(factor, vectors)
    eig = eigvalsh(gram)
    kappa = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    return Interpolant(centers, coeffs, float(sigma), eps, kappa)


def evaluate(v: Interpolant, points) -> np.ndarray:
    """Field values at points: rho_sigma cross-kernel times the coefficients."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != v.d:
        raise ValueError(f"points have dimension {pts.shape[1]}, field has {v.d}")
    sq = np.sum((pts[:, None, :] - v.centers[None, :, :]) ** 2, axis=-1)
    return np.exp(-sq / (2.0 * v.sigma ** 2)) @ v.coeffs


def lipschitz_constant_prefactor(d: int) -> float:
    """C_d = sqrt(d) * 2^(3 + (d+1)/2) * pi^((d-1)/2)."""
    return math.sqrt(d) * 2.0 ** (3 + (d + 1) / 2) * math.pi ** ((d - 1) / 2)


def lipschitz_bound(kappa: float, sigma: float, d: int, pers: float) -> float:
    """Upper bound C_d * sigma^(d-1) * kappa * Pers_k on the field's Lipschitz
    constant (1-norm increments against 2-norm input distance)."""
    if kappa <= 0 or sigma <= 0 or d < 1 or pers < 0:
        raise ValueError("kappa, sigma, d must be positive and pers non-negative")
    return lipschitz_constant_prefactor(d) * sigma ** (d - 1) * kappa * pers


def descent_check(g: SparseGradient, v: Interpolant, X) -> tuple[float, float]:
    """(<grad, field at all points>, |grad|^2); equal when interpolation is exact.

    The inner product only sees the support (the gradient is zero elsewhere),
    so exact interpolation makes the field a true descent direction with the
    same instantaneous decrease as the vanilla gradient.
    """
    X = as_point_cloud(X)
    if len(g) == 0:
        return 0.0, 0.0
    field = evaluate(v, X.coords)
    dense = g.densify()
    return float(np.sum(dense * field)), g.norm_squared()
