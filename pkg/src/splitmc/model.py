"""Composite potentials U(theta) = sum_i U_i(A_i theta) with certified constants.

A model is a list of factors (A_i, U_i). Each factor potential carries its
strong-convexity constant m, gradient-Lipschitz constant M (may be inf) and
value-Lipschitz constant L (may be inf); the constants are user-certified
inputs, validated only by spot finite-difference checks in the test suite.

Models are immutable after construction and safe to share across chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DimensionMismatch,
    NonConvergence,
    NotSmooth,
    NotStronglyConvex,
    SingularGram,
    SingularModel,
)
from .numerics import lambda_extremes


@dataclass(frozen=True)
class Potential:
    """A differentiable convex function on R^dim with certified constants.

    m <= M must hold whenever both are finite; M = inf marks a non-smooth
    potential (usable by the Lipschitz bias bound and the contraction
    constant, but refused by the rejection sampler), L = inf a potential
    whose value is not globally Lipschitz.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    m: float = 0.0
    M: float = math.inf
    L: float = math.inf

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("potential dimension must be >= 1")
        if self.m < 0 or self.L < 0:
            raise ValueError("constants must be nonnegative")
        if math.isfinite(self.M) and self.m > self.M * (1 + 1e-12):
            raise ValueError(f"m={self.m} exceeds M={self.M}")


@dataclass(frozen=True)
class SplitFactor:
    """One coupling block: matrix a of shape (dim_i, d) plus its potential.

    conditional_sampler / conditional_mode, when present, draw from or
    minimize U_i(z) + ||z - a_theta||^2 / (2 rho^2) in closed form; both
    take (a_theta, rho[, rng]). Factors without them go through the
    rejection sampler / warm-start gradient descent.
    """

    a: np.ndarray
    potential: Potential
    conditional_sampler: Optional[Callable] = None
    conditional_mode: Optional[Callable] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if a.shape[0] != self.potential.dim:
            raise DimensionMismatch(
                f"matrix has {a.shape[0]} rows but potential dimension is {self.potential.dim}"
            )
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def dim(self) -> int:
        return self.potential.dim


class SplitModel:
    """Ambient dimension d plus an ordered list of factors.

    The stacked matrix [A_1; ...; A_b] must have rank d, i.e. the Gram
    matrix G = sum_i A_i^T A_i must be positive definite; this is checked
    once at construction and the symmetric factorization of G is cached
    for reuse by every sweep.
    """

    def __init__(self, d: int, factors):
        factors = tuple(factors)
        if not factors:
            raise ValueError("a model needs at least one factor")
        for f in factors:
            if f.a.shape[1] != d:
                raise DimensionMismatch(
                    f"factor matrix has {f.a.shape[1]} columns, model dimension is {d}"
                )
        self.d = int(d)
        self.factors = factors
        gram = np.zeros((d, d))
        for f in factors:
            gram += f.a.T @ f.a
        gram = 0.5 * (gram + gram.T)
        gram.setflags(write=False)
        self.gram = gram
        try:
            self.gram_factor = cho_factor(gram, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
            raise SingularGram("stacked coupling matrix is rank deficient") from exc
        except Exception as exc:
            raise SingularGram("stacked coupling matrix is rank deficient") from exc

    @property
    def b(self) -> int:
        return len(self.factors)

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({self.d},)")
        return theta

    def potential(self, theta: np.ndarray) -> float:
        """U(theta) = sum_i U_i(A_i theta)."""
        theta = self._check_theta(theta)
        return float(sum(f.potential.value(f.a @ theta) for f in self.factors))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        """grad U(theta) = sum_i A_i^T grad U_i(A_i theta)."""
        theta = self._check_theta(theta)
        g = np.zeros(self.d)
        for f in self.factors:
            g += f.a.T @ np.asarray(f.potential.gradient(f.a @ theta), dtype=float)
        return g

    def solve_gram(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.gram_factor, rhs)

    def smooth(self) -> bool:
        return all(math.isfinite(f.potential.M) for f in self.factors)


@dataclass(frozen=True)
class Minimizer:
    theta_star: np.ndarray
    grad_norm: float
    iterations: int


@dataclass(frozen=True)
class ModelConstants:
    """Aggregate constants of a model, consumed by planners and bias bounds."""

    d: int
    b: int
    dims: tuple[int, ...]
    m_list: tuple[float, ...]
    M_list: tuple[float, ...]
    L_list: tuple[float, ...]
    m_U: float                 # lambda_min(sum_i m_i A_i^T A_i)
    sigma2_U: float            # ||A^T A|| (max_i M_i)^2 / m_U
    gram_norm: float           # ||A^T A|| = lambda_max(G)
    lambda_max_M: float        # lambda_max(sum_i M_i A_i^T A_i)
    log_det_ratio: float       # log det(sum M_i A_i^T A_i) - log det(sum m_i A_i^T A_i)
    m_gram: np.ndarray = field(repr=False)
    M_gram: np.ndarray = field(repr=False)

    @property
    def sum_dims(self) -> int:
        return int(sum(self.dims))

    @property
    def sum_dims_M(self) -> float:
        return float(sum(di * Mi for di, Mi in zip(self.dims, self.M_list)))

    @property
    def max_M(self) -> float:
        return max(self.M_list)

    @property
    def strongly_convex(self) -> bool:
        return self.m_U > 0.0


def model_constants(model: SplitModel, require_strongly_convex: bool = False) -> ModelConstants:
    """Spectral aggregates of a model: m_U, sigma^2_U, norms and det ratios."""
    d = model.d
    m_gram = np.zeros((d, d))
    M_gram = np.zeros((d, d))
    smooth = True
    for f in model.factors:
        ata = f.a.T @ f.a
        m_gram += f.potential.m * ata
        if math.isfinite(f.potential.M):
            M_gram += f.potential.M * ata
        else:
            smooth = False
    m_gram = 0.5 * (m_gram + m_gram.T)
    M_gram = 0.5 * (M_gram + M_gram.T)

    m_U = lambda_extremes(m_gram)[0]
    if m_U < 0:
        m_U = 0.0
    gram_norm = lambda_extremes(model.gram)[1]
    max_M = max(f.potential.M for f in model.factors)

    if require_strongly_convex and m_U <= 0.0:
        raise SingularModel("aggregate strong convexity m_U is zero")

    if m_U > 0.0 and math.isfinite(max_M):
        sigma2_U = gram_norm * max_M**2 / m_U
        sign_M, logdet_M = np.linalg.slogdet(M_gram)
        sign_m, logdet_m = np.linalg.slogdet(m_gram)
        log_det_ratio = float(logdet_M - logdet_m) if sign_M > 0 and sign_m > 0 else math.inf
        lambda_max_M = lambda_extremes(M_gram)[1]
    else:
        sigma2_U = math.inf
        log_det_ratio = math.inf
        lambda_max_M = lambda_extremes(M_gram)[1] if smooth else math.inf

    return ModelConstants(
        d=d,
        b=model.b,
        dims=model.block_dims,
        m_list=tuple(f.potential.m for f in model.factors),
        M_list=tuple(f.potential.M for f in model.factors),
        L_list=tuple(f.potential.L for f in model.factors),
        m_U=float(m_U),
        sigma2_U=float(sigma2_U),
        gram_norm=float(gram_norm),
        lambda_max_M=float(lambda_max_M),
        log_det_ratio=log_det_ratio,
        m_gram=m_gram,
        M_gram=M_gram,
    )


def find_minimizer(model: SplitModel, tol: float | None = None,
                   max_iter: int | None = None,
                   theta0: np.ndarray | None = None) -> Minimizer:
    """Gradient descent to the global minimizer of U.

    Step size 1/lambda_max(sum_i M_i A_i^T A_i); stops at ||grad U|| <= tol.
    """
    if not model.smooth():
        raise NotSmooth("minimizer search needs finite smoothness constants; "
                        "supply theta_star directly for non-smooth potentials")
    consts = model_constants(model)
    if consts.m_U <= 0.0:
        raise NotStronglyConvex(
            "aggregate strong convexity is zero; add a quadratic regularizer first"
        )
    theta = np.zeros(model.d) if theta0 is None else np.array(theta0, dtype=float)
    g = model.gradient(theta)
    if tol is None:
        tol = 1e-10 * (1.0 + float(np.linalg.norm(model.gradient(np.zeros(model.d)))))
    if max_iter is None:
        kappa = consts.lambda_max_M / consts.m_U
        max_iter = max(1, int(math.ceil(10.0 * kappa * math.log(1.0 / min(tol, 0.5)))))
    step = 1.0 / consts.lambda_max_M
    it = 0
    gnorm = float(np.linalg.norm(g))
    while gnorm > tol:
        if it >= max_iter:
            raise NonConvergence(f"gradient norm {gnorm} after {it} iterations (tol {tol})")
        theta = theta - step * g
        g = model.gradient(theta)
        gnorm = float(np.linalg.norm(g))
        it += 1
    return Minimizer(theta_star=theta, grad_norm=gnorm, iterations=it)


def center_model(model: SplitModel, theta_star: np.ndarray,
                 tol: float = 1e-12) -> SplitModel:
    """Shift each factor by a linear term so its gradient vanishes at A_i theta_star.

    U_i(z) -> U_i(z) - <z, grad U_i(A_i theta_star)>. The total potential
    changes only by a theta-linear term whose gradient is grad U(theta_star),
    which is ~0 when theta_star is a minimizer; m, M, L are unchanged.
    Factors already centered are returned untouched, which makes the
    operation idempotent.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_star.shape != (model.d,):
        raise DimensionMismatch("theta_star has the wrong length")
    new_factors = []
    for f in model.factors:
        shift = np.asarray(f.potential.gradient(f.a @ theta_star), dtype=float)
        if float(np.linalg.norm(shift)) <= tol:
            new_factors.append(f)
            continue
        pot = f.potential
        new_pot = replace(
            pot,
            value=_shifted_value(pot.value, shift),
            gradient=_shifted_gradient(pot.gradient, shift),
        )
        # The closed-form conditionals assume the original potential.
        new_factors.append(SplitFactor(a=f.a, potential=new_pot))
    return SplitModel(model.d, new_factors)


def _shifted_value(value, shift):
    def shifted(z):
        return value(z) - float(np.dot(np.atleast_1d(z), shift))
    return shifted


def _shifted_gradient(gradient, shift):
    def shifted(z):
        return np.asarray(gradient(z), dtype=float) - shift
    return shifted


def max_factor_gradient_at(model: SplitModel, theta_star: np.ndarray) -> float:
    """max_i ||grad U_i(A_i theta_star)||, the centering residual."""
    theta_star = np.asarray(theta_star, dtype=float)
    return max(
        float(np.linalg.norm(f.potential.gradient(f.a @ theta_star)))
        for f in model.factors
    )


def regularize_model(model: SplitModel, lam: float, theta_star: np.ndarray) -> SplitModel:
    """Append a quadratic factor (lam/2)||theta - theta_star||^2 (identity coupling)."""
    if lam <= 0:
        raise ValueError("regularizer weight must be positive")
    extra = make_quadratic_factor(np.eye(model.d), precision=lam,
                                  center=np.asarray(theta_star, dtype=float))
    return SplitModel(model.d, list(model.factors) + [extra])


# ---------------------------------------------------------------------------
# Quadratic factors with exact Gaussian conditionals


def quadratic_potential(precision, center) -> Potential:
    """U(z) = (1/2) (z - c)^T P (z - c) with P given as scalar, diagonal or full."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = center.shape[0]
    p = np.asarray(precision, dtype=float)
    if p.ndim == 0:
        m = M = float(p)
        value = lambda z: 0.5 * float(p) * float(np.sum((np.atleast_1d(z) - center) ** 2))
        gradient = lambda z: float(p) * (np.atleast_1d(z) - center)
    elif p.ndim == 1:
        m, M = float(p.min()), float(p.max())
        value = lambda z: 0.5 * float(np.sum(p * (np.atleast_1d(z) - center) ** 2))
        gradient = lambda z: p * (np.atleast_1d(z) - center)
    else:
        lo, hi = lambda_extremes(p)
        m, M = float(lo), float(hi)
        value = lambda z: 0.5 * float((np.atleast_1d(z) - center) @ p @ (np.atleast_1d(z) - center))
        gradient = lambda z: p @ (np.atleast_1d(z) - center)
    if m < 0:
        raise ValueError("quadratic precision must be positive semidefinite")
    return Potential(dim=dim, value=value, gradient=gradient, m=m, M=M, L=math.inf)


def make_quadratic_factor(a, precision, center) -> SplitFactor:
    """SplitFactor for a Gaussian potential, with its exact conditional attached.

    The coupled conditional exp(-U(z) - ||z - a_theta||^2/(2 rho^2)) is the
    Gaussian with precision P + I/rho^2 and mean solve(P + I/rho^2, P c + a_theta/rho^2).
    """
    pot = quadratic_potential(precision, center)
    center_vec = np.atleast_1d(np.asarray(center, dtype=float))
    p = np.asarray(precision, dtype=float)

    if p.ndim <= 1:
        def mode(a_theta, rho):
            a_theta = np.atleast_1d(a_theta)
            prec = p + 1.0 / rho**2
            return (p * center_vec + a_theta / rho**2) / prec

        def sampler(a_theta, rho, rng):
            a_theta = np.atleast_1d(a_theta)
            prec = p + 1.0 / rho**2
            mean = (p * center_vec + a_theta / rho**2) / prec
            return mean + rng.standard_normal(mean.shape) / np.sqrt(prec)
    else:
        def mode(a_theta, rho):
            a_theta = np.atleast_1d(a_theta)
            prec = p + np.eye(p.shape[0]) / rho**2
            return np.linalg.solve(prec, p @ center_vec + a_theta / rho**2)

        def sampler(a_theta, rho, rng):
            a_theta = np.atleast_1d(a_theta)
            prec = p + np.eye(p.shape[0]) / rho**2
            chol = np.linalg.cholesky(prec)
            mean = np.linalg.solve(prec, p @ center_vec + a_theta / rho**2)
            noise = np.linalg.solve(chol.T, rng.standard_normal(mean.shape))
            return mean + noise

    return SplitFactor(a=a, potential=pot, conditional_sampler=sampler,
                       conditional_mode=mode)
