"""Named test-model constructors addressable from the CLI.

Each constructor returns a ready SplitModel; where the coupled conditional
has a closed form the factors carry exact samplers, otherwise sweeps fall
back to rejection sampling.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from .conditionals import sample_z_closed_form
from .errors import UnsupportedModel
from .model import Potential, SplitFactor, SplitModel, make_quadratic_factor


def toy_gaussian_1(sigma: float = 3.0, b: int = 10, mu: float = 0.0) -> SplitModel:
    """Scalar target N(mu, sigma^2/b) split into b identical quadratic factors."""
    factors = [
        make_quadratic_factor(np.ones((1, 1)), precision=1.0 / sigma**2, center=mu)
        for _ in range(b)
    ]
    return SplitModel(1, factors)


def toy_gaussian_2(sigma: float = 3.0, b: int = 10, mu: float = 0.0) -> SplitModel:
    """Same scalar target N(mu, sigma^2/b), kept as a single factor."""
    factor = make_quadratic_factor(np.ones((1, 1)), precision=b / sigma**2, center=mu)
    return SplitModel(1, [factor])


def aniso_gaussian(d: int = 10, m: float = 0.25, M: float = 1.0) -> SplitModel:
    """Zero-mean Gaussian with diagonal anisotropic precision, single identity split.

    The precisions are spread linearly over [m, M], so the least favorable
    direction is the first coordinate axis.
    """
    if not 0 < m <= M:
        raise ValueError("need 0 < m <= M")
    q = np.linspace(m, M, d) if d > 1 else np.array([m])
    factor = make_quadratic_factor(np.eye(d), precision=q, center=np.zeros(d))
    return SplitModel(d, [factor])


def gaussian_mixture(d: int = 60, a_norm: float = 1.0 / math.sqrt(2.0)) -> SplitModel:
    """Symmetric two-component unit-covariance mixture with modes +-a, ||a|| < 1.

    Strongly convex with m = 1 - ||a||^2 and M = 1; the global minimizer is
    the origin. Single identity split; the coupled conditional is an exact
    two-component mixture.
    """
    if not 0 < a_norm < 1:
        raise ValueError("mixture needs 0 < ||a|| < 1 for strong convexity")
    a = np.full(d, a_norm / math.sqrt(d))

    def value(theta):
        theta = np.atleast_1d(theta)
        s = float(theta @ a)
        return 0.5 * float(np.sum((theta - a) ** 2)) - float(np.logaddexp(0.0, -2.0 * s))

    def gradient(theta):
        theta = np.atleast_1d(theta)
        s = float(theta @ a)
        return theta - a + 2.0 * a * expit(-2.0 * s)

    pot = Potential(dim=d, value=value, gradient=gradient,
                    m=1.0 - a_norm**2, M=1.0, L=math.inf)

    def sampler(a_theta, rho, rng):
        return sample_z_closed_form("mixture", a_theta, rho, rng, direction=a)

    factor = SplitFactor(a=np.eye(d), potential=pot, conditional_sampler=sampler)
    model = SplitModel(d, [factor])
    model.mixture_direction = a
    return model


def _rademacher_data(d: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(n, d)) / math.sqrt(d)
    theta_true = np.ones(d)
    y = (rng.uniform(size=n) < expit(x @ theta_true)).astype(float)
    return x, y


def _logit_loss_potential(x_rows: np.ndarray, y: np.ndarray, alpha: float) -> Potential:
    """Group potential sum_j [softplus(x_j.z) - y_j x_j.z + (alpha/2)(x_j.z)^2] on R^d."""
    d = x_rows.shape[1]
    gram = x_rows.T @ x_rows
    eigs = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    m = alpha * max(float(eigs[0]), 0.0)
    M = (alpha + 0.25) * float(eigs[-1])

    def value(z):
        u = x_rows @ np.atleast_1d(z)
        return float(np.sum(np.logaddexp(0.0, u) - y * u + 0.5 * alpha * u**2))

    def gradient(z):
        u = x_rows @ np.atleast_1d(z)
        return x_rows.T @ (expit(u) - y + alpha * u)

    return Potential(dim=d, value=value, gradient=gradient, m=m, M=M, L=math.inf)


def _scalar_logit_potential(y_i: float, alpha: float) -> Potential:
    """Per-observation potential softplus(z) - y z + (alpha/2) z^2 on R."""

    def value(z):
        u = float(np.atleast_1d(z)[0])
        return float(np.logaddexp(0.0, u) - y_i * u + 0.5 * alpha * u**2)

    def gradient(z):
        u = float(np.atleast_1d(z)[0])
        return np.array([float(expit(u)) - y_i + alpha * u])

    return Potential(dim=1, value=value, gradient=gradient,
                     m=alpha, M=alpha + 0.25, L=math.inf)


def logistic_split1(d: int = 10, n: int = 200, seed: int = 0) -> SplitModel:
    """Per-observation split of the logistic posterior with a Zellner-style prior.

    Covariates are normalized Rademacher rows, labels Bernoulli under the
    all-ones regressor. The prior precision alpha sum_i x_i x_i^T is folded
    into the factors as (alpha/2) z^2 each, so every factor is strongly
    convex with m = alpha, M = alpha + 1/4. One row factor A_i = x_i^T per
    observation; the conditionals are univariate.
    """
    x, y = _rademacher_data(d, n, seed)
    alpha = 3.0 * d / (math.pi**2 * n)
    factors = [
        SplitFactor(a=x[i:i + 1, :], potential=_scalar_logit_potential(float(y[i]), alpha))
        for i in range(n)
    ]
    model = SplitModel(d, factors)
    model.data = (x, y)
    model.prior_alpha = alpha
    return model


def logistic_split2(d: int = 10, n: int = 200, b: int = 5, seed: int = 0) -> SplitModel:
    """Data-shard split of the same posterior: b identity-coupled group factors.

    The observations are divided into b equal contiguous groups; factor i
    carries the loss of group i on the full parameter. Group strong
    convexity is alpha lambda_min of the group design Gram, which is zero
    when the group has fewer rows than d.
    """
    if n % b != 0:
        raise ValueError("group splitting expects b to divide n")
    x, y = _rademacher_data(d, n, seed)
    alpha = 3.0 * d / (math.pi**2 * n)
    size = n // b
    factors = []
    for i in range(b):
        rows = slice(i * size, (i + 1) * size)
        factors.append(SplitFactor(a=np.eye(d),
                                   potential=_logit_loss_potential(x[rows], y[rows], alpha)))
    model = SplitModel(d, factors)
    model.data = (x, y)
    model.prior_alpha = alpha
    return model


_BUILDERS = {
    "toy-gaussian-1": toy_gaussian_1,
    "toy-gaussian-2": toy_gaussian_2,
    "aniso-gaussian": aniso_gaussian,
    "gaussian-mixture": gaussian_mixture,
    "logistic-split1": logistic_split1,
    "logistic-split2": logistic_split2,
}


def model_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILDERS))


def build_model(name: str, **params) -> SplitModel:
    """Construct a zoo model by CLI name; unknown keyword params are rejected."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnsupportedModel(
            f"unknown model {name!r}; available: {', '.join(model_names())}"
        ) from None
    return builder(**params)
