"""
Convergence theory for RFFKLMS on data from a Gaussian kernel expansion.

Inputs are assumed i.i.d. ``N(0, sigma_x**2 I)``. Under that model the
feature correlation matrix ``R = E[z(x) z(x)^T]`` has the closed form::

    R_ij = (1/D) * ( exp(-||w_i - w_j||^2 sigma_x^2 / 2) cos(b_i - b_j)
                   + exp(-||w_i + w_j||^2 sigma_x^2 / 2) cos(b_i + b_j) )

and the weight-error covariance ``A_n = E[(theta_n - theta_opt)(...)^T]``
follows, to first order in the step size::

    A_{n+1} = A_n - mu (R A_n + A_n R) + mu^2 sigma_eta^2 R

The kernel-approximation residual is neglected throughout, which makes the
optimal MSE equal to the noise variance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rng as _rng
from .exceptions import BoundViolationError, ConvergenceError, DimensionError
from .kernelcore import RandomFeatureMap

# start vector of the power iteration; any fixed value works
_POWER_SEED = 0x9E3779B97F4A7C15
# rows per block when evaluating D x D closed-form iterates
_ROW_BLOCK = 256


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Feature correlation matrix ``R`` for inputs ``N(0, sigma_x^2 I)``."""

    r_matrix: NDArray[np.float64]
    sigma_x: float
    fmap: RandomFeatureMap

    def __post_init__(self):
        R = np.array(self.r_matrix, dtype=np.float64, copy=True)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise DimensionError(f"r_matrix must be square, got shape {R.shape}")
        R.flags.writeable = False
        object.__setattr__(self, "r_matrix", R)

    @property
    def feature_dim(self) -> int:
        return self.r_matrix.shape[0]

    @classmethod
    def from_matrix(cls, R: ArrayLike, sigma_x: float = 1.0, fmap: RandomFeatureMap | None = None):
        """Wrap an arbitrary symmetric matrix, e.g. for testing the solvers."""
        return cls(np.asarray(R, dtype=np.float64), sigma_x, fmap)


@dataclass(frozen=True)
class ConvergencePrediction:
    mu_max: float
    mu_max_variance: float
    lambda_max: float
    j_opt: float
    steady_state_mse: float
    excess_mse: float
    theta_opt: NDArray[np.float64]


def _check_sigma_x(sigma_x: float):
    if not (np.isfinite(sigma_x) and sigma_x > 0):
        raise ValueError(f"sigma_x must be positive and finite, got {sigma_x}")


def rzz_closed_form(fmap: RandomFeatureMap, sigma_x: float) -> CorrelationModel:
    """Exact ``E[z(x) z(x)^T]`` for ``x ~ N(0, sigma_x^2 I)``."""
    _check_sigma_x(sigma_x)
    W, b = fmap.omegas, fmap.phases
    sq = np.einsum("ij,ij->i", W, W)
    cross = W @ W.T
    # ||w_i -/+ w_j||^2, clipped against cancellation
    minus = np.maximum(sq[:, None] + sq[None, :] - 2.0 * cross, 0.0)
    plus = np.maximum(sq[:, None] + sq[None, :] + 2.0 * cross, 0.0)
    np.fill_diagonal(minus, 0.0)
    s2 = sigma_x**2 / 2.0
    R = np.exp(-s2 * minus) * np.cos(b[:, None] - b[None, :])
    R += np.exp(-s2 * plus) * np.cos(b[:, None] + b[None, :])
    R *= 1.0 / fmap.feature_dim
    # exact symmetry (the two cos terms are symmetric but the exp arguments may not be bitwise)
    R = np.triu(R) + np.triu(R, 1).T
    return CorrelationModel(R, float(sigma_x), fmap)


def rzz_monte_carlo(fmap: RandomFeatureMap, sigma_x: float, n_samples: int, seed: int) -> CorrelationModel:
    """Sample average of ``z(x) z(x)^T`` over ``n_samples`` Gaussian inputs."""
    _check_sigma_x(sigma_x)
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {n_samples}")
    gen = _rng.make_rng(seed, _rng.INPUTS)
    D, d = fmap.feature_dim, fmap.input_dim
    acc = np.zeros((D, D))
    block = max(1, min(int(n_samples), 2**22 // max(D, d)))
    done = 0
    while done < n_samples:
        m = min(block, int(n_samples) - done)
        Z = fmap.transform_batch(sigma_x * gen.standard_normal((m, d)))
        acc += Z.T @ Z
        done += m
    acc /= n_samples
    acc = np.triu(acc) + np.triu(acc, 1).T
    return CorrelationModel(acc, float(sigma_x), fmap)


def max_eigenvalue(model: CorrelationModel, tol: float = 1e-12, max_iters: int = 100_000) -> float:
    """
    Largest eigenvalue of a symmetric positive semidefinite matrix by power
    iteration.

    Stops when successive Rayleigh quotients differ by less than
    ``tol * |lambda|``.

    Raises
    ------
    ConvergenceError
        If the test is not met within ``max_iters`` iterations.
    """
    R = model.r_matrix
    v = _rng.make_rng(_POWER_SEED).standard_normal(R.shape[0])
    v /= np.linalg.norm(v)
    w = R @ v
    lam = float(v @ w)
    for _ in range(max_iters):
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        w = R @ v
        new = float(v @ w)
        if abs(new - lam) < tol * abs(lam):
            return new
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations (last estimate {lam!r})")


def step_size_bound(model: CorrelationModel, tol: float = 1e-12, max_iters: int = 100_000) -> tuple[float, float]:
    """Return ``(2 / lambda_max, 1 / lambda_max)``: the mean and mean-square bounds."""
    lam = max_eigenvalue(model, tol, max_iters)
    return 2.0 / lam, 1.0 / lam


def optimal_theta(fmap: RandomFeatureMap, centers: ArrayLike, coeffs: ArrayLike) -> NDArray[np.float64]:
    """Weight vector ``sum_m a_m z(c_m)`` reproducing the kernel expansion in feature space."""
    coeffs = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.size == 0 and coeffs.size == 0:
        return np.zeros(fmap.feature_dim)
    centers = centers.reshape(-1, fmap.input_dim)
    if centers.shape[0] != coeffs.shape[0]:
        raise DimensionError(f"{centers.shape[0]} centers but {coeffs.shape[0]} coefficients")
    return fmap.transform_batch(centers).T @ coeffs


def a_recursion(model: CorrelationModel, theta_opt: ArrayLike, mu: float, sigma_eta: float,
                n_steps: int) -> NDArray[np.float64]:
    """
    Iterate the weight-error covariance recursion densely from
    ``A_0 = theta_opt theta_opt^T`` and return ``tr(R A_n)`` for
    ``n = 0..n_steps``. Costs ``O(D^3)`` per step; intended for small ``D``.
    """
    R = model.r_matrix
    theta_opt = np.asarray(theta_opt, dtype=np.float64)
    A = np.outer(theta_opt, theta_opt)
    forcing = mu**2 * sigma_eta**2 * R
    out = np.empty(n_steps + 1)
    out[0] = np.sum(R * A)
    for n in range(n_steps):
        RA = R @ A
        A = A - mu * (RA + RA.T) + forcing
        out[n + 1] = np.sum(R * A)
    return out


class _EigenIterate:
    """
    Closed-form iterates of the covariance recursion in R's eigenbasis.

    With ``R = Q diag(lam) Q^T`` and ``B_n = Q^T A_n Q`` the recursion is
    elementwise: ``B_{n+1} = G * B_n + mu^2 s^2 diag(lam)``,
    ``G_ij = 1 - mu (lam_i + lam_j)``. Hence
    ``B_n = B_inf + G^n * (B_0 - B_inf)`` with ``B_inf = (mu s^2 / 2) I``.
    ``B_0 = p p^T`` with ``p = Q^T theta_opt``.

    Norms are taken of ``R^(1/2) A_n R^(1/2)``, i.e. of ``B_n`` weighted
    elementwise by ``sqrt(lam_i lam_j)``. Directions with negligible
    eigenvalue move arbitrarily slowly but cannot affect the MSE, and this
    weighting discounts them accordingly.
    """

    def __init__(self, lam, p, mu, sigma_eta):
        self.lam, self.p, self.mu = lam, p, mu
        D = lam.shape[0]
        rate = mu * (lam[:, None] + lam[None, :])
        self.g = 1.0 - rate
        self.g_diag = np.diagonal(self.g).copy()
        self.b_inf = np.where(self.g_diag != 1.0, mu * sigma_eta**2 / 2.0, 0.0)
        # diagonal of B_0 - B_inf; off-diagonal part is p_i p_j
        self.c_diag = p * p - self.b_inf
        self.root = np.sqrt(np.clip(lam, 0.0, None))
        self.D = D

    def _blocks(self):
        for lo in range(0, self.D, _ROW_BLOCK):
            hi = min(lo + _ROW_BLOCK, self.D)
            c = np.outer(self.p[lo:hi], self.p)
            idx = np.arange(lo, hi)
            c[idx - lo, idx] = self.c_diag[lo:hi]
            c *= self.root[lo:hi, None] * self.root[None, :]
            yield lo, hi, self.g[lo:hi], c

    def norms(self, n: int) -> tuple[float, float, float]:
        """Weighted ``(||B_{n+1} - B_n||_F, ||B_{n+1}||_F, ||B_0||_F)``."""
        change = value = initial = 0.0
        for lo, hi, g, c in self._blocks():
            gn = np.power(g, n)
            change += np.sum((gn * (g - 1.0) * c) ** 2)
            b = g * gn * c
            idx = np.arange(lo, hi)
            b[idx - lo, idx] += self.b_inf[lo:hi] * self.lam[lo:hi].clip(0.0)
            value += np.sum(b * b)
            b0 = c
            b0[idx - lo, idx] += self.b_inf[lo:hi] * self.lam[lo:hi].clip(0.0)
            initial += np.sum(b0 * b0)
        return np.sqrt(change), np.sqrt(value), np.sqrt(initial)

    def excess(self, n: int) -> float:
        diag = self.b_inf + np.power(self.g_diag, n) * self.c_diag
        return float(self.lam @ diag)


def steady_state_mse(model: CorrelationModel, theta_opt: ArrayLike, mu: float, sigma_eta: float,
                     tol: float = 1e-10, max_iters: int = 1_000_000) -> tuple[float, float]:
    """
    Steady-state MSE predicted by the weight-error covariance recursion.

    The recursion starts from the zero filter, ``A_0 = theta_opt theta_opt^T``,
    and is advanced until the relative change of ``R^(1/2) A_n R^(1/2)`` in
    Frobenius norm drops below ``tol`` (or that matrix collapses below
    ``tol`` times its initial norm, the noise-free case). Weighting by ``R``
    ignores directions the input never excites; for a well-conditioned ``R``
    it is equivalent to the plain relative change of ``A_n``. Iterates are
    evaluated in closed form in the eigenbasis of ``R`` and the stopping
    index is located by bisection, so the cost does not grow with the number
    of iterations.

    Returns
    -------
    steady_state_mse : float
        ``tr(R A_inf) + sigma_eta**2``.
    excess_mse : float
        ``tr(R A_inf)``.

    Raises
    ------
    BoundViolationError
        If ``mu`` is outside ``(0, 1 / lambda_max)``.
    ConvergenceError
        If the stopping test is not met within ``max_iters`` iterations.
    """
    if sigma_eta < 0 or not np.isfinite(sigma_eta):
        raise ValueError(f"sigma_eta must be nonnegative, got {sigma_eta}")
    mu_max, mu_var = step_size_bound(model)
    if not (0.0 < mu < mu_var):
        raise BoundViolationError(
            f"mu={mu!r} outside the mean-square stability range (0, {mu_var!r}); "
            f"mean-convergence bound is {mu_max!r}"
        )
    theta_opt = np.asarray(theta_opt, dtype=np.float64).reshape(-1)
    if theta_opt.shape[0] != model.feature_dim:
        raise DimensionError(f"theta_opt has length {theta_opt.shape[0]}, expected {model.feature_dim}")
    lam, Q = np.linalg.eigh(model.r_matrix)
    it = _EigenIterate(lam, Q.T @ theta_opt, float(mu), float(sigma_eta))

    def done(n):
        change, value, initial = it.norms(n)
        return change <= tol * value or value <= tol * initial

    if done(0):
        n = 0
    else:
        lo, hi = 0, 1
        while not done(hi):
            if hi >= max_iters:
                raise ConvergenceError(
                    f"covariance recursion not converged after {max_iters} iterations (tol={tol})"
                )
            lo, hi = hi, min(2 * hi, max_iters)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if done(mid):
                hi = mid
            else:
                lo = mid
        n = hi
    excess = it.excess(n + 1)
    return excess + sigma_eta**2, excess


def predict_convergence(fmap: RandomFeatureMap, sigma_x: float, mu: float, sigma_eta: float,
                        centers: ArrayLike, coeffs: ArrayLike, tol: float = 1e-10,
                        max_iters: int = 1_000_000) -> ConvergencePrediction:
    """Bundle the step-size bounds, optimal weights and steady-state MSE for one map."""
    model = rzz_closed_form(fmap, sigma_x)
    lam = max_eigenvalue(model)
    theta = optimal_theta(fmap, centers, coeffs)
    ss, excess = steady_state_mse(model, theta, mu, sigma_eta, tol, max_iters)
    return ConvergencePrediction(
        mu_max=2.0 / lam,
        mu_max_variance=1.0 / lam,
        lambda_max=lam,
        j_opt=sigma_eta**2,
        steady_state_mse=ss,
        excess_mse=excess,
        theta_opt=theta,
    )
