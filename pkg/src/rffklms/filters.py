"""
Online kernel filters.

``RFFKLMS``
    Plain LMS on random Fourier features. Fixed-size weight vector.
``QKLMS``
    Kernel LMS with a quantized dictionary: a sample closer (in squared
    Euclidean distance) than ``epsilon`` to an existing center updates that
    center's coefficient instead of growing the expansion.
``RFFRLS``
    Exponentially weighted RLS on random Fourier features.

All filters start from the zero solution. ``step`` returns the prior
prediction (computed with the weights before the update) and the prior
error; ``run`` processes a whole stream and returns the prior errors.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import blas as _blas

from .exceptions import DimensionError, NumericalBreakdownError, PoisonedStreamError
from .kernelcore import GaussianKernel, RandomFeatureMap, _as_vector

SNAPSHOT_FORMAT = "rffklms.filter-state"
SNAPSHOT_VERSION = 1

# rows transformed at once in the batch paths; bounds memory at large D
_CHUNK = 1024


def _check_sample(x: NDArray, y: float) -> float:
    y = float(y)
    if not (np.all(np.isfinite(x)) and np.isfinite(y)):
        raise PoisonedStreamError(f"non-finite sample x={x!r}, y={y!r}")
    return y


def _check_stream(X: ArrayLike, y: ArrayLike, dim: int) -> tuple[NDArray, NDArray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim == 1 and dim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimensionError(f"X has shape {X.shape}, expected (n, {dim})")
    if X.shape[0] != y.shape[0]:
        raise DimensionError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        bad = int(np.flatnonzero(~(np.isfinite(X).all(1) & np.isfinite(y)))[0])
        raise PoisonedStreamError(f"non-finite sample at index {bad}")
    return X, y


def _diverged(name: str, n: int):
    return NumericalBreakdownError(f"{name} diverged at step {n}: non-finite error")


class RFFKLMS:
    """
    Kernel LMS on a random Fourier feature map.

    Parameters
    ----------
    fmap : RandomFeatureMap
        Shared, read-only feature map.
    mu : float
        Step size. ``mu = 0`` freezes the weights.
    """

    algorithm = "rffklms"

    def __init__(self, fmap: RandomFeatureMap, mu: float):
        if not (np.isfinite(mu) and mu >= 0):
            raise ValueError(f"mu must be nonnegative and finite, got {mu}")
        self.fmap = fmap
        self.mu = float(mu)
        self.theta = np.zeros(fmap.feature_dim)
        self.n = 0
        self._z = np.empty(fmap.feature_dim)

    @property
    def input_dim(self) -> int:
        return self.fmap.input_dim

    def predict(self, x: ArrayLike) -> float:
        return float(self.theta @ self.fmap.transform(x, out=self._z))

    def step(self, x: ArrayLike, y: float) -> tuple[float, float]:
        x = _as_vector(x, self.input_dim)
        y = _check_sample(x, y)
        z = self.fmap.transform(x, out=self._z)
        pred = float(self.theta @ z)
        err = y - pred
        if not np.isfinite(err):
            raise _diverged(self.algorithm, self.n)
        self.theta += (self.mu * err) * z
        self.n += 1
        return pred, err

    def run(self, X: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
        """Process a stream; returns the prior error at every step."""
        X, y = _check_stream(X, y, self.input_dim)
        errors = np.empty(y.shape[0])
        theta, mu = self.theta, self.mu
        for start in range(0, y.shape[0], _CHUNK):
            Z = self.fmap.transform_batch(X[start:start + _CHUNK])
            for i, z in enumerate(Z):
                err = y[start + i] - theta @ z
                errors[start + i] = err
                theta += (mu * err) * z
            if not np.all(np.isfinite(errors[start:start + len(Z)])):
                raise _diverged(self.algorithm, self.n + start)
        self.n += y.shape[0]
        return errors

    def reset(self):
        self.theta[:] = 0.0
        self.n = 0

    def snapshot(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "algorithm": self.algorithm,
            "mu": self.mu,
            "n": self.n,
            "theta": self.theta.tolist(),
            "map": self.fmap.to_dict(),
        }

    @classmethod
    def _from_snapshot(cls, doc: dict) -> "RFFKLMS":
        f = cls(RandomFeatureMap.from_dict(doc["map"]), doc["mu"])
        f.theta[:] = doc["theta"]
        f.n = int(doc["n"])
        return f


class QKLMS:
    """
    Quantized kernel LMS.

    Parameters
    ----------
    kernel : GaussianKernel
    mu : float
        Step size.
    epsilon : float
        Quantization size, compared against the squared distance to the
        nearest center. ``epsilon = 0`` never merges, which gives the plain
        growing-expansion KLMS.
    input_dim : int
        Dimension of the inputs.

    Nearest-center ties go to the lowest index. The search is a linear scan.
    """

    algorithm = "qklms"

    def __init__(self, kernel: GaussianKernel, mu: float, epsilon: float, input_dim: int):
        if not (np.isfinite(mu) and mu >= 0):
            raise ValueError(f"mu must be nonnegative and finite, got {mu}")
        if not (np.isfinite(epsilon) and epsilon >= 0):
            raise ValueError(f"epsilon must be nonnegative and finite, got {epsilon}")
        if int(input_dim) != input_dim or input_dim < 1:
            raise ValueError(f"input_dim must be a positive integer, got {input_dim}")
        self.kernel = kernel
        self.mu = float(mu)
        self.epsilon = float(epsilon)
        self.input_dim = int(input_dim)
        self.n = 0
        self._centers = np.empty((16, self.input_dim))
        self._coeffs = np.empty(16)
        self._size = 0
        self._inv2s2 = 1.0 / (2.0 * kernel.sigma**2)

    @property
    def dict_size(self) -> int:
        return self._size

    @property
    def centers(self) -> NDArray[np.float64]:
        return self._centers[: self._size].copy()

    @property
    def coeffs(self) -> NDArray[np.float64]:
        return self._coeffs[: self._size].copy()

    def _append(self, x: NDArray, coeff: float):
        if self._size == self._coeffs.shape[0]:
            cap = 2 * self._size
            centers = np.empty((cap, self.input_dim))
            coeffs = np.empty(cap)
            centers[: self._size] = self._centers
            coeffs[: self._size] = self._coeffs
            self._centers, self._coeffs = centers, coeffs
        self._centers[self._size] = x
        self._coeffs[self._size] = coeff
        self._size += 1

    def _sqdist(self, x: NDArray) -> NDArray:
        diff = self._centers[: self._size] - x
        return np.einsum("ij,ij->i", diff, diff)

    def predict(self, x: ArrayLike) -> float:
        x = _as_vector(x, self.input_dim)
        if self._size == 0:
            return 0.0
        return float(self._coeffs[: self._size] @ np.exp(-self._inv2s2 * self._sqdist(x)))

    def step(self, x: ArrayLike, y: float) -> tuple[float, float, int]:
        x = _as_vector(x, self.input_dim)
        y = _check_sample(x, y)
        M = self._size
        if M:
            dist = self._sqdist(x)
            pred = float(self._coeffs[:M] @ np.exp(-self._inv2s2 * dist))
        else:
            pred = 0.0
        err = y - pred
        if not np.isfinite(err):
            raise _diverged(self.algorithm, self.n)
        if M:
            k = int(np.argmin(dist))
            if dist[k] < self.epsilon:
                self._coeffs[k] += self.mu * err
            else:
                self._append(x, self.mu * err)
        else:
            self._append(x, self.mu * err)
        self.n += 1
        return pred, err, self._size

    def run(self, X: ArrayLike, y: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
        """
        Process a stream.

        Returns
        -------
        errors : array of shape (n,)
            Prior errors.
        dict_sizes : array of shape (n,)
            Dictionary size after each update.
        """
        X, y = _check_stream(X, y, self.input_dim)
        n = y.shape[0]
        errors = np.empty(n)
        sizes = np.empty(n, dtype=np.int64)
        step = self.step
        for i in range(n):
            _, errors[i], sizes[i] = step(X[i], y[i])
        return errors, sizes

    def reset(self):
        self._size = 0
        self.n = 0

    def snapshot(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "algorithm": self.algorithm,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "sigma": self.kernel.sigma,
            "input_dim": self.input_dim,
            "n": self.n,
            "centers": self.centers.tolist(),
            "coeffs": self.coeffs.tolist(),
        }

    @classmethod
    def _from_snapshot(cls, doc: dict) -> "QKLMS":
        f = cls(GaussianKernel(doc["sigma"]), doc["mu"], doc["epsilon"], doc["input_dim"])
        centers = np.asarray(doc["centers"], dtype=np.float64).reshape(-1, f.input_dim)
        for c, a in zip(centers, doc["coeffs"], strict=True):
            f._append(c, float(a))
        f.n = int(doc["n"])
        return f


class RFFRLS:
    """
    Exponentially weighted RLS on a random Fourier feature map.

    Parameters
    ----------
    fmap : RandomFeatureMap
    reg_lambda : float
        Initial regularization; the inverse correlation estimate starts at
        ``I / reg_lambda``.
    beta : float
        Forgetting factor in ``(0, 1]``.

    Only the upper triangle of the inverse correlation estimate is stored and
    updated (BLAS ``dsymv``/``dsyr``), so the matrix exposed as ``p_matrix``
    is symmetric by construction.
    """

    algorithm = "rffrls"

    def __init__(self, fmap: RandomFeatureMap, reg_lambda: float, beta: float = 1.0):
        if not (np.isfinite(reg_lambda) and reg_lambda > 0):
            raise ValueError(f"reg_lambda must be positive, got {reg_lambda}")
        if not (0 < beta <= 1):
            raise ValueError(f"beta must lie in (0, 1], got {beta}")
        self.fmap = fmap
        self.reg_lambda = float(reg_lambda)
        self.beta = float(beta)
        self.theta = np.zeros(fmap.feature_dim)
        self.n = 0
        self._z = np.empty(fmap.feature_dim)
        self._set_p(np.eye(fmap.feature_dim) / self.reg_lambda)

    def _set_p(self, P: NDArray):
        self._p = np.asfortranarray(np.triu(P), dtype=np.float64)

    @property
    def input_dim(self) -> int:
        return self.fmap.input_dim

    @property
    def p_matrix(self) -> NDArray[np.float64]:
        """Full symmetric inverse correlation estimate (a copy)."""
        upper = np.triu(self._p)
        return upper + np.triu(upper, 1).T

    def predict(self, x: ArrayLike) -> float:
        return float(self.theta @ self.fmap.transform(x, out=self._z))

    def _update(self, z: NDArray, y: float) -> tuple[float, float]:
        pz = _blas.dsymv(1.0, self._p, z, lower=0)
        denom = self.beta + float(z @ pz)
        if not (np.isfinite(denom) and denom > 0):
            raise NumericalBreakdownError(
                f"rffrls gain denominator {denom!r} at step {self.n}: P is no longer positive definite"
            )
        pred = float(self.theta @ z)
        err = y - pred
        if not np.isfinite(err):
            raise _diverged(self.algorithm, self.n)
        self.theta += (err / denom) * pz
        # P <- (P - k z'P) / beta, k = Pz / denom
        self._p = _blas.dsyr(-1.0 / denom, pz, a=self._p, lower=0, overwrite_a=1)
        if self.beta != 1.0:
            self._p *= 1.0 / self.beta
        self.n += 1
        return pred, err

    def step(self, x: ArrayLike, y: float) -> tuple[float, float]:
        x = _as_vector(x, self.input_dim)
        y = _check_sample(x, y)
        return self._update(self.fmap.transform(x, out=self._z), y)

    def run(self, X: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
        X, y = _check_stream(X, y, self.input_dim)
        errors = np.empty(y.shape[0])
        for start in range(0, y.shape[0], _CHUNK):
            Z = self.fmap.transform_batch(X[start:start + _CHUNK])
            for i, z in enumerate(Z):
                errors[start + i] = self._update(z, y[start + i])[1]
        return errors

    def reset(self):
        self.theta[:] = 0.0
        self._set_p(np.eye(self.fmap.feature_dim) / self.reg_lambda)
        self.n = 0

    def snapshot(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "algorithm": self.algorithm,
            "reg_lambda": self.reg_lambda,
            "beta": self.beta,
            "n": self.n,
            "theta": self.theta.tolist(),
            "p_matrix": self.p_matrix.tolist(),
            "map": self.fmap.to_dict(),
        }

    @classmethod
    def _from_snapshot(cls, doc: dict) -> "RFFRLS":
        f = cls(RandomFeatureMap.from_dict(doc["map"]), doc["reg_lambda"], doc["beta"])
        f.theta[:] = doc["theta"]
        f._set_p(np.asarray(doc["p_matrix"], dtype=np.float64))
        f.n = int(doc["n"])
        return f


FILTERS = {cls.algorithm: cls for cls in (RFFKLMS, QKLMS, RFFRLS)}


def restore_filter(doc: dict) -> RFFKLMS | QKLMS | RFFRLS:
    """Rebuild a filter from the dictionary produced by its ``snapshot``."""
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"not a filter snapshot: format={doc.get('format')!r}")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
    try:
        cls = FILTERS[doc["algorithm"]]
    except KeyError:
        raise ValueError(f"unknown algorithm {doc.get('algorithm')!r}") from None
    return cls._from_snapshot(doc)
