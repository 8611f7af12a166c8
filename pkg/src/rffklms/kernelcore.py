"""
Gaussian kernel and its random Fourier feature approximation.

A shift-invariant kernel is the Fourier transform of a probability density.
For the Gaussian kernel with bandwidth ``sigma`` that density is the
isotropic normal with covariance ``I / sigma**2``. Drawing ``D`` frequencies
``omega_i`` from it, together with ``D`` phases ``b_i`` uniform on
``[0, 2*pi)``, defines the lifting::

    z(x) = sqrt(2 / D) * cos(Omega @ x + b)

whose inner products ``z(u) @ z(v)`` are unbiased estimates of
``exp(-||u - v||**2 / (2 sigma**2))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rng as _rng
from .exceptions import DimensionError

TWO_PI = 2.0 * np.pi


def _as_vector(x: ArrayLike, dim: int | None = None, name: str = "x") -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"{name} has length {x.shape[0]}, expected {dim}")
    return x


@dataclass(frozen=True)
class GaussianKernel:
    """Gaussian kernel ``exp(-||u - v||^2 / (2 sigma^2))``."""

    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")

    def __call__(self, u: ArrayLike, v: ArrayLike) -> float:
        return kernel_exact(self, u, v)


@dataclass(frozen=True, eq=False)
class RandomFeatureMap:
    """
    A frozen draw of random Fourier features.

    Parameters
    ----------
    omegas : array of shape (D, d)
        Frequency vectors, one per row.
    phases : array of shape (D,)
        Phase offsets in ``[0, 2*pi)``.
    sigma : float
        Bandwidth of the Gaussian kernel the frequencies were drawn for.
    seed : int or None
        Seed that produced the draw. ``None`` for hand-built maps.

    The arrays are copied and marked read-only, so one map can be shared by
    any number of filters.
    """

    omegas: NDArray[np.float64]
    phases: NDArray[np.float64]
    sigma: float
    seed: int | None = None
    _scale: float = field(init=False, repr=False)

    def __post_init__(self):
        omegas = np.array(self.omegas, dtype=np.float64, copy=True)
        phases = np.array(self.phases, dtype=np.float64, copy=True).reshape(-1)
        if omegas.ndim == 1:
            omegas = omegas.reshape(-1, 1)
        if omegas.ndim != 2 or omegas.shape[0] < 1 or omegas.shape[1] < 1:
            raise ValueError(f"omegas must have shape (D, d) with D, d >= 1, got {omegas.shape}")
        if phases.shape[0] != omegas.shape[0]:
            raise DimensionError(
                f"{phases.shape[0]} phases given for {omegas.shape[0]} frequencies"
            )
        if not (np.all(np.isfinite(omegas)) and np.all(np.isfinite(phases))):
            raise ValueError("omegas and phases must be finite")
        if np.any(phases < 0.0) or np.any(phases >= TWO_PI):
            raise ValueError("phases must lie in [0, 2*pi)")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if self.seed is not None:
            object.__setattr__(self, "seed", _rng.check_seed(self.seed))
        omegas.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "_scale", np.sqrt(2.0 / omegas.shape[0]))

    @property
    def feature_dim(self) -> int:
        return self.omegas.shape[0]

    @property
    def input_dim(self) -> int:
        return self.omegas.shape[1]

    def transform(self, x: ArrayLike, out: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
        """
        Lift one input vector to the ``D``-dimensional feature space.

        Parameters
        ----------
        x : array of shape (d,)
        out : array of shape (D,), optional
            Buffer to write the result into. No allocation happens when given.
        """
        x = _as_vector(x, self.input_dim)
        if out is None:
            out = np.empty(self.feature_dim)
        elif out.shape != (self.feature_dim,):
            raise DimensionError(f"out has shape {out.shape}, expected ({self.feature_dim},)")
        np.dot(self.omegas, x, out=out)
        out += self.phases
        np.cos(out, out=out)
        out *= self._scale
        return out

    def transform_batch(self, X: ArrayLike) -> NDArray[np.float64]:
        """Lift the rows of ``X`` (shape ``(n, d)``); returns shape ``(n, D)``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionError(f"X has shape {X.shape}, expected (n, {self.input_dim})")
        Z = X @ self.omegas.T
        Z += self.phases
        np.cos(Z, out=Z)
        Z *= self._scale
        return Z

    def __eq__(self, other):
        if not isinstance(other, RandomFeatureMap):
            return NotImplemented
        return (
            self.sigma == other.sigma
            and self.seed == other.seed
            and np.array_equal(self.omegas, other.omegas)
            and np.array_equal(self.phases, other.phases)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "input_dim": self.input_dim,
            "feature_dim": self.feature_dim,
            "seed": self.seed,
            "omegas": self.omegas.tolist(),
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomFeatureMap":
        omegas = np.asarray(doc["omegas"], dtype=np.float64).reshape(
            int(doc["feature_dim"]), int(doc["input_dim"])
        )
        return cls(omegas, doc["phases"], doc["sigma"], doc.get("seed"))

    def to_json(self) -> str:
        # json writes floats with repr(), which round-trips exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RandomFeatureMap":
        return cls.from_dict(json.loads(text))


def sample_feature_map(input_dim: int, feature_dim: int, sigma: float, seed: int) -> RandomFeatureMap:
    """
    Draw a random Fourier feature map for the Gaussian kernel.

    Each frequency is a vector of ``input_dim`` independent standard normals
    divided by ``sigma``; each phase is uniform on ``[0, 2*pi)``. The same
    arguments always give the same map.
    """
    if int(input_dim) != input_dim or input_dim < 1:
        raise ValueError(f"input_dim must be a positive integer, got {input_dim}")
    if int(feature_dim) != feature_dim or feature_dim < 1:
        raise ValueError(f"feature_dim must be a positive integer, got {feature_dim}")
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    gen = _rng.make_rng(seed, _rng.FEATURES)
    omegas = gen.standard_normal((int(feature_dim), int(input_dim))) / sigma
    phases = TWO_PI * gen.random(int(feature_dim))
    phases[phases >= TWO_PI] = 0.0
    return RandomFeatureMap(omegas, phases, sigma, seed)


def transform(fmap: RandomFeatureMap, x: ArrayLike, out: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
    return fmap.transform(x, out=out)


def kernel_exact(kernel: GaussianKernel, u: ArrayLike, v: ArrayLike) -> float:
    u = _as_vector(u, name="u")
    v = _as_vector(v, u.shape[0], name="v")
    diff = u - v
    return float(np.exp(-(diff @ diff) / (2.0 * kernel.sigma**2)))


def kernel_approx(fmap: RandomFeatureMap, u: ArrayLike, v: ArrayLike) -> float:
    """Random-feature estimate ``z(u) @ z(v)`` of the Gaussian kernel."""
    return float(fmap.transform(u) @ fmap.transform(v))


def kernel_matrix(kernel: GaussianKernel, A: ArrayLike, B: ArrayLike) -> NDArray[np.float64]:
    """Exact kernel between every row of ``A`` and every row of ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"row dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * kernel.sigma**2))


def approximation_error(sigma: float, input_dim: int, feature_dims, n_pairs: int, seed: int,
                        n_maps: int = 20):
    """
    RMS and maximum absolute error of the random-feature kernel estimate.

    Pairs ``(u, v)`` are standard normal in ``R^input_dim`` and shared by all
    ``D``. For every ``D``, ``n_maps`` independent maps are drawn; the RMS
    is taken over all pairs and maps, the maximum over all of them too.

    Returns
    -------
    list of (D, rms_error, max_error)
    """
    feature_dims = [int(D) for D in feature_dims]
    if not feature_dims:
        raise ValueError("feature_dims must not be empty")
    if int(n_pairs) != n_pairs or n_pairs < 1:
        raise ValueError(f"n_pairs must be a positive integer, got {n_pairs}")
    if int(n_maps) != n_maps or n_maps < 1:
        raise ValueError(f"n_maps must be a positive integer, got {n_maps}")
    gen = _rng.make_rng(seed, _rng.INPUTS)
    U = gen.standard_normal((int(n_pairs), input_dim))
    V = gen.standard_normal((int(n_pairs), input_dim))
    diff = U - V
    exact = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * sigma**2))
    rows = []
    for D in feature_dims:
        sq, mx = 0.0, 0.0
        for m in range(int(n_maps)):
            fmap = sample_feature_map(input_dim, D, sigma, _rng.derive_seed(seed, _rng.FEATURES, D, m))
            err = np.einsum("ij,ij->i", fmap.transform_batch(U), fmap.transform_batch(V)) - exact
            sq += float(err @ err)
            mx = max(mx, float(np.max(np.abs(err))))
        rows.append((D, float(np.sqrt(sq / (n_pairs * n_maps))), mx))
    return rows
