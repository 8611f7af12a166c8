"""
Synthetic systems used to exercise the filters.

Four model families, each a frozen dataclass carrying its parameters plus a
``seed`` and ``n_samples``:

``KernelExpansion``
    ``y = sum_m a_m k(c_m, x) + noise`` with Gaussian inputs.
``Quadratic``
    ``y = w0.x + 0.1 (w1.x)^2 + noise`` with standard normal inputs in R^5.
``ChaoticA``
    ``d_n = d_{n-1} / (1 + d_{n-1}^2) + u_{n-1}^3``, ``y_n = d_n + noise``.
    Regressor ``x_n = u_{n-1}``.
``ChaoticB``
    ``d_n = u_n + 0.5 v_n - 0.2 d_{n-1} + 0.35 d_{n-2}``, ``y_n = phi(d_n) + noise``
    with ``u_n = 0.5 v_n + w_n``. Regressor ``x_n = (u_n, v_n)``.

For the two chaotic series the regressor is the vector of exogenous Gaussian
inputs that drive the recursion into the sample being predicted.

Parameters left as ``None`` (expansion centers and weights, quadratic
weights) are drawn from the model's own seed, so a spec with ``None`` fields
describes a family of systems and a fresh member is drawn per seed. Inputs,
observation noise and auxiliary inputs come from independent streams, so
changing a noise level leaves the input trajectory untouched.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from os import PathLike
from typing import Iterator, Union

import numpy as np
from numpy.typing import NDArray
from scipy.signal import lfilter, lfiltic

from . import rng as _rng
from .kernelcore import GaussianKernel, kernel_matrix


def _nonneg(name, value):
    if not (np.isfinite(value) and value >= 0):
        raise ValueError(f"{name} must be nonnegative and finite, got {value}")


def _check_common(spec):
    if int(spec.n_samples) != spec.n_samples or spec.n_samples < 1:
        raise ValueError(f"n_samples must be a positive integer, got {spec.n_samples}")
    _rng.check_seed(spec.seed)


@dataclass(frozen=True)
class KernelExpansion:
    n_samples: int = 5000
    seed: int = 0
    centers: tuple | None = None
    coeffs: tuple | None = None
    n_centers: int = 10
    input_dim: int = 5
    sigma: float = 5.0
    sigma_x: float = 1.0
    sigma_eta: float = 0.1
    coeff_std: float = 5.0

    kind = "kernel_expansion"

    def __post_init__(self):
        _check_common(self)
        _nonneg("sigma_eta", self.sigma_eta)
        _nonneg("coeff_std", self.coeff_std)
        if not self.sigma > 0 or not self.sigma_x > 0:
            raise ValueError("sigma and sigma_x must be positive")
        if (self.centers is None) != (self.coeffs is None):
            raise ValueError("centers and coeffs must be given together")
        if self.centers is not None:
            centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, self.input_dim)
            coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
            if centers.shape[0] != coeffs.shape[0]:
                raise ValueError(f"{centers.shape[0]} centers but {coeffs.shape[0]} coefficients")
            object.__setattr__(self, "centers", tuple(map(tuple, centers.tolist())))
            object.__setattr__(self, "coeffs", tuple(coeffs.tolist()))
            object.__setattr__(self, "n_centers", len(coeffs))

    def resolve(self) -> "KernelExpansion":
        """Return a copy with centers and weights drawn (if unset) from the seed."""
        if self.centers is not None:
            return self
        gen = _rng.make_rng(self.seed, _rng.MODEL)
        centers = gen.standard_normal((self.n_centers, self.input_dim))
        coeffs = self.coeff_std * gen.standard_normal(self.n_centers)
        return dataclasses.replace(self, centers=centers.tolist(), coeffs=coeffs.tolist())

    def expansion(self, X: NDArray) -> NDArray:
        """Noise-free output ``sum_m a_m k(c_m, x)`` for each row of ``X``."""
        spec = self.resolve()
        if spec.n_centers == 0:
            return np.zeros(np.asarray(X).shape[0])
        C = np.asarray(spec.centers).reshape(-1, self.input_dim)
        return kernel_matrix(GaussianKernel(self.sigma), X, C) @ np.asarray(spec.coeffs)


@dataclass(frozen=True)
class Quadratic:
    n_samples: int = 15000
    seed: int = 0
    w0: tuple | None = None
    w1: tuple | None = None
    sigma_eta: float = 0.05

    kind = "quadratic"
    input_dim = 5

    def __post_init__(self):
        _check_common(self)
        _nonneg("sigma_eta", self.sigma_eta)
        if (self.w0 is None) != (self.w1 is None):
            raise ValueError("w0 and w1 must be given together")
        if self.w0 is not None:
            for name in ("w0", "w1"):
                w = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
                if w.shape != (5,):
                    raise ValueError(f"{name} must have 5 entries")
                object.__setattr__(self, name, tuple(w.tolist()))

    def resolve(self) -> "Quadratic":
        if self.w0 is not None:
            return self
        gen = _rng.make_rng(self.seed, _rng.MODEL)
        return dataclasses.replace(self, w0=gen.standard_normal(5).tolist(), w1=gen.standard_normal(5).tolist())


@dataclass(frozen=True)
class ChaoticA:
    n_samples: int = 500
    seed: int = 0
    sigma_u: float = 0.15
    sigma_eta: float = 0.01
    d_init: float = 1.0

    kind = "chaotic_a"
    input_dim = 1

    def __post_init__(self):
        _check_common(self)
        _nonneg("sigma_u", self.sigma_u)
        _nonneg("sigma_eta", self.sigma_eta)

    def resolve(self) -> "ChaoticA":
        return self


@dataclass(frozen=True)
class ChaoticB:
    n_samples: int = 1000
    seed: int = 0
    sigma_v_sq: float = 0.0156
    sigma_hat_sq: float = 0.0156
    sigma_eta: float = 0.001
    d_init: tuple = (1.0, 1.0)

    kind = "chaotic_b"
    input_dim = 2

    def __post_init__(self):
        _check_common(self)
        _nonneg("sigma_v_sq", self.sigma_v_sq)
        _nonneg("sigma_hat_sq", self.sigma_hat_sq)
        _nonneg("sigma_eta", self.sigma_eta)
        object.__setattr__(self, "d_init", tuple(float(v) for v in self.d_init))
        if len(self.d_init) != 2:
            raise ValueError("d_init must hold (d_1, d_2)")

    def resolve(self) -> "ChaoticB":
        return self


ModelSpec = Union[KernelExpansion, Quadratic, ChaoticA, ChaoticB]
MODEL_KINDS = {cls.kind: cls for cls in (KernelExpansion, Quadratic, ChaoticA, ChaoticB)}


def _wrong(spec, expected):
    return TypeError(f"expected a {expected.__name__} spec, got {type(spec).__name__}")


def gen_kernel_expansion(spec: KernelExpansion, inputs: NDArray | None = None) -> tuple[NDArray, NDArray]:
    """
    Draw ``(X, y)`` from a kernel expansion.

    ``inputs`` replaces the Gaussian input draw (shape ``(n_samples, d)``).
    """
    if not isinstance(spec, KernelExpansion):
        raise _wrong(spec, KernelExpansion)
    n, d = spec.n_samples, spec.input_dim
    if inputs is None:
        X = spec.sigma_x * _rng.make_rng(spec.seed, _rng.INPUTS).standard_normal((n, d))
    else:
        X = np.asarray(inputs, dtype=np.float64).reshape(n, d)
    noise = spec.sigma_eta * _rng.make_rng(spec.seed, _rng.NOISE).standard_normal(n)
    return X, spec.expansion(X) + noise


def gen_quadratic(spec: Quadratic, inputs: NDArray | None = None) -> tuple[NDArray, NDArray]:
    if not isinstance(spec, Quadratic):
        raise _wrong(spec, Quadratic)
    spec = spec.resolve()
    n = spec.n_samples
    if inputs is None:
        X = _rng.make_rng(spec.seed, _rng.INPUTS).standard_normal((n, 5))
    else:
        X = np.asarray(inputs, dtype=np.float64).reshape(n, 5)
    noise = spec.sigma_eta * _rng.make_rng(spec.seed, _rng.NOISE).standard_normal(n)
    y = X @ np.asarray(spec.w0) + 0.1 * (X @ np.asarray(spec.w1)) ** 2 + noise
    return X, y


def gen_chaotic_a(spec: ChaoticA, return_latent: bool = False):
    """
    Draw ``(X, y)`` from the first chaotic series.

    Sample ``k`` (0-based) pairs ``x = u_{k+1}`` with ``y = d_{k+2} + noise``;
    ``d_1 = d_init``. With ``return_latent`` the noise-free ``d_2..d_{n+1}``
    are returned as a third array.
    """
    if not isinstance(spec, ChaoticA):
        raise _wrong(spec, ChaoticA)
    n = spec.n_samples
    u = spec.sigma_u * _rng.make_rng(spec.seed, _rng.INPUTS).standard_normal(n)
    noise = spec.sigma_eta * _rng.make_rng(spec.seed, _rng.NOISE).standard_normal(n)
    drive = u**3
    d = np.empty(n)
    prev = float(spec.d_init)
    for k in range(n):
        prev = prev / (1.0 + prev * prev) + drive[k]
        d[k] = prev
    X = u.reshape(n, 1)
    y = d + noise
    return (X, y, d) if return_latent else (X, y)


def phi(d: NDArray) -> NDArray:
    """Output nonlinearity of the second chaotic series."""
    d = np.asarray(d, dtype=np.float64)
    neg = np.minimum(d, 0.0)
    pos = np.maximum(d, 0.0)
    return np.where(
        d >= 0,
        pos / (3.0 * np.sqrt(0.1 + 0.9 * pos * pos)),
        -neg * neg * (1.0 - np.exp(0.7 * neg)) / 3.0,
    )


def gen_chaotic_b(spec: ChaoticB, return_latent: bool = False):
    """
    Draw ``(X, y)`` from the second chaotic series.

    Sample ``k`` (0-based) is time ``k + 3``: ``x = (u, v)`` at that time and
    ``y = phi(d) + noise``; ``d_1, d_2 = d_init``.
    """
    if not isinstance(spec, ChaoticB):
        raise _wrong(spec, ChaoticB)
    n = spec.n_samples
    v = np.sqrt(spec.sigma_v_sq) * _rng.make_rng(spec.seed, _rng.INPUTS).standard_normal(n)
    w = np.sqrt(spec.sigma_hat_sq) * _rng.make_rng(spec.seed, _rng.AUX).standard_normal(n)
    noise = spec.sigma_eta * _rng.make_rng(spec.seed, _rng.NOISE).standard_normal(n)
    u = 0.5 * v + w
    # d_n + 0.2 d_{n-1} - 0.35 d_{n-2} = u_n + 0.5 v_n
    a = [1.0, 0.2, -0.35]
    d1, d2 = spec.d_init
    zi = lfiltic([1.0], a, y=[d2, d1])
    d, _ = lfilter([1.0], a, u + 0.5 * v, zi=zi)
    X = np.column_stack([u, v])
    y = phi(d) + noise
    return (X, y, d) if return_latent else (X, y)


_GENERATORS = {
    KernelExpansion: gen_kernel_expansion,
    Quadratic: gen_quadratic,
    ChaoticA: gen_chaotic_a,
    ChaoticB: gen_chaotic_b,
}


def generate(spec: ModelSpec) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Draw the full ``(X, y)`` stream described by ``spec``."""
    try:
        gen = _GENERATORS[type(spec)]
    except KeyError:
        raise TypeError(f"not a model spec: {type(spec).__name__}") from None
    return gen(spec)[:2]


def stream(spec: ModelSpec) -> Iterator[tuple[NDArray[np.float64], float]]:
    """Yield ``(x_n, y_n)`` pairs one at a time."""
    X, y = generate(spec)
    for x_n, y_n in zip(X, y):
        yield x_n, float(y_n)


def model_from_dict(doc: dict) -> ModelSpec:
    doc = dict(doc)
    kind = doc.pop("kind")
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}") from None
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - fields
    if unknown:
        raise ValueError(f"unknown {kind} parameters: {sorted(unknown)}")
    return cls(**doc)


def model_to_dict(spec: ModelSpec) -> dict:
    doc = {"kind": spec.kind}
    for f in dataclasses.fields(spec):
        value = getattr(spec, f.name)
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        doc[f.name] = value
    return doc


def write_stream_csv(path: str | PathLike, X: NDArray, y: NDArray):
    """Write a stream as CSV with header ``n,x_1..x_d,y``; floats use ``repr``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", *(f"x_{i + 1}" for i in range(X.shape[1])), "y"])
        for k, (x, t) in enumerate(zip(X.tolist(), np.asarray(y, dtype=np.float64).tolist()), start=1):
            out.writerow([k, *map(repr, x), repr(t)])


def read_stream_csv(path: str | PathLike) -> tuple[NDArray, NDArray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1:-1], data[:, -1]
