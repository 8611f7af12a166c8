"""
How many random features does a Gaussian kernel need?
=====================================================

A random Fourier feature map turns the Gaussian kernel into an ordinary
inner product in ``D`` dimensions. The estimate is unbiased and its error
shrinks like ``1 / sqrt(D)``.
"""
import numpy as np

from rffklms import GaussianKernel, kernel_approx, kernel_exact, sample_feature_map
from rffklms.kernelcore import approximation_error

# one map, one pair of points
fmap = sample_feature_map(input_dim=5, feature_dim=500, sigma=5.0, seed=0)
u, v = np.zeros(5), np.full(5, 0.8)
print("exact  k(u, v) =", kernel_exact(GaussianKernel(5.0), u, v))
print("approx k(u, v) =", kernel_approx(fmap, u, v))

# every feature vector has squared norm close to 1, never above 2
Z = fmap.transform_batch(np.random.default_rng(1).standard_normal((1000, 5)))
norms = np.einsum("ij,ij->i", Z, Z)
print(f"||z||^2 over 1000 inputs: min {norms.min():.3f}, max {norms.max():.3f}")

# error against D, averaged over 20 independent maps
print("\n    D    rms error   sqrt(D) * rms")
for D, rms, _ in approximation_error(5.0, 5, [10, 100, 1000], n_pairs=500, seed=0):
    print(f"{D:5d}   {rms:.5f}     {np.sqrt(D) * rms:.3f}")
