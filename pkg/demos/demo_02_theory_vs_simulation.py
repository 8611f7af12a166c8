"""
Predicted and simulated steady state
====================================

The data follow a fixed kernel expansion plus white noise. For a given
feature map the mean-square theory gives the step-size bound and the
steady-state MSE, which we set against a short Monte Carlo run.

With ``mu = 1`` the squared feature norm is close to one, so each update
behaves like normalized LMS with unit step. The simulated misadjustment
then exceeds the first-order prediction. At ``mu = 0.2`` the two agree
closely, at the price of a longer transient.
"""
import dataclasses

from rffklms.config import load_preset
from rffklms.harness import monte_carlo, theory_prediction

cfg = load_preset("example1_d1000")
cfg = dataclasses.replace(cfg, n_runs=10)

# the smaller step needs a longer run to settle
for mu, n in ((1.0, 5000), (0.2, 20000)):
    filt = dataclasses.replace(cfg.filters[0], mu=mu)
    run = dataclasses.replace(cfg, filters=(filt,), n_samples=n, mse_window=n // 10)
    theory = theory_prediction(run, 0)
    (curve,) = monte_carlo(run)
    print(f"mu = {mu}")
    print(f"  mean-convergence bound  {theory['mu_max']:.3f}")
    print(f"  predicted steady state  {theory['steady_state_mse']:.5f}")
    print(f"  simulated steady state  {curve.steady_state:.5f}  ({run.n_runs} runs)")
    print(f"  noise floor             {theory['j_opt']:.5f}")
