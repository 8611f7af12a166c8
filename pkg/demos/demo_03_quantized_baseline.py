"""
Fixed-size features against a growing dictionary
================================================

Quantized KLMS keeps a dictionary of centers and grows it whenever an input
lands farther than ``epsilon`` (squared distance) from every center.
RFFKLMS instead fixes its size up front. On the two chaotic series both
reach similar error levels.
"""
import dataclasses

from rffklms.config import load_preset
from rffklms.harness import monte_carlo

for name in ("example3", "example4"):
    cfg = dataclasses.replace(load_preset(name), n_runs=50)
    rff, qk = monte_carlo(cfg)
    print(f"{name}: {cfg.n_samples} samples, {cfg.n_runs} runs")
    print(f"  {rff.label:<16} steady state {rff.steady_state_db:7.2f} dB")
    print(f"  {qk.label:<16} steady state {qk.steady_state_db:7.2f} dB, "
          f"mean dictionary size {qk.mean_dict_size:.1f}")

# the dictionary grows fast at first, then saturates
print("\nexample4 dictionary size at n = 10, 100, 1000:",
      [round(float(qk.dict_size[k - 1]), 1) for k in (10, 100, 1000)])
