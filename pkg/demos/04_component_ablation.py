"""Component ablation: bank, mean updates, covariance updates.

Runs the online adapter with every on/off combination of the three
components on one synthetic stream and prints the matrix.
"""

from gaussadapt import AdaptConfig, SynthSpec, ablation_matrix, generate
from gaussadapt.synth import RECOMMENDED_TAU

data = generate(SynthSpec(n_per_class=100, seed=2))
cfg = AdaptConfig(bank_capacity=16, tau=RECOMMENDED_TAU, order="shuffled",
                  seed=2)
reports = ablation_matrix(data.X, data.protos, data.labels, cfg,
                          mode="online")

print(f"{'bank':<5} {'mean':<5} {'cov':<5} {'acc %':>7} {'gain %':>7}")
print("-" * 33)
for rep in reports:
    c = rep["config"]
    print(f"{'on' if c['use_bank'] else 'off':<5} "
          f"{'on' if c['update_means'] else 'off':<5} "
          f"{'on' if c['update_covariance'] else 'off':<5} "
          f"{100 * rep['top1_accuracy']:>7.2f} {100 * rep['gain']:>7.2f}")
