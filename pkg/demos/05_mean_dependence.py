"""Two means, same observable: different E[Y], same outcome probabilities.

With eigenvalue gaps of 1e-3 and 1, a narrow and a wide Cesaro window
disagree on the near-degenerate coherence but give identical Born weights.
"""
import json

from canmeas.harness import build_experiment, bundled_config, mean_dependence
from canmeas.kernels import MeanKernel

exp = build_experiment(bundled_config("mean_dependence"))
print("X eigenvalues:", exp.x.eigenvalues)
eps = 1e-3
result = mean_dependence(exp, MeanKernel.cesaro(0.01 / eps), MeanKernel.cesaro(100 / eps))
print(json.dumps({k: result[k] for k in ("kernels", "relative_operator_difference",
                                         "max_bin_probability_difference", "bin_probabilities")}, indent=2))
