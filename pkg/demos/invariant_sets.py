"""
Where can the closed loop get stuck?
====================================

The feedback vanishes and V stops changing on an invariant set. With the
off-diagonal condition on P satisfied, drift evolution makes
<psi(t)|[H0, P]|psi(t)> oscillate for any superposition of drift
eigenstates, so only eigenstates survive.
"""

# %%
import numpy as np

from qlyap import ControlledSystem
from qlyap.controller import ControllerConfig
from qlyap.invariant import (
    case1_structural_condition,
    case2_residuals,
    characteristic_period,
    drift_commutator_residuals,
    theorem2_sampling_oracle,
)

h0 = np.diag([1.0, 1.2, 1.3, 2.0, 2.15])
h1 = np.zeros((5, 5))
h1[:3, 3:] = 1.0
h1 += h1.T
system = ControlledSystem(h0, [h1])
p = np.array(
    [
        [5.2, 0.8, 2.8, -0.8, 0.3],
        [0.8, 5.2, -0.8, 2.8, -0.3],
        [2.8, -0.8, 5.2, 0.8, -0.3],
        [-0.8, 2.8, 0.8, 5.2, 0.3],
        [0.3, -0.3, -0.3, 0.3, 1.7],
    ]
)
e = np.eye(5, dtype=complex)
cfg = ControllerConfig(p, e[4], (0.05,))

# %%
# Drift eigenstates: the residual is zero at every time.
for m in range(5):
    print(f"e{m + 1}: max residual {theorem2_sampling_oracle(cfg, system, e[m]):.2e}")

# %%
# An equal superposition of levels 1 and 5 beats at the gap 1.15. The
# amplitude is |lambda5 - lambda1| |P15| = 0.345.
psi = (e[0] + e[4]) / np.sqrt(2)
times = np.linspace(0, characteristic_period(system), 9)
print(np.round(drift_commutator_residuals(p, system, psi, times), 4))
print("sampled max:", theorem2_sampling_oracle(cfg, system, psi))

# %%
# The four residuals at the target and at a random state.
rng = np.random.default_rng(1)
z = rng.normal(size=5) + 1j * rng.normal(size=5)
for label, state in (("target", e[4]), ("random", z / np.linalg.norm(z))):
    print(label, case2_residuals(state, cfg, system).residuals)

# %%
# With a commuting P (here the identity) the set is far larger. Starting
# from e1 plus e4, the coupling <e1|H1|e4> = 1 already violates the
# structural condition.
cfg_id = ControllerConfig(np.eye(5), e[4], (0.05,))
report = case1_structural_condition(cfg_id, system, (e[0] + e[3]) / np.sqrt(2))
print("satisfied:", report.satisfied, "| violating (k, m, j):", report.violations)
