"""
The full law against its two reductions
=======================================

Setting P = I/2, or dropping every term that involves the target, turns
the law into simpler ones. Neither reduction reaches level 5 here.
"""

# %%
import sys

from qlyap import io
from qlyap.experiment import compare_modes

exp = io.load_config(io.bundled_config_path())
out = sys.argv[1] if len(sys.argv) > 1 else "comparison_out"
rows = compare_modes(exp, out)

# %%
print(f"{'mode':<18} {'final fidelity':>15} {'min V':>10} {'max |u|':>10}")
for r in rows:
    print(f"{r.mode:<18} {r.final_fidelity:15.4f} {r.min_v:10.4f} {r.max_abs_u:10.4f}")

# %%
# Starting in e1, the average-value law sees i<e1|[H1, P]|e1> = 0 and the
# drift never changes that, so it never switches on. With P = I/2 the first
# term is always zero and the second alone moves population without
# settling. The overlay of fidelity curves is in comparison.svg.
print("wrote", out)
