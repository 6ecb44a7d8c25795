"""
Locating thresholds by bisection
================================

Each step grows a batch of clusters at the bracket midpoint and keeps the
half of the bracket the phase classifier points to.
"""

from percolab import GrowthLimits, ModelSpec, bisect_threshold, run_realizations

limits = GrowthLimits(size_cutoff=10**4)

# Model A with arrow triples
est = bisect_threshold(ModelSpec("a-ea", width=1025, depth=512), "p", (0.4, 0.7),
                       tol=5e-3, realizations=4000, limits=limits)
print(f"A_EA        p_c = {est.p_c:.4f} +- {est.uncertainty:.4f}")
for lo, hi in est.bracket_history:
    print(f"    [{lo:.4f}, {hi:.4f}]")

# Model B with only up/right placements
for kind, bracket in (("b-classical", (0.4, 0.9)), ("b-ea", (0.2, 0.6))):
    est = bisect_threshold(ModelSpec(kind, width=256), "p_plus", bracket,
                           tol=5e-3, realizations=4000, limits=limits)
    print(f"{kind:11s} p_c = {est.p_c:.4f} +- {est.uncertainty:.4f}  (p_minus = 0)")

# Model A classical is a set of independent vertical lines: it never percolates
lines_only = ModelSpec("a-classical", p=0.99, width=5, depth=2000)
rec = run_realizations(lines_only, 3, 10**4, GrowthLimits(10**5))
print("A_classical p=0.99, share of clusters above 1000 sites:",
      float(((rec.size > 1000) | rec.truncated).mean()))
