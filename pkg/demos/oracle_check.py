"""
Checking the simulator against exact enumeration
================================================

On a lattice with at most 20 placements every configuration can be listed.
The exact cluster-size distribution is then compared with Monte Carlo
frequencies in units of binomial standard deviations.
"""

from percolab import ModelSpec, compare_mc_to_oracle, engine_mismatches, enumerate_exact

# one layer, three placements can feed the site above the source
exact = enumerate_exact(ModelSpec("a-ea", p=0.5, width=3, depth=1))
print("size pmf:", exact.size_pmf)
print("P(size > 1) =", exact.exceed_prob(1), "  closed form 1 - (1 - p)^3 =", 1 - 0.5**3)

for spec in (ModelSpec("a-ea", p=0.5, width=5, depth=2),
             ModelSpec("b-ea", p_plus=0.3, p_minus=0.2, width=3, height=2)):
    report = compare_mc_to_oracle(spec, realizations=20000)
    print(f"{spec.kind.value}: {spec.n_placements()} placements, "
          f"max |z| = {report.max_abs_z:.2f}, passed = {report.passed}, "
          f"engine mismatches = {engine_mismatches(spec)}")
