"""Randomized checks of the r-matrix identities, with two negative controls."""

from spinrs import checks

for n in (1, 2, 3):
    for suite in ("skew", "equivariance", "mdybe", "theta", "commute"):
        print(checks.run_suite(suite, n, samples=200, seed=1)[0].line())

# a partial set of simple roots: only roots in the span of 1 and 3 get coth coefficients
for r in checks.run_suite("mdybe", 3, pi_prime=(1, 3), samples=200, seed=1):
    print(r.line())

print("\nnegative controls (these are expected to fail):")
print(checks.check_skew(2, samples=200, corrupt=True).line())
print(checks.check_mdybe(2, kappa=1.0, samples=200).line())

print("\nJacobi identity with nested finite differences (slow):")
print(checks.check_jacobi(1, samples=10, seed=1).line())
