"""Diagonal initial data: the flow is a straight line in q and g stays put.

For diagonal g0 the r-matrix term drops out of dg/dt, so
q(t) = q0 - (t/2) Pi_h Df(g0) exactly. With f = tr and g0 = diag(2, 1/2)
this is dq_0/dt = -(2 - 1/2)/4 = -3/8.
"""

import numpy as np

from spinrs import HamiltonianSpec, IntegratorConfig, RMatrixSpec, RSState, integrate, solve

spec = RMatrixSpec(1)
ham = HamiltonianSpec.trace()
s0 = RSState(np.array([1.0, -1.0]), np.diag([2.0, 0.5]))
t = np.linspace(0, 2, 5)

ode = integrate(spec, ham, s0, t, IntegratorConfig(rtol=1e-11, atol=1e-13))
fact = solve(spec, ham, s0, t)
exact = np.stack([1 - 0.375 * t, -1 + 0.375 * t], axis=1)

print("   t      q_0 (RK45)          q_0 (factorization)  q_0 (exact)")
for k, tk in enumerate(t):
    print(f"{tk:5.2f}  {ode.q[k, 0]:.15f}  {fact.traj.q[k, 0]:.15f}  {exact[k, 0]:.15f}")
print(f"max |g(t) - g0|: RK45 {np.abs(ode.g - s0.g).max():.1e}, "
      f"factorization {np.abs(fact.traj.g - s0.g).max():.1e}")

# the same initial data run past the collision q_0 = q_1
s1 = RSState(np.array([0.2, -0.2]), np.diag([2.0, 0.5]))
res = solve(spec, ham, s1, np.linspace(0, 1, 11))
print(f"\nstarting at q = (0.2, -0.2) the coordinates meet at t = 0.4/0.75 = {0.4 / 0.75:.6f};")
print(f"the factorization solver stops at t = {res.breakdown:.6f} (root {res.breakdown_root}) "
      f"after {len(res.traj)} samples")
