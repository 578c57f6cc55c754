"""The three-station counterexample: quadratics fail, smoothing rescues.

For the model with R = [[1,-1,0],[0,1,-1],[0,0,1]], p = (0,0,1) and
abandonment rate alpha = 133, no common quadratic Lyapunov function exists
for the pair of drift branches: the product matrix has two real negative
eigenvalues.  Worse, every positive semidefinite quadratic has a ray along
which its generator drift is nonnegative.  The smoothed non-quadratic
function still certifies stability.
"""

import numpy as np

from oucert import cqlf, lyap, matkit, oumodel

R = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
p = np.array([0.0, 0.0, 1.0])
alpha = 133.0
params = oumodel.require_valid(oumodel.make_params(alpha, 0.0, R, p))

# 1. The spectral obstruction.  Both drift matrices are Hurwitz, yet their
# product has real negative eigenvalues -7 and 5 - sqrt(82), which rules
# out any common quadratic certificate.
e = np.ones(3)
B2 = -(R @ (np.eye(3) - np.outer(p, e)) + alpha * np.outer(p, e))
pair = cqlf.make_pair(-R, B2)
eigs = np.sort(matkit.eig_general(pair.B1 @ pair.B2).real)
print("product spectrum:", np.round(eigs, 9).tolist())
print("exact values:    ", [round(v, 9) for v in (-7.0, 5.0 - np.sqrt(82.0), 5.0 + np.sqrt(82.0))])
print("strong CQLF exists:", cqlf.strong_cqlf_exists(pair))

# 2. A dual witness certifies the non-existence independently of the
# spectral argument.
wit = cqlf.dual_witness(pair)
print("\ndual witness status:", wit.status)
if wit.status == "witness":
    print("  residual:", f"{wit.residual:.2e}")

# 3. Every PSD quadratic fails pointwise: there is a direction v with
# GL(tv) >= 0 along the whole ray.
rng = np.random.default_rng(0)
for label, Q in [("identity", np.eye(3)), ("random PSD", None)]:
    if Q is None:
        A = rng.standard_normal((3, 3))
        Q = A @ A.T
    w = lyap.quadratic_failure_witness(params, Q)
    print(f"\nquadratic failure for Q = {label}:")
    print("  witness direction v =", np.round(w.v, 6).tolist())
    print(f"  min GL(tv) over t in [0, 1e3]: {np.min(w.gl_values):.3e}  (>= 0)")

# 4. The smoothed function certifies stability anyway.
V = lyap.build_smoothed(params)
report = lyap.verify_drift(params, V, samples_per_shell=1024)
print(f"\nsmoothed verification: {report.verdict}, M = {report.M:g}, "
      f"fitted C = {report.fitted_C:.4g}, global fit c = {report.ergo_c:.3g}")
