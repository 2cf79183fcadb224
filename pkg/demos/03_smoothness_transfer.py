"""Smoothness transfer: array-vs-frozen gaps halve when N doubles.

Three gap families are measured at matched rescaled time u = 1/2 for
N in {100, 200, 400}: the innovation variance of the autoregressive
representation, the lag-0 inverse covariance block, and the lag-0
partial covariance of a component pair.  All three scale like 1/N and
their envelope constants stay put.

Run: python demos/03_smoothness_transfer.py
"""

import nonstatcov as nc

ma_model = nc.get_reference_model("tvvma_kappa4_p2")
var_model = nc.get_reference_model("tvvar1_p3")

print("          sigma gap      D gap (lag 0)  Delta gap (lag 0)")
gaps = {}
for n in (100, 200, 400):
    t = n // 2
    s = nc.var_smoothness_gap(ma_model, n, t, order=10).sigma_gap
    irep = nc.inverse_smoothness_gap(ma_model, n, t - 3, t + 3)
    d = max(m for (a, b), m in zip(irep.indices, irep.measured) if a == b)
    prep = nc.partial_smoothness_gap(var_model, n, 0, 1, t - 2, t + 2, kappa=4.0)
    pd = max(m for (a, b), m in zip(prep.pair_gaps.indices,
                                    prep.pair_gaps.measured) if a == b)
    gaps[n] = (s, d, pd)
    print(f"N = {n:4d}: {s:.6e}  {d:.6e}   {pd:.6e}")

print("\nratios as N doubles (expect about 2):")
for n1, n2 in ((100, 200), (200, 400)):
    r = [gaps[n1][k] / gaps[n2][k] for k in range(3)]
    print(f"  {n1} -> {n2}: sigma {r[0]:.3f}   inverse {r[1]:.3f}   "
          f"partial {r[2]:.3f}")

print("\nLipschitz transfer of the frozen inverse in rescaled time")
for (u, v) in ((0.40, 0.50), (0.40, 0.60)):
    rep = nc.inverse_lipschitz_gap(ma_model, u, v, max_lag=6)
    print(f"  |u-v| = {abs(u - v):.2f}: max ||D_r(u) - D_r(v)|| = "
          f"{rep.max_measured:.5e}")
