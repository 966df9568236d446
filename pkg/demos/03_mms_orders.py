"""
Manufactured solutions
======================

Force both solvers with the exact pair u* = psi* = t x (1 - x) and measure
the observed order on grids n, 2n, 4n.
"""

from oceanlayer import harness

cfg = harness.resolve_config()
result = harness.run_mms(cfg)
print(f"exact solution: {result['exact']}, eps = {cfg['mms']['eps']}")
for row in result["rows"]:
    print(
        f"  {row['solver']:>8s}: errors {row['error_n']:.2e} {row['error_2n']:.2e} {row['error_4n']:.2e}"
        f"  Richardson order {row['richardson_order']:.2f}  ({row['status']})"
    )
