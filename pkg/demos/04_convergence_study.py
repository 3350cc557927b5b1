"""Accuracy against cost: RK45 tracks its tolerance, factorization does not need one.

Equivalent to ``spinrs compare demos/configs/hermitian_n2.json``.
"""

from pathlib import Path

from spinrs.cli import cmd_compare
from spinrs.config import RunConfig

cfg = RunConfig.load(Path(__file__).parent / "configs" / "hermitian_n2.json")
table = cmd_compare(cfg, [1e-5, 1e-7, 1e-9, 1e-11])
rk = [r for r in table["rows"] if r["solver"] == "rk45"]
fact = next(r for r in table["rows"] if r["solver"] != "rk45")
print(f"\nRK45 error falls from {rk[0]['sup_error']:.1e} to {rk[-1]['sup_error']:.1e}; "
      f"the factorization error sits at {fact['sup_error']:.1e} for every row.")
