#!/usr/bin/env python3
"""Two repair tools: slow a map down, and pin a homotopy's boundary.

Part one takes a map whose Lipschitz constant grows level by level
(L_K = K) and precomposes a reparametrization of the ray so that the
composite is 1-Lipschitz everywhere.  Part two takes a homotopy whose
time-slices drift off the target ray and pastes four pieces so the new
boundary is constant without touching the relative part.
"""

from coarsekit import instances
from coarsekit.homotopies import (boundary_fix, boundary_fix_report,
                                  lipschitz_scan)


def main():
    print("-- reparametrize to 1-Lipschitz --")
    rp = instances.reparametrization_instance(step=0.5, value_step=1 / 128,
                                              levels=6)
    prof = rp["profile"]
    print(f"level constants: {[prof.at(k) for k in prof.levels]}")
    knots = rp["reparametrization"].knots
    print(f"reparametrization knots: x = {[round(x, 3) for x in knots[0]]}")
    print(f"                         y = {list(knots[1])}")
    print(f"certificate: {rp['certificate'].verdict}, worst segment product"
          f" {rp['certificate'].parameters['worst_product']:g}")
    sup, witness = lipschitz_scan(rp["fg"], sample_count=4096, seed=0)
    print(f"composite f(g(.)) sampled Lipschitz sup: {sup:.4f}"
          f" (witness pair {witness})")

    print("\n-- pin a drifting boundary --")
    H = instances.boundary_fix_instance(x_max=12.0, step=0.5,
                                        value_step=0.25)
    fixed = boundary_fix(H)
    audit = boundary_fix_report(H, fixed)
    print(f"{'seam':>14}  exact")
    for row in audit["seams"]:
        print(f"{row['seam']:>14}  {row['exact']}")
    print(f"boundary now constant in s: {audit['boundary_constant_in_s']}")
    print(f"boundary sits on the required ray: {audit['boundary_value_is_b']}")


if __name__ == "__main__":
    main()
