#!/usr/bin/env python3
"""Certification tables for the cone-over-line -> cone-over-circle quotient.

The integers act on the cone over a long line segment by shifting one
circumference at a time; the quotient map lands on the cone over the
circle.  Three numbers get tabulated per radius R:

  * the highest cone level met by the uniform-discontinuity region,
  * how far fibre scatter reaches downstairs (at most one mesh step
    beyond the image of the region),
  * the softness bound S(R) read back from the table.
"""

import numpy as np

from coarsekit import instances
from coarsekit.actions import (certify_scattered_fibres,
                               certify_soft_quotient,
                               certify_uniform_coarse_discontinuity,
                               min_displacement)


def main():
    cov = instances.circle_cover()
    C = min_displacement(cov.action)
    print(f"upstairs {cov.up.space.n} nodes, downstairs {cov.down.space.n},"
          f" deck generator '{cov.action.names[0]}'")
    print(f"minimal displacement C = {C:g}")
    print()

    radii = [1.0, 2.0, 4.0]
    softness = certify_soft_quotient(cov.pi, radii, action=cov.action)
    print(f"{'R':>4}  {'|K_R|':>6}  {'level<=':>8}  {'scatter':>8}  {'S(R)':>6}")
    for R in radii:
        K = certify_uniform_coarse_discontinuity(cov.action, R)
        members = K.members()
        level = float(cov.up.levels[members % cov.up.nlev].max())
        K_sc = certify_scattered_fibres(cov.pi, R, action=cov.action)
        image = np.unique(cov.pi.assignment[members])
        print(f"{R:>4g}  {members.size:>6}  {level:>8g}"
              f"  {K_sc.members().size:>8}  {softness.S_at(R):>6g}"
              f"   (image downstairs: {image.size} points)")

    # a fibre really is one deck orbit: push the basepoint fibre through
    # the generator and check it lands on itself
    perm = cov.action.generators[0]
    fibre = np.flatnonzero(cov.pi.assignment == cov.pi.assignment[0])
    moved = np.sort(perm[fibre])
    print()
    print(f"basepoint fibre size {fibre.size},"
          f" generator-invariant: {bool(np.array_equal(moved, np.sort(fibre)))}")


if __name__ == "__main__":
    main()
