#!/usr/bin/env python3
"""Read off winding numbers by lifting loops, circle and torus versions.

Each loop downstairs lifts to a path upstairs; the deck element carrying
the start ray to the end ray is the loop's class.  The table compares the
lifting answer with an independent fibre-tracking oracle, then checks the
assignment is a homomorphism on concatenations.
"""

from coarsekit import instances, oracle
from coarsekit.actions import GroupElement
from coarsekit.lifting import verify_ses_instance


def run(cov, cert, windings, horizon, pairs):
    loops = {}
    for w in windings:
        label = f"w{w}" if isinstance(w, int) else "w({},{})".format(*w)
        expected = GroupElement((w,) if isinstance(w, int) else w)
        loops[label] = (instances.winding_loop(cov, w, x_max=8.0), expected)
    rep = verify_ses_instance(cov.action, cov.pi, cert, cov.b_prime, loops,
                              horizon=horizon, homomorphism_pairs=pairs)

    print(f"{'loop':>8}  {'lifted':>8}  {'oracle':>8}  ok")
    for label, (loop, _) in loops.items():
        got = rep["loops"][label]["g"]
        ora = oracle.classify_windings(loop)
        mark = "yes" if (rep["loops"][label]["matches_expected"]
                         and tuple(got) == ora) else "NO"
        print(f"{label:>8}  {str(tuple(got)):>8}  {str(ora):>8}  {mark}")

    if rep["homomorphism"]:
        bad = [h for h in rep["homomorphism"] if not h["ok"]]
        print(f"homomorphism on {len(rep['homomorphism'])} concatenated"
              f" pairs: {'all ok' if not bad else bad}")
    for k in rep["kernel"]:
        eq = k["terminal_equals_base"]["equivalent"]
        print(f"kernel witness {k['loop']}: terminal ray returns to base"
              f" ({eq})")


def main():
    print("== circle cover, deck group Z ==")
    cov = instances.circle_cover()
    cert = cov.certificate(R_grid=(1.0, 2.0, 4.0, 8.0, 12.0))
    run(cov, cert, [-2, -1, 0, 1, 2], horizon=8.0, pairs=True)

    print("\n== torus cover, deck group Z^2 ==")
    tcov = instances.torus_cover()
    tcert = tcov.certificate(R_grid=(1.0, 2.0, 4.0))
    run(tcov, tcert, [(1, 0), (0, 1), (1, 1)], horizon=8.0, pairs=False)


if __name__ == "__main__":
    main()
