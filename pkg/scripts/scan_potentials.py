#!/usr/bin/env python3
"""Parameter scan that fixed the shipped potential files.

The chain analysis never prescribes functional forms, only sign conditions,
so the shipped materials are tuned here and their parameters frozen into
src/eamchain/data/.  Two regimes are needed:

1. default-eam: smallest (c0, c1) on a coarse grid (lexicographic in
   c0 + c1, then c0) such that, with the Morse(alpha=4) pair and
   expdecay(beta=3) density, the a1 and a2 conditions hold across the whole
   scan window, the embedding slope G' stays negative there (the physical
   EAM shape for tensile strains), c0 > 0 so the embedding curvature is
   active, and the continuum modulus A_F changes sign inside the window's
   upper half (so critical-strain experiments have a bracket).

2. reversal-eam: smallest (c0, c1) violating a2 while satisfying a1 and the
   strict a3 inequality across the window, with A_F > 0 throughout (the
   regime where the fully local chain is the more stable one).

Note the window cannot extend past F ~ 1.173: the Morse(alpha=4) pair has
phi''(F) = 0 at F = 1 + ln(2)/4, so a1 itself fails beyond that regardless
of embedding parameters.  The scan window [0.95, 1.15] is therefore the
documented stable range.

Run from the repo root after an editable install:

    python3 scripts/scan_potentials.py
"""

from __future__ import annotations

import numpy as np

from eamchain.potentials import (
    EAMPotential,
    check_assumptions,
    expdecay_density,
    morse_pair,
    quadratic_embedding,
)
from eamchain.stability import coefficients

F_WINDOW = np.round(np.arange(0.95, 1.1501, 0.005), 10)
ALPHA = 4.0
BETA = 3.0
C0_GRID = np.round(np.arange(0.05, 1.0001, 0.05), 10)
C1_GRID = np.round(np.arange(0.25, 4.0001, 0.25), 10)


def make(c0: float, c1: float) -> EAMPotential:
    return EAMPotential(
        pair=morse_pair(ALPHA),
        density=expdecay_density(BETA),
        embedding=quadratic_embedding(c0, c1),
        name=f"scan(c0={c0:g},c1={c1:g})",
    )


def window_reports(p: EAMPotential):
    return [check_assumptions(p, f) for f in F_WINDOW]


def default_candidate(c0: float, c1: float) -> bool:
    p = make(c0, c1)
    reps = window_reports(p)
    if not all(r.a1_holds and r.a2_holds for r in reps):
        return False
    if not all(r.raw["G_d"] < 0 for r in reps):
        return False
    a_vals = [coefficients(p, f).A for f in F_WINDOW]
    return a_vals[0] > 0 and a_vals[-1] < 0


def reversal_candidate(c0: float, c1: float) -> bool:
    p = make(c0, c1)
    reps = window_reports(p)
    if not all(r.a1_holds and r.a3_holds and not r.a2_holds for r in reps):
        return False
    a_vals = [coefficients(p, f).A for f in F_WINDOW]
    return min(a_vals) > 0


def scan(predicate) -> tuple[float, float] | None:
    hits = [
        (c0 + c1, c0, c1)
        for c0 in C0_GRID
        for c1 in C1_GRID
        if predicate(c0, c1)
    ]
    if not hits:
        return None
    _, c0, c1 = min(hits)
    return c0, c1

def main() -> None:
    best_default = scan(default_candidate)
    best_reversal = scan(reversal_candidate)
    print(f"window F in [{F_WINDOW[0]}, {F_WINDOW[-1]}]")
    print(f"default-eam : c0={best_default[0]:g}, c1={best_default[1]:g}" if best_default else "default-eam : no hit")
    print(f"reversal-eam: c0={best_reversal[0]:g}, c1={best_reversal[1]:g}" if best_reversal else "reversal-eam: no hit")
    if best_default:
        p = make(*best_default)
        a_vals = [(f, coefficients(p, f).A) for f in F_WINDOW]
        crossing = [f for f, a in a_vals if a < 0]
        print(f"default-eam A_F crosses zero before F={crossing[0]:g}" if crossing else "")


if __name__ == "__main__":
    main()
