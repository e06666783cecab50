#!/usr/bin/env python3
"""The local polytope boundary, seen from both sides.

For binary no-signalling behaviors, a joint distribution of all four
variables exists exactly when every CHSH combination stays within 2.
This script slides from a local behavior toward the singlet behavior
and watches the linear program and the inequality test flip verdicts at
the same interpolation point.
"""

from fractions import Fraction

from lhvlab import (
    AngleSet,
    BehaviorTable,
    chsh_values,
    find_joint,
    fine_criterion,
    quantum_singlet_behavior,
)

quantum = quantum_singlet_behavior(AngleSet.chsh_optimal())
report = chsh_values(quantum.quad())
print(f"Singlet behavior at optimal angles: max |S| = {float(report.max_abs):.12f}")
result = find_joint(quantum)
print(f"Joint distribution exists: {result.feasible}")
cert = result.certificate
print(f"Certificate: flip {cert.flipped}, sign {cert.sign:+d}, S = {float(cert.value):.12f}\n")

# interpolate toward white noise: t * quantum + (1 - t) * uniform
uniform_cell = {(x, y): Fraction(1, 4) for x in (-1, 1) for y in (-1, 1)}
print(" t      max|S|    criterion  LP feasible")
for k in range(0, 11):
    t = Fraction(k, 10)
    probs = {
        ctx: {
            cell: t * quantum.prob(ctx, *cell) + (1 - t) * uniform_cell[cell]
            for cell in uniform_cell
        }
        for ctx in quantum.contexts()
    }
    mixed = BehaviorTable(quantum.alice_settings, quantum.bob_settings, (-1, 1), probs)
    s = chsh_values(mixed.quad()).max_abs
    crit = fine_criterion(mixed)
    feasible = find_joint(mixed).feasible
    marker = "" if crit == feasible else "  <-- MISMATCH (bug!)"
    print(f"{float(t):4.1f}   {float(s):8.5f}   {str(crit):5}      {str(feasible):5}{marker}")
    assert crit == feasible

print("\nVerdicts agree at every mixing weight; the flip happens at |S| = 2,")
print(f"i.e. t = 2 / (2*sqrt(2)) ~ {2 / float(report.max_abs):.4f}.")
