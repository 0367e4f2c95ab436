"""Tour of the four benchmark problems.

Each problem is built, evaluated at a few hand-picked points and at a random
solution, so the scale of each fitness landscape is visible at a glance.
"""
import numpy as np

from gaxplain import RngStream, random_bitstring
from gaxplain.problems import checkerboard_1d, checkerboard_2d, generate_random_3sat, maxsat, trap5, write_dimacs

rng = RngStream(1)
formula = generate_random_3sat(RngStream(0), 100, 427)
problems = [checkerboard_1d(100), checkerboard_2d(100), trap5(100), maxsat(formula)]

print(f"{'problem':16s} {'zeros':>7s} {'ones':>7s} {'random':>7s} {'max':>7s}")
for p in problems:
    zeros, ones = np.zeros(p.n, np.uint8), np.ones(p.n, np.uint8)
    r = random_bitstring(rng, p.n)
    # the MAXSAT optimum is unknown, so only the clause count is an upper bound
    top = p.max_fitness if p.max_fitness is not None else len(formula)
    print(f"{p.name:16s} {p.evaluate(zeros):7.0f} {p.evaluate(ones):7.0f} {p.evaluate(r):7.0f} {top:7.0f}")

# the 1D optimum is an alternating string, either phase
print("\n0101... scores", checkerboard_1d(100).evaluate(np.arange(100) % 2))

# trap blocks are deceptive: one 1 is worse than none
print("trap5 on one block of 0..5 ones:",
      [trap5(5).evaluate(np.r_[np.ones(u), np.zeros(5 - u)]) for u in range(6)])

print("\nfirst lines of the default MAXSAT instance:")
print("\n".join(write_dimacs(formula).splitlines()[:4]))
