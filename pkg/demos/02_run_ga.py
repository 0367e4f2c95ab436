"""Run the GA on the 1D checkerboard with the standard settings.

Prints the best-fitness curve every ten generations and the size of the
evaluation archive that later feeds the surrogate.
"""
from gaxplain import GaConfig, run_ga
from gaxplain.problems import checkerboard_1d

problem = checkerboard_1d(100)
result = run_ga(problem, GaConfig(seed=0))

for gen in range(0, 100, 10):
    print(f"generation {gen:3d}  best {result.best_fitness_history[gen]:5.1f}")
print(f"final best {result.best.fitness:.0f} of {problem.max_fitness:.0f}")
print("best genome", "".join(map(str, result.best.genome)))
print("archive rows", len(result.archive))
