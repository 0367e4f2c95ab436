"""Probe a surrogate around the best solution and read off the structure.

On the 1D checkerboard a well-trained model should show importance signs that
alternate from one variable to the next.
"""
import numpy as np

from gaxplain import GaConfig, probe_solution, run_ga, train_svr
from gaxplain.explain import rank_variables, sign_alternation_rate
from gaxplain.problems import checkerboard_1d

problem = checkerboard_1d(100)
res = run_ga(problem, GaConfig(seed=2))
model = train_svr(*res.archive.training_view(0, 99))
vec = probe_solution(res.best.genome, model)

signs = "".join("+" if v > 0 else "-" if v < 0 else "0" for v in vec.values)
print("seed      ", "".join(map(str, vec.seed)))
print("signs     ", signs)
print(f"alternation rate {sign_alternation_rate(vec.values):.3f}")
print("most influential variables:", [i for i, _ in rank_variables(vec.values)[:8]])

# compare against probing the true fitness function itself
truth = probe_solution(res.best.genome, problem.fitness_function())
print(f"sign agreement with true-fitness probe {np.mean(np.sign(truth.values) == np.sign(vec.values)):.2f}")
