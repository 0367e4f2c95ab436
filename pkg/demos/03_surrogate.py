"""Fit the SVR surrogate to a GA archive and check how well it tracks fitness.

The model is trained on the archive of a short GA run and scored on fresh
random solutions and on mutants of the best solution found.
"""
import numpy as np

from gaxplain import GaConfig, RngStream, random_bitstring, run_ga, train_svr
from gaxplain.ga import bitflip_mutate
from gaxplain.problems import trap5

problem = trap5(50)
res = run_ga(problem, GaConfig(pop_size=60, genome_length=50, max_generations=30, seed=3))
X, y = res.archive.training_view(0, 29)
model = train_svr(X, y)
print(f"trained on {len(y)} rows: {model.n_support} support vectors, "
      f"converged={model.converged} after {model.n_iter} updates")

rng = RngStream(99)
fresh = np.array([random_bitstring(rng, 50) for _ in range(200)])
near = np.array([bitflip_mutate(res.best.genome, 0.05, rng) for _ in range(200)])
for name, pts in [("random", fresh), ("near best", near)]:
    truth = np.array([problem.evaluate(x) for x in pts])
    pred = model.predict(pts)
    print(f"{name:10s} mean |error| {np.abs(pred - truth).mean():5.2f}   corr {np.corrcoef(pred, truth)[0, 1]:.2f}")
