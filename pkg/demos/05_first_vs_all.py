"""Contrast a surrogate trained on generation 0 with one trained on every generation.

Uses the experiment harness, which writes per-run CSV reports and bar charts
of the mean importance to ``demo_output/``.
"""
from gaxplain.explain import sign_alternation_rate
from gaxplain.harness import ExperimentConfig, run_experiment

cfg = ExperimentConfig(problem="checkerboard1d", seed=0, repeats=2,
                       train=("first", "all"), out="demo_output")
out = run_experiment(cfg)

for s in out.summary:
    rate = sign_alternation_rate(out.reports[(s.run, s.train)].importance)
    print(f"run {s.run} seed {s.seed} {s.train:5s} rows {s.train_rows:5d} "
          f"probe fitness {s.probe_seed_fitness:4.0f} alternation {rate:.3f}")
print("files:", ", ".join(sorted(p.name for p in out.files)))
