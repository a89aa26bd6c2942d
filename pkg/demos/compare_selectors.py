"""Train WSS-1, WSS-3 and WSS-WR on the same synthetic problems and compare.

Run with ``python3 demos/compare_selectors.py``.
"""

from wsswr import KernelSpec, SolverParams, train
from wsswr.synthetic import gaussian_blobs, sparse_binary, uniform_problem

problems = {
    "blobs (l=600)": gaussian_blobs(600, 4, seed=1),
    "uniform (l=400)": uniform_problem(400, 3, seed=2),
    "binary (l=800)": sparse_binary(800, 50, 0.1, seed=3),
}

print(f"{'problem':<18}{'selector':<8}{'iters':>8}{'objective':>14}{'train acc':>11}{'SVs':>6}{'seconds':>9}")
for name, d in problems.items():
    spec = KernelSpec("rbf", 1.0 / d.n_features)
    for selector in ("wss1", "wss3", "wsswr"):
        m = train(d, spec, selector, SolverParams(C=4.0))
        diag = m.diagnostics
        acc = m.evaluate(d).accuracy
        print(f"{name:<18}{selector:<8}{diag.iterations:>8}{diag.objective:>14.4f}{acc:>11.2f}"
              f"{m.n_support:>6}{diag.seconds:>9.3f}")

# WSS-WR stops after at most ceil(l/2) pairs, each index used once, so it
# trades objective quality for a fixed, small amount of work.
