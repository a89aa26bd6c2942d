"""How often each index is picked: WSS-3 revisits some indices many times, WSS-WR never does.

Also writes the two convergence traces as CSV files in the current directory.
"""

import numpy as np

from wsswr import KernelSpec, SolverParams
from wsswr.bench import CACHE_100M, FINAL, Setting, convergence_trace, run_matrix, selection_histogram
from wsswr.synthetic import sparse_binary

d = sparse_binary(1000, 60, 0.12, seed=7)
records = run_matrix({"binary": d}, [KernelSpec("rbf", 1.0 / d.n_features)],
                     settings=[Setting(CACHE_100M, True)], C=8.0, phase=FINAL, repeats=1)

for r in records:
    counts = selection_histogram(r)
    top = np.sort(counts)[::-1][:5]
    print(f"{r.selector:>6}: {r.iterations} iterations, never selected {np.sum(counts == 0)}/{counts.size}, "
          f"most selected {top.tolist()}")
    bins = np.bincount(np.minimum(counts, 10))
    print("        count:  " + " ".join(f"{k if k < 10 else '10+':>4}" for k in range(bins.size)))
    print("        indices:" + " ".join(f"{b:>4}" for b in bins))
    path = f"trace_{r.selector}.csv"
    convergence_trace(r, path)
    print(f"        objective trace -> {path} (final {r.objective:.4f})")
