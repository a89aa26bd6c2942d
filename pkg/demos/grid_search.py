"""Cross-validated parameter search with both selectors on a small synthetic set.

Uses the 16-point reduced RBF grid so it finishes in well under a minute.
"""

from wsswr.synthetic import gaussian_blobs
from wsswr.tune import default_grid, grid_search, reduced_grid

d = gaussian_blobs(150, 3, seed=5, separation=1.5)
grid = reduced_grid(default_grid("rbf"))

for selector in ("wss3", "wsswr"):
    res = grid_search(d, grid, selector, k=5, seed=0)
    b = res.best
    print(f"{selector}: best log2C={b.log2_c:g} log2gamma={b.log2_gamma:g} accuracy={b.accuracy:.2f}% "
          f"total iterations={res.total_iterations} seconds={res.total_seconds:.2f}")
    for r in sorted(res.rows, key=lambda r: -r.accuracy)[:3]:
        print(f"    log2C={r.log2_c:>5g} log2gamma={r.log2_gamma:>6g} acc={r.accuracy:6.2f} iters={r.iterations}")
