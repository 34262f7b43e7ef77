"""Cross table of every population against every golden.

Row i is a board built as population i, column j is scored against golden j
inside golden j's band. A usable signature puts each row's smallest score on
the diagonal; the margin factor eta says by how much a row misses that.

Run with ``python notebooks/03_cross_table.py`` (about half a minute).
"""
import numpy as np

from pdnverify import VariationSpec, evaluation_board, margin_factor, run_experiment_suite

board = evaluation_board()
base, configs = board.bare_model(), board.configurations()
names = [c.name for c in configs]

results = [run_experiment_suite(base, configs, VariationSpec(seed=s), grid=board.sweep, z0=board.z0,
                                counterfeit=(10.0, 1.3))
           for s in range(5)]
mean = np.mean([r.table for r in results], axis=0)

# %% mean table over five boards per population
print(" " * 8 + "".join(f"{n:>9}" for n in names))
for n, row in zip(names, mean):
    print(f"{n:<8}" + "".join(f"{x:9.3g}" for x in row))

# %% per-row statistics
print(f"\n{'row':<8}{'diag min':>10}{'median ratio':>14}{'eta (mean)':>12}")
dominant = np.mean([r.diagonal_is_row_minimum() for r in results], axis=0)
ratios = np.median([r.separation_ratios() for r in results], axis=0)
for i, n in enumerate(names):
    eta = margin_factor(mean[i, i], mean[i]).eta
    print(f"{n:<8}{dominant[i]:>10.0%}{ratios[i]:>14.3g}{eta:>12.3g}")

# %% counterfeit builds against their own golden
# the bare population has no parts to fake, hence the [1:]
fake = np.mean([r.counterfeit[1:] for r in results], axis=0)
diag = np.mean([r.diagonal[1:] for r in results], axis=0)
print("\ncounterfeit / genuine score:")
for n, f, d in zip(names[1:], fake, diag):
    print(f"  {n:<7} {f:8.3g} / {d:6.3g} = {f / d:6.1f}x")

# %% the peer-rail part C30 only shows up through coupling: small but nonzero
two, three = names.index("2caps"), names.index("3caps")
col = mean[:, two]
print(f"\nagainst the 2caps golden: 2caps boards {col[two]:.3g}, 3caps boards {col[three]:.3g}, "
      f"boards with more 1V8 parts {col[three + 1:].min():.3g} or more")
