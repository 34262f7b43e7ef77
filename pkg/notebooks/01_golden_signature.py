"""Golden signatures of the bundled evaluation board.

Each population of the board gets a simulated |S11| trace. The lowest |Z|
minimum of that trace fixes a +/-5 % comparison band; the bare board is
compared over the whole sweep instead.

Run with ``python notebooks/01_golden_signature.py``.
"""
import tempfile
from pathlib import Path

import numpy as np

from pdnverify import build_golden, evaluation_board, find_resonances, resolve_band
from pdnverify.sparams import load_trace, magnitude, save_trace

board = evaluation_board()
grid = board.sweep
print(f"board {board.name!r}: probing {board.default_pdn}, {grid.points} {grid.spacing} points "
      f"from {grid.f_start / 1e6:g} MHz to {grid.f_stop / 1e6:g} MHz\n")

# %% one golden per population
goldens = {}
for name in board.configs:
    model = board.model_for(config=name)
    goldens[name] = build_golden(model, grid, board.z0, name)

print(f"{'population':<10} {'parts':>5}  {'lowest |Z| min':>15}  {'band':>26}  {'dB span':>8}")
for name, g in goldens.items():
    parts = len(board.configs[name])
    band = resolve_band(g)
    res = find_resonances(g)
    low = f"{res[0].frequency / 1e6:10.2f} MHz" if res else "none"
    db = magnitude(g.subset(band.contains(g.frequencies)), "decibel")
    print(f"{name:<10} {parts:>5}  {low:>15}  {str(band):>26}  {np.ptp(db):7.1f}")

# %% the band rule on its own: 10 % total width, centred on the resonance
band = resolve_band(goldens["5caps"])
print(f"\n5caps band width / centre = {band.width / band.center:.3f}")

# %% goldens survive a Touchstone round trip, metadata included
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "2caps.s1p"
    save_trace(goldens["2caps"], path, "DB", "MHZ")
    back = load_trace(path)
    print(f"round trip: max |ds11| = {np.max(np.abs(back.s11 - goldens['2caps'].s11)):.1e}, "
          f"band {resolve_band(back)} (was {resolve_band(goldens['2caps'])})")
    print("file header:")
    for line in path.read_text().splitlines()[:5]:
        print("   ", line)
