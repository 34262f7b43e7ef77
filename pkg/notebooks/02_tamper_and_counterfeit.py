"""Scoring genuine, tampered and counterfeit boards against one golden.

A "measured" board is emulated by perturbing every part within tolerance,
shifting the sweep slightly and adding magnitude noise. Tampering removes or
adds a part; a counterfeit keeps the population but swaps parts for ones with
ten times the ESL and 1.3 times the ESR.

Run with ``python notebooks/02_tamper_and_counterfeit.py``.
"""
import numpy as np

from pdnverify import (AddComponent, ComponentSpec, RemoveComponent, VariationSpec, apply_counterfeit,
                       apply_tamper, average_traces, build_golden, compare, evaluation_board,
                       suggest_threshold, synthesize_measurement, verify)

board = evaluation_board()
grid = board.sweep
model = board.model_for(config="7caps")
golden = build_golden(model, grid, board.z0, "7caps")

# %% the same population measured on a handful of boards
genuine = [compare(golden, synthesize_measurement(model, grid, board.z0, VariationSpec(seed=s))).score
           for s in range(8)]
print("genuine scores:", np.round(genuine, 2))

# %% three kinds of tampering, each on its own freshly varied board
suspects = {
    "C23 removed": apply_tamper(model, RemoveComponent("C23")),
    "extra 1 uF part": apply_tamper(model, AddComponent(ComponentSpec("C99", "1V8", 1e-6, 0.01, 0.6e-9))),
    "counterfeit parts": apply_counterfeit(model, [c.id for c in model.components]),
}
tampered = {}
for k, (label, m) in enumerate(suspects.items()):
    trace = synthesize_measurement(m, grid, board.z0, VariationSpec(seed=(100, k)))
    tampered[label] = compare(golden, trace).score

# %% a threshold between the two populations, then verdicts
threshold = suggest_threshold(genuine, list(tampered.values()))
print(f"suggested threshold: {threshold:.3g}\n")
for k, (label, m) in enumerate([("genuine", model)] + list(suspects.items())):
    trace = synthesize_measurement(m, grid, board.z0, VariationSpec(seed=(200, k)))
    v = verify(golden, trace, threshold)
    print(f"{label:<18} score {v.dtw_score:8.3g}  -> {v.decision}")

# %% averaging repeated sweeps of one board removes sweep noise, not part tolerance
clean = synthesize_measurement(model, grid, board.z0, VariationSpec(noise_db=0.0, seed=7))
rng = np.random.default_rng(7)
sweeps = [clean.with_s11(clean.s11 * 10 ** (rng.normal(0, 0.1, len(clean)) / 20)) for _ in range(4)]
mean = average_traces(sweeps)
print(f"\nagainst the same board without noise: one sweep {compare(clean, sweeps[0]).score:.3g}, "
      f"mean of four {compare(clean, mean).score:.3g}")
print(f"against the golden:                   one sweep {compare(golden, sweeps[0]).score:.3g}, "
      f"mean of four {compare(golden, mean).score:.3g}")
