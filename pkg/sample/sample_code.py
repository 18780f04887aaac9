#!/usr/bin/env python3

"""
SAMPLE CODE

To run:

$ sample/sample_code.py

"""

from typing import Any, List, Dict

import numpy as np

from isurv import (
    SyntheticSpec,
    ModelConfig,
    TrainedModel,
    SurvivalCurve,
    make_dataset,
    build_grid,
    make_labels,
    train,
    predict_survival,
    model_interval_survival,
    expected_times,
    beran_curves,
    c_index,
)

# Specify a synthetic dataset and a model

spec: SyntheticSpec = SyntheticSpec(kind="Friedman1", n_train=200, n_test=100, d=5, seed=0)
config: ModelConfig = ModelConfig(variant="isurvj", epochs=100, seed=0)

### DATA ###

train_set, test_set = make_dataset(spec)

grid = build_grid(train_set.times, train_set.events)
labels = make_labels(grid, train_set.times, train_set.events)

### TRAIN ###

model: TrainedModel = train(train_set, grid, labels, config)

print()
print(f"Trained {config.variant.value} on {model.N} instances, {grid.T} intervals")
print(f"Loss: {model.initial_loss:.4f} -> {model.final_loss:.4f}")

### PREDICT ###

# Precise curve and its credal envelopes for the first test instance

x0: np.ndarray = test_set.features[0]
curve: SurvivalCurve = predict_survival(model, x0)
lower, upper = model_interval_survival(model, x0)

for t, s_lo, s, s_hi in zip(curve.times[:10], lower.values[:10], curve.values[:10], upper.values[:10]):
    print(f"t={t:8.3f}  {s_lo:.3f} <= {s:.3f} <= {s_hi:.3f}")

### COMPARE WITH BERAN ###

ours: float = c_index(expected_times(model, test_set.features), test_set.times, test_set.events)
beran: List[SurvivalCurve] = beran_curves(train_set, test_set.features, tau=0.1)
theirs: float = c_index(np.array([c.integral() for c in beran]), test_set.times, test_set.events)

summary: Dict[str, Any] = {"isurvj": ours, "beran": theirs}
print()
print(f"C-index:")
for name in summary:
    print(f"{name}: {summary[name]:.4f}")
print()

### END ###
