"""Reference computations that share no code with the package's QR path."""
from collections import defaultdict

import numpy as np


def cell_table(dataset):
    cells = defaultdict(list)
    for o in dataset.included:
        cells[(o.treatment, o.batch)].append(o.outcome)
    return cells


def balanced_two_way_ss(dataset):
    """Classical balanced two-way ANOVA sums of squares from cell means."""
    cells = cell_table(dataset)
    treatments = sorted({k[0] for k in cells})
    batches = sorted({k[1] for k in cells})
    r = len(next(iter(cells.values())))
    assert all(len(v) == r for v in cells.values())
    t, b = len(treatments), len(batches)
    m = np.array([[np.mean(cells[(tr, bt)]) for bt in batches] for tr in treatments])
    grand = m.mean()
    tmeans = m.mean(axis=1)
    bmeans = m.mean(axis=0)
    ss_batch = r * t * np.sum((bmeans - grand) ** 2)
    ss_trt = r * b * np.sum((tmeans - grand) ** 2)
    ss_int = r * np.sum((m - tmeans[:, None] - bmeans[None, :] + grand) ** 2)
    ss_err = sum(np.sum((np.asarray(v) - np.mean(v)) ** 2) for v in cells.values())
    return {"batch": ss_batch, "treatment": ss_trt, "interaction": ss_int, "error": ss_err}


def cell_mean_residual_ss(dataset):
    return sum(np.sum((np.asarray(v) - np.mean(v)) ** 2) for v in cell_table(dataset).values())
