"""Freezes scipy.signal.find_peaks output for the peak engine tests.

Signals are continuous random values, so heights never tie and the distance
rule has a single answer. Run from this directory:

    python3 make_scipy_peaks.py > scipy_peaks.json
"""
import json

import numpy as np
import scipy
from scipy.signal import find_peaks

rng = np.random.default_rng(1234)
cases = []
for k in range(40):
    n = int(rng.integers(10, 1500))
    kind = k % 4
    if kind == 0:
        x = rng.random(n)
    elif kind == 1:
        x = np.cumsum(rng.normal(size=n))
    elif kind == 2:
        t = np.arange(n)
        x = np.sin(t * rng.uniform(0.01, 0.1)) + 0.2 * rng.normal(size=n)
    else:
        x = 0.7 + 0.003 * rng.normal(size=n)
        for start in range(0, n, int(rng.integers(40, 200))):
            half = int(rng.integers(4, 30))
            k_ = np.arange(min(2 * half, n - start))
            x[start:start + len(k_)] += rng.uniform(0.05, 0.3) * 0.5 * (1 - np.cos(np.pi * k_ / half))
    params = {
        "distance": int(rng.integers(1, 60)),
        "prominence": float(rng.uniform(0, 0.3) * (x.max() - x.min())),
        "width_min": float(rng.uniform(0, 8)),
        "width_max": None if k % 3 else float(rng.uniform(10, 200)),
        "rel_height": float(rng.choice([0.5, 1.0, rng.uniform(0.05, 1.0)])),
    }
    width = (params["width_min"], params["width_max"])
    peaks, props = find_peaks(x, distance=params["distance"], prominence=params["prominence"],
                              width=width, rel_height=params["rel_height"])
    cases.append({
        "signal": [float(v) for v in x],
        "params": params,
        "peaks": [int(p) for p in peaks],
        "prominences": [float(v) for v in props["prominences"]],
        "left_bases": [int(v) for v in props["left_bases"]],
        "right_bases": [int(v) for v in props["right_bases"]],
        "widths": [float(v) for v in props["widths"]],
        "width_heights": [float(v) for v in props["width_heights"]],
        "left_ips": [float(v) for v in props["left_ips"]],
        "right_ips": [float(v) for v in props["right_ips"]],
    })

json.dump({"scipy_version": scipy.__version__, "cases": cases}, __import__("sys").stdout, separators=(",", ":"))
