"""Regenerates cwt_reference.json from scipy's find_peaks_cwt.

Run from this directory: python3 gen_cwt_reference.py
"""
import json

import numpy as np
from scipy.signal import find_peaks_cwt

rng = np.random.default_rng(20240611)
cases = []


def add(x, widths):
    x = np.asarray(x, dtype=float)
    peaks = find_peaks_cwt(x, np.asarray(widths))
    cases.append({"x": x.tolist(), "widths": list(widths), "peaks": [int(p) for p in peaks]})


for _ in range(1000):
    n = int(rng.integers(1, 65))
    add(rng.random(n), range(1, 6))
for n in (1, 2, 3, 5, 10, 30, 64):
    add(np.full(n, 0.5), range(1, 6))
for n in (5, 10, 21):
    spike = np.zeros(n)
    spike[n // 2] = 1.0
    add(spike, [1, 2])
    add(spike, range(1, 6))
for _ in range(50):
    n = int(rng.integers(8, 65))
    add(np.sin(np.linspace(0, rng.uniform(2, 12), n)) + 0.1 * rng.random(n), range(1, 6))

with open("cwt_reference.json", "w") as f:
    json.dump({"generator": "scipy.signal.find_peaks_cwt", "cases": cases}, f)
