"""How far a finite piston sensor departs from the cosine law.

Tabulates the worst-case deviation of the piston pattern from cos(theta)
at a few frequencies and lists the side-lobe zeros at 3 MHz.

    python demos/04_radiation_pattern.py
"""
import math

import numpy as np

from aecal.physics import TITANIUM
from aecal.radiation import compare_cosine, lobe_zeros, pattern

theta = np.linspace(0, math.radians(89), 400)
freqs = [1e5, 4e5, 7e5, 1e6]
for f, dev in zip(freqs, compare_cosine(freqs, theta)):
    print(f"{f / 1e3:6.0f} kHz: max |pattern - cos| = {dev:.3f}")

print("\nangle (deg)  pattern at 400 kHz  cos")
for deg in (0, 20, 40, 60, 80):
    t = math.radians(deg)
    print(f"{deg:11d}  {float(pattern(t, 4e5)[0]):18.4f}  {math.cos(t):.4f}")

zeros = lobe_zeros(3e6)
k = 2 * math.pi * 3e6 / TITANIUM.vp
print("\nzeros at 3 MHz (deg):", np.round(np.degrees(zeros), 3))
print("k R sin(theta) there: ", np.round(k * 5e-3 * np.sin(zeros), 6))
