"""Forward model walk-through: from a bouncing ball to recorded counts.

Prints the Hertz contact numbers for each bounce, the bounce intervals and
the sensor response at a few frequencies, then synthesizes the three
windows seen by sensor 16.

    python demos/01_forward_model.py
"""
import numpy as np

from aecal.physics import (
    STEEL, TITANIUM, BounceParams, SensorResponseParams, WaveformModel, bounce_intervals,
    cylinder_layout, hertz_contact, modeled_arrivals, phase_delay, sensor_response_spectrum,
)

bounce = BounceParams(v0=1.31, a=0.61, n=3)
print("bounce  speed (m/s)  f_max (N)  t_c (us)")
for k in range(bounce.n):
    v = bounce.v0 * bounce.a ** k
    f, tc = hertz_contact(STEEL, TITANIUM, 3.18e-3, v)
    print(f"{k + 1:6d}  {v:11.4f}  {f:9.2f}  {tc * 1e6:8.3f}")

iv = bounce_intervals(bounce)
print("\nintervals (s):", np.round(iv, 6), " ratio:", iv[1] / iv[0])

resp = SensorResponseParams(omega_s=350.0, epsilon=20.0, c_gain=1.0)
freqs = np.array([10e3, 100e3, 350e3, 1e6, 10e6])
amp = np.abs(sensor_response_spectrum(2 * np.pi * freqs, resp))
ph = phase_delay(2 * np.pi * freqs, resp)
print("\nfrequency (kHz)  |R|/C     phase (rad)")
for f, a, p in zip(freqs, amp, ph):
    print(f"{f / 1e3:15.0f}  {a:8.4f}  {p:10.4f}")

geom = cylinder_layout()
idx = geom.index_of(16)
arrivals = modeled_arrivals(bounce, geom, idx, TITANIUM, first_impact=5e-3)
dt = 1 / 12.5e6
model = WaveformModel(geom, TITANIUM, STEEL, idx, arrivals, arrivals - 20e-6, 2500, dt)
unit = model.unit_waveforms(1.31, 0.61, 350.0, 20.0)
print("\nsensor 16 arrivals (ms):", np.round(arrivals * 1e3, 4))
print("peak |u| per window for C = 1 (m):", [f"{np.max(np.abs(w)):.3e}" for w in unit])
