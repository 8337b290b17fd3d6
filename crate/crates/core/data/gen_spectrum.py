"""Regenerate spectrum_w90_cu05_v1.csv.

Kramers bremsstrahlung for a 90 kVp tungsten anode, 2.5 mm Al inherent
filtration plus 0.5 mm Cu, with the W K-lines added. Sampled at 1 keV.
"""
import numpy as np

KVP = 90.0
E = np.arange(20.0, KVP + 1.0, 1.0)

# NIST XCOM mass attenuation (cm^2/g)
AL = ([20, 30, 40, 50, 60, 80, 100], [3.441, 1.128, 0.5685, 0.3681, 0.2778, 0.2018, 0.1704], 2.699)
CU = ([20, 30, 40, 50, 60, 80, 100], [33.79, 10.92, 4.862, 2.613, 1.593, 0.7630, 0.4584], 8.96)


def mu(table, e):
    ek, mk, rho = table
    return rho * np.exp(np.interp(np.log(e), np.log(ek), np.log(mk)))


brems = np.clip(KVP - E, 0.0, None) / E
lines = np.zeros_like(E)
for energy, rel in [(59.0, 1.0), (58.0, 0.58), (67.0, 0.33), (69.0, 0.10)]:
    lines[E == energy] += rel
lines *= 0.10 * brems.sum() / lines.sum()
fluence = (brems + lines) * np.exp(-mu(AL, E) * 0.25 - mu(CU, E) * 0.05)
w = fluence / fluence.sum()
with open("spectrum_w90_cu05_v1.csv", "w") as f:
    f.write("# 90 kVp W anode, 2.5 mm Al + 0.5 mm Cu, Kramers + K-lines, v1\n")
    f.write("kev,weight\n")
    for e, wi in zip(E, w):
        f.write(f"{e:.1f},{wi:.10e}\n")
print("mean energy", (E * w).sum())
