#!/usr/bin/env python3
"""Regenerates the desk-scale grids and 48 h profiles in this directory.

Deterministic: the only randomness is a fixed-seed cloud pattern on day 2.
"""
import math
import pathlib
import random

HERE = pathlib.Path(__file__).resolve().parent
STEP_S = 300
STEPS = 48 * 3600 // STEP_S

FEEDER_BASE_MVA = 1.0
FEEDER_KV = 12.47


def write(name, text):
    (HERE / name).write_text(text)


# ---------------------------------------------------------------------------
# Transmission: five buses, feeders aggregated at T5 behind a long line.

TRANSMISSION = """\
# Desk-scale 69 kV sub-transmission network; feeder group attaches at T5.
[system]
base_mva,100
[buses]
T1,a,69,slack
T2,a,69,pv
T3,a,69,pq
T4,a,69,pq
T5,a,69,pq
[branches]
T1,T2,0.010,0.060
T1,T3,0.020,0.080
T2,T3,0.015,0.070
T3,T4,0.020,0.090
T4,T5,0.030,0.150
[loads]
LT3,T3,a,constant_power,20000,6000
LT4,T4,a,constant_power,10000,3000
[shunts]
C5,T5,a,5300,1,1
[generators]
T1,,1.00,-60,60
T2,20,1.00,-15,15
"""


# ---------------------------------------------------------------------------
# Feeders: 8-segment trunk H-N1..N8 with three laterals.

def three_phase_segment(length_km, r_self=0.38):
    # Per-km phase impedance of an overhead conductor, ohms.
    zs = (r_self * length_km, 1.10 * length_km)
    zm = (0.06 * length_km, 0.45 * length_km)
    zb = FEEDER_KV ** 2 / FEEDER_BASE_MVA
    s = (zs[0] / zb, zs[1] / zb)
    m = (zm[0] / zb, zm[1] / zb)
    pairs = [s, m, m, s, m, s]
    return ",".join(f"{r:.6f},{x:.6f}" for r, x in pairs)


def single_phase_segment(length_km):
    zb = FEEDER_KV ** 2 / FEEDER_BASE_MVA
    return f"{0.50 * length_km / zb:.6f},{1.20 * length_km / zb:.6f}"


def feeder(name, seg_km, loads, solar, shunts, fixed=None, r_self=0.38):
    lines = [f"# Desk-scale 12.47 kV radial feeder {name}.", "[system]", f"base_mva,{FEEDER_BASE_MVA:g}", "[buses]"]
    lines.append(f"H,abc,{FEEDER_KV},slack")
    for i in range(1, 9):
        lines.append(f"N{i},abc,{FEEDER_KV},pq")
    lines += [f"L1,abc,{FEEDER_KV},pq", f"L2,a,{FEEDER_KV},pq", f"L3,c,{FEEDER_KV},pq"]
    lines.append("[branches]")
    prev = "H"
    for i in range(1, 9):
        lines.append(f"{prev},N{i},{three_phase_segment(seg_km, r_self)}")
        prev = f"N{i}"
    lines.append(f"N3,L1,{three_phase_segment(1.0)}")
    lines.append(f"N5,L2,{single_phase_segment(1.5)}")
    lines.append(f"N6,L3,{single_phase_segment(1.5)}")
    lines.append("[loads]")
    for i, (bus, phases, kind, p, q) in enumerate(loads, 1):
        lines.append(f"{name}_ld{i},{bus},{phases},{kind},{p},{q}")
    if fixed:
        lines.append(fixed)
    if shunts:
        lines.append("[shunts]")
        lines += shunts
    lines.append("[solar]")
    lines += solar
    return "\n".join(lines) + "\n"


P, I, Z = "constant_power", "constant_current", "constant_impedance"

FEEDER1 = feeder(
    "f1", 2.0,
    [("N1", "abc", P, 300, 100), ("N2", "abc", P, 250, 80), ("N3", "abc", I, 200, 60), ("N4", "abc", P, 300, 100),
     ("N5", "abc", Z, 150, 50), ("N6", "abc", P, 250, 80), ("N7", "b", P, 200, 60), ("N7", "c", P, 200, 60),
     ("N8", "abc", P, 150, 50), ("L3", "c", P, 100, 30)],
    ["pv_f1,N5,5600,solar"],
    [],
    r_self=0.60,
)

FEEDER2 = feeder(
    "f2", 1.7,
    [("N1", "abc", P, 400, 130), ("N2", "abc", P, 350, 110), ("N3", "abc", P, 300, 100), ("N4", "abc", I, 300, 90),
     ("N5", "abc", P, 250, 80), ("N6", "abc", Z, 200, 60), ("N7", "abc", P, 200, 60), ("L1", "abc", P, 250, 80),
     ("L2", "a", Z, 120, 40), ("L3", "c", P, 100, 30)],
    ["pv_f2,N8,1000,solar"],
    ["cap_f2,N4,abc,150,2,1"],
    fixed="mg_f2,N2,abc,constant_power,150,40,fixed",
)

FEEDER3 = feeder(
    "f3", 1.0,
    [("N1", "abc", P, 300, 100), ("N2", "abc", I, 250, 80), ("N3", "abc", P, 250, 80), ("N4", "abc", I, 200, 60),
     ("N5", "abc", P, 200, 60), ("N6", "abc", Z, 150, 50), ("N7", "abc", P, 150, 50), ("L1", "abc", P, 200, 60),
     ("L2", "a", Z, 100, 30), ("L3", "c", P, 80, 20)],
    ["pv_f3,N6,500,solar"],
    [],
)


# ---------------------------------------------------------------------------
# Profiles on a 300 s grid.

def load_shape(hour):
    h = hour % 24
    morning = math.exp(-((h - 8.0) / 2.0) ** 2)
    evening = math.exp(-((h - 19.0) / 2.5) ** 2)
    return 0.45 + 0.25 * morning + 0.5 * evening + 0.1 * math.sin(math.pi * h / 24.0)


def solar_shape(hour):
    h = hour % 24
    if h <= 6.0 or h >= 18.0:
        return 0.0
    return math.sin(math.pi * (h - 6.0) / 12.0) ** 1.3


def csv(values):
    rows = ["time_s,value"]
    rows += [f"{k * STEP_S},{v:.6f}" for k, v in enumerate(values)]
    return "\n".join(rows) + "\n"


def main():
    rng = random.Random(20230406)
    hours = [k * STEP_S / 3600.0 for k in range(STEPS)]
    cloud = []
    for h in hours:
        dip = 1.0
        if h >= 24.0 and rng.random() < 0.08:
            dip = 0.75 + 0.2 * rng.random()
        cloud.append(dip)
    solar = [min(1.0, solar_shape(h) * c) for h, c in zip(hours, cloud)]
    write("transmission.grid", TRANSMISSION)
    write("feeder1.grid", FEEDER1)
    write("feeder2.grid", FEEDER2)
    write("feeder3.grid", FEEDER3)
    write("solar.csv", csv(solar))
    for name, peak in (("load_f1.csv", 2000.0), ("load_f2.csv", 2400.0), ("load_f3.csv", 1800.0)):
        write(name, csv([peak * load_shape(h) / 1.05 for h in hours]))


if __name__ == "__main__":
    main()
