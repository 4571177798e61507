"""Regenerates configs/multi_feeder_fig4.json (synthetic loads, fixed seed)."""

import json
import random
from pathlib import Path

SEGMENTS = [  # id, parent, start_km, length_km
    ("trunk", None, 0.0, 1.0),
    ("A", "trunk", 1.0, 1.25),
    ("B", "trunk", 1.0, 0.75),
    ("A1", "A", 2.25, 0.75),
    ("A2", "A", 2.25, 1.0),
    ("B1", "B", 1.75, 0.5),
    ("B2", "B", 1.75, 0.5),
]
STATIONS = {
    "A": [1.3, 1.7, 2.1],
    "B": [1.3, 1.6],
    "A1": [2.45, 2.65, 2.85],
    "A2": [2.45, 2.65, 2.95, 3.15],
    "B1": [1.85, 2.05],
    "B2": [1.85, 2.05],
}
STATION_CAP = 100 * 4e3 / 12e6  # 100 EVs x 4 kW, as on the single feeder
LOAD_MEAN = 0.15 / 46  # about 0.15 pu in total
SPACING = 0.1

DESCRIPTION = (
    "Tree feeder replica, 5.75 km in total, 12 MVA / 6.6 kV base, one conductor type "
    "(R=0.227, X=0.401 Ohm/km). Assumed geometry (segment: start-end km): trunk 0-1.0 "
    "(switchgear at 1.0 km, no loads upstream); A 1.0-2.25 and B 1.0-1.75 under the trunk; "
    "A1 2.25-3.0 and A2 2.25-3.25 under A; B1 1.75-2.25 and B2 1.75-2.25 under B. 16 stations "
    "(A 3, B 2, A1 3, A2 4, B1 2, B2 2) with raw bounds +-0.0333 pu (100 EVs x 4 kW each). Synthetic loads every 0.1 km "
    "past the switchgear (offset 0.05 km from each segment start), magnitudes drawn uniformly "
    "in [0.5, 1.5] x 0.15/46 pu with seed 7, unity power factor. Generated by "
    "scripts/gen_multi_feeder.py. Use sigma <= 0.02 km to keep kernels from overlapping."
)


def main() -> None:
    rng = random.Random(7)
    doc = {
        "description": DESCRIPTION,
        "base": {"power_VA": 12e6, "voltage_V": 6600.0},
        "segment": [],
        "device": [],
    }
    n_load = 0
    n_station = 0
    for sid, parent, start, length in SEGMENTS:
        doc["segment"].append({
            "id": sid, "length_km": length, "r_ohm_per_km": 0.227, "x_ohm_per_km": 0.401,
            "parent": parent, "offset_km": start,
        })
        if sid == "trunk":
            continue
        x = start + SPACING / 2
        while x < start + length:
            n_load += 1
            p = round(-LOAD_MEAN * rng.uniform(0.5, 1.5), 6)
            doc["device"].append({"kind": "load", "id": f"L{n_load}", "segment": sid,
                                  "xi_km": round(x, 6), "p_pu": p, "q_pu": 0.0})
            x += SPACING
        for xi in STATIONS[sid]:
            n_station += 1
            doc["device"].append({"kind": "station", "id": f"St{n_station}", "segment": sid,
                                  "xi_km": xi, "p_min_pu": -STATION_CAP, "p_max_pu": STATION_CAP})
    out = Path(__file__).resolve().parent.parent / "configs" / "multi_feeder_fig4.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{out}: {n_load} loads, {n_station} stations")


if __name__ == "__main__":
    main()
