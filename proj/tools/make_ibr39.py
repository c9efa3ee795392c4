#!/usr/bin/env python3
"""Build the converter-rich 39-bus case used by the sweep examples.

Starting from data/case39.m: loads and synchronous generation are scaled to
30 %, slack stays at bus 31, and the units at buses 30, 33-37 become
converter terminals. 30, 34, 36, 37 are grid-following (fixed P, Q = 0);
33 and 35 are grid-forming (fixed P and |V|) with a current limit. Converter
active power is also written at 30 % of nominal; the sweep factor lambda
(targets = ibr) scales it from there.

The current limits are not published for this system; the defaults below are
chosen so bus 33 saturates between lambda = 0.8 and 1.0 (|I| is about 1.94
at lambda = 1) while bus 35 stays in voltage regulation.
"""
import argparse
import json
import re
from pathlib import Path

BASE_SCALE = 0.3
FOLLOWING = [30, 34, 36, 37]
FORMING = [33, 35]


def matrix(text, name):
    body = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S).group(1)
    rows = []
    for line in body.splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(x) for x in line.split()])
    return rows


def build(src, i_max, ibr_scale=1.0):
    text = Path(src).read_text()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([\d.]+)", text).group(1))
    bus, gen, branch = matrix(text, "bus"), matrix(text, "gen"), matrix(text, "branch")
    ibr = set(FOLLOWING + FORMING)
    role = {3: "slack", 2: "pv", 1: "pq"}
    vset = {int(g[0]): g[5] for g in gen}

    buses = []
    for b in bus:
        bid = int(b[0])
        r = role[int(b[1])]
        if bid in FOLLOWING:
            r = "pq"
        buses.append({
            "id": bid, "role": r,
            "p_load": round(BASE_SCALE * b[2] / base, 12),
            "q_load": round(BASE_SCALE * b[3] / base, 12),
            "v_set": vset.get(bid, b[7]),
            "shunt_g": b[4] / base, "shunt_b": b[5] / base,
        })
    branches = [{
        "from": int(r[0]), "to": int(r[1]), "r": r[2], "x": r[3], "b_charging": r[4],
        "tap_ratio": r[8] if r[8] != 0 else 1.0, "phase_shift": 0.0, "status": r[10] > 0,
    } for r in branch]
    generators, converters = [], []
    for g in gen:
        gid = int(g[0])
        if gid in ibr:
            p = round(ibr_scale * g[1] / base, 12)
            q = 0.0
        else:
            p = round(BASE_SCALE * g[1] / base, 12)
            q = round(BASE_SCALE * g[2] / base, 12)
        generators.append({"bus": gid, "p_set": p, "q_set": q, "v_set": g[5]})
        if gid in FOLLOWING:
            converters.append({"bus": gid, "mode": "grid_following", "i_max": None, "v_set": g[5]})
        elif gid in FORMING:
            converters.append({"bus": gid, "mode": "grid_forming", "i_max": i_max.get(gid), "v_set": g[5]})
    return {"name": "case39_ibr", "base_mva": base, "buses": buses, "branches": branches,
            "generators": generators, "converters": converters}


def main():
    here = Path(__file__).resolve().parent.parent / "data"
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--source", default=str(here / "case39.m"))
    ap.add_argument("--out", default=str(here / "case39_ibr.json"))
    ap.add_argument("--imax33", type=float, default=1.9)
    ap.add_argument("--imax35", type=float, default=3.0)
    ap.add_argument("--ibr-scale", type=float, default=0.3)
    args = ap.parse_args()
    doc = build(args.source, {33: args.imax33, 35: args.imax35}, args.ibr_scale)
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
