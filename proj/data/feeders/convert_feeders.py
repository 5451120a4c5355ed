#!/usr/bin/env python3
"""Convert the IEEE 37-bus and 123-bus feeders into mplf network and injection JSON.

Conversion rules:
  * every load becomes constant power at its nominal kW/kvar (generation-positive, so loads are negative);
  * regulators sit at nominal tap and closed switches are ideal, so both merge their end buses;
  * open switches are dropped;
  * transformers are series per-unit impedances on the system base;
  * line charging is split evenly between both ends;
  * capacitors are wye reactive injections at nominal voltage.

Per-unit base: phase-to-neutral voltage and a per-phase power base (--s-base-kva).
"""

import argparse
import csv
import json
import math
import re
from collections import defaultdict
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
SOURCE = HERE / "source"
OMEGA = 2.0 * math.pi * 60.0
PHASES = "abc"
PAIRS = ("ab", "bc", "ca")


def complex_json(z):
    return {"re": float(z.real), "im": float(z.imag)}


def block_json(m):
    return [[complex_json(x) for x in row] for row in m]


def lower_triangle(text, n):
    rows = [r.split() for r in text.split("|")]
    m = np.zeros((n, n))
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            m[i, j] = m[j, i] = float(x)
    return m


def read_linecodes(path):
    codes = {}
    current = None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if line.startswith("!") or not line:
            continue
        head = re.match(r"New linecode\.(\S+)\s+nphases=(\d)", line, re.I)
        if head:
            current = head.group(1)
            codes[current] = {"n": int(head.group(2))}
            continue
        field = re.match(r"~\s*(rmatrix|xmatrix|cmatrix)\s*=\s*\[(.*)\]", line, re.I)
        if field and current:
            codes[current][field.group(1).lower()] = lower_triangle(field.group(2), codes[current]["n"])
    return codes


def balanced_slack():
    return [complex_json(np.exp(-2j * math.pi * k / 3)) for k in range(3)]


class Feeder:
    def __init__(self, v_ln_kv, s_base_kva):
        self.z_base = (v_ln_kv * 1e3) ** 2 / (s_base_kva * 1e3)
        self.s_base_kva = s_base_kva
        self.lines = []
        self.bus_phases = defaultdict(set)
        self.delta = defaultdict(set)
        self.wye = defaultdict(complex)
        self.delta_inj = defaultdict(complex)

    def add_line(self, a, b, phases, z_ohm, y_shunt_s=None):
        y = np.linalg.inv(z_ohm * (1.0 / self.z_base))
        entry = {"from": a, "to": b, "phases": "".join(phases), "series_admittance": block_json(0.5 * (y + y.T))}
        if y_shunt_s is not None and np.any(y_shunt_s != 0):
            half = 0.5 * y_shunt_s * self.z_base
            entry["shunt_from"] = block_json(half)
            entry["shunt_to"] = block_json(half)
        self.lines.append(entry)
        for p in phases:
            self.bus_phases[a].add(p)
            self.bus_phases[b].add(p)

    def add_wye(self, bus, phase, kw, kvar):
        self.wye[(bus, phase)] += complex(kw, kvar) / self.s_base_kva

    def add_delta(self, bus, pair, kw, kvar):
        self.delta[bus].add(pair)
        self.delta_inj[(bus, pair)] += complex(kw, kvar) / self.s_base_kva

    def network(self, slack):
        buses = []
        for bus in sorted(self.bus_phases, key=sort_key):
            if bus == slack:
                continue
            entry = {"id": bus, "phases": "".join(p for p in PHASES if p in self.bus_phases[bus])}
            if self.delta[bus]:
                entry["delta_connections"] = [p for p in PAIRS if p in self.delta[bus]]
            buses.append(entry)
        return {"buses": buses, "slack": {"id": slack, "phases": "abc", "voltages": balanced_slack()}, "lines": self.lines}

    def injections(self, extra_wye=None, extra_delta=None):
        wye = dict(self.wye)
        delta = dict(self.delta_inj)
        for key, s in (extra_wye or {}).items():
            wye[key] = wye.get(key, 0) + s
        for key, s in (extra_delta or {}).items():
            delta[key] = delta.get(key, 0) + s
        return {
            "wye": [{"bus": b, "phase": p, "re": s.real, "im": s.imag}
                    for (b, p), s in sorted(wye.items(), key=lambda kv: (sort_key(kv[0][0]), kv[0][1])) if s != 0],
            "delta": [{"bus": b, "pair": p, "re": s.real, "im": s.imag}
                      for (b, p), s in sorted(delta.items(), key=lambda kv: (sort_key(kv[0][0]), kv[0][1])) if s != 0],
        }


def sort_key(bus):
    m = re.match(r"(\d+)(.*)", bus)
    return (int(m.group(1)), m.group(2)) if m else (10**9, bus)


def transformer_impedance(kva, r_percent, x_percent, s_base_kva, z_base, phases=3):
    # Percent impedance on the transformer's per-phase rating, moved to ohms on the system base.
    z_pu = complex(r_percent, x_percent) / 100.0 * (s_base_kva / (kva / phases))
    return np.eye(phases) * z_pu * z_base


def additions(feeder_name):
    wye, delta = {}, {}
    with open(SOURCE / "mixed_additions.csv") as f:
        for row in csv.DictReader(f):
            if row["feeder"] != feeder_name:
                continue
            for k in range(3):
                s = complex(float(row[f"re_{k + 1}"]), float(row[f"im_{k + 1}"]))
                if s == 0:
                    continue
                if row["type"] == "wye":
                    wye[(row["bus"], PHASES[k])] = s
                else:
                    delta[(row["bus"], PAIRS[k])] = s
    return wye, delta


def convert_37(s_base_kva):
    codes = read_linecodes(SOURCE / "IEEELineCodes.DSS")
    f = Feeder(4.8 / math.sqrt(3.0), s_base_kva)
    with open(SOURCE / "ieee37_segments.csv") as src:
        for row in csv.DictReader(src):
            code = codes[row["config"]]
            kft = float(row["length_ft"]) / 1000.0
            z = (code["rmatrix"] + 1j * code["xmatrix"]) * kft
            y_sh = 1j * OMEGA * code["cmatrix"] * 1e-9 * kft
            f.add_line(row["from"], row["to"], "abc", z, y_sh)
    with open(SOURCE / "ieee37_transformers.csv") as src:
        for row in csv.DictReader(src):
            z = transformer_impedance(float(row["kva"]), float(row["r_percent"]), float(row["x_percent"]), s_base_kva, f.z_base)
            f.add_line(row["from"], row["to"], "abc", z)
    with open(SOURCE / "ieee37_loads.csv") as src:
        for row in csv.DictReader(src):
            for pair in PAIRS:
                kw, kvar = float(row[f"kw_{pair}"]), float(row[f"kvar_{pair}"])
                if kw or kvar:
                    f.add_delta(row["bus"], pair, -kw, -kvar)
    wye, delta = additions("ieee37")
    return f.network("799"), f.injections(), f.injections(wye, delta)


def dss_statements(path):
    out = []
    for raw in path.read_text().splitlines():
        line = raw.split("!")[0].strip()
        if not line:
            continue
        if line.startswith("~") and out:
            out[-1] += " " + line[1:]
        else:
            out.append(line)
    return out


def props(statement):
    return {k.lower(): v for k, v in re.findall(r"(\w+)\s*=\s*(\[[^\]]*\]|\S+)", statement)}


def bus_and_phases(spec, default="abc"):
    parts = spec.split(".")
    if len(parts) == 1:
        return parts[0], default
    return parts[0], "".join(PHASES[int(p) - 1] for p in parts[1:] if p != "0")


def convert_123(s_base_kva):
    codes = read_linecodes(SOURCE / "IEEELineCodes.DSS")
    master = dss_statements(SOURCE / "IEEE123Master.dss")
    run = dss_statements(SOURCE / "Run_IEEE123Bus.DSS")
    opened = {m.group(1).lower() for s in run for m in [re.match(r"Open Line\.(\S+)", s, re.I)] if m}

    # Ideal elements: closed switches and regulators merge their end buses.
    parent = {}

    def find(b):
        while parent.get(b, b) != b:
            b = parent[b]
        return b

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        # Keep the plain numeric name (or the source bus) as representative.
        if ra == "150" or (rb != "150" and not re.fullmatch(r"\d+", rb)):
            parent[rb] = ra
        else:
            parent[ra] = rb

    line_specs = []
    for s in master:
        m = re.match(r"New Line\.(\S+)", s, re.I)
        if not m:
            continue
        p = props(s)
        name = m.group(1).lower()
        b1, ph1 = bus_and_phases(p["bus1"])
        b2, ph2 = bus_and_phases(p["bus2"])
        if p.get("switch", "").lower() == "true" or name.startswith("sw"):
            if name not in opened:
                union(b1, b2)
            continue
        line_specs.append((b1, b2, ph1, p["linecode"], float(p["length"])))
    regs = dss_statements(SOURCE / "IEEE123Regulators.DSS") + master
    for s in regs:
        m = re.match(r"new transformer\.(reg\S+)", s, re.I)
        if m:
            buses = re.search(r"buses=\[\s*(\S+)\s+(\S+)\s*\]", s, re.I)
            union(bus_and_phases(buses.group(1))[0], bus_and_phases(buses.group(2))[0])

    f = Feeder(4.16 / math.sqrt(3.0), s_base_kva)
    for b1, b2, ph, code_name, kft in line_specs:
        code = codes[code_name]
        z = (code["rmatrix"] + 1j * code["xmatrix"]) * kft
        y_sh = 1j * OMEGA * code["cmatrix"] * 1e-9 * kft
        f.add_line(find(b1), find(b2), ph, z, y_sh)

    # XFM1: %r per winding, Xhl on the 150 kVA rating.
    for s in master:
        if re.match(r"New Transformer\.XFM1", s, re.I):
            kva = float(re.search(r"kva=(\S+)", s, re.I).group(1))
            r = 2.0 * float(re.search(r"%r=(\S+)", s, re.I).group(1))
            x = float(re.search(r"Xhl=(\S+)", s, re.I).group(1))
            wdg = re.findall(r"bus=(\S+)", s, re.I)
            f.add_line(find(wdg[0]), find(wdg[1]), "abc",
                       transformer_impedance(kva, r, x, s_base_kva, f.z_base))

    for s in dss_statements(SOURCE / "IEEE123Loads.DSS"):
        if not re.match(r"New Load\.", s, re.I):
            continue
        p = props(s)
        bus, ph = bus_and_phases(p["bus1"])
        bus = find(bus)
        kw, kvar = float(p["kw"]), float(p["kvar"])
        n = int(p.get("phases", "1"))
        if p["conn"].lower() == "delta":
            if n == 3:
                for pair in PAIRS:
                    f.add_delta(bus, pair, -kw / 3, -kvar / 3)
            else:
                pair = ph if ph in PAIRS else ph[::-1]
                f.add_delta(bus, pair, -kw, -kvar)
        else:
            for phase in (ph if n == 1 else "abc"):
                f.add_wye(bus, phase, -kw / n, -kvar / n)

    for s in master:
        m = re.match(r"New Capacitor\.\S+", s, re.I)
        if m:
            p = props(s)
            bus, ph = bus_and_phases(p["bus1"])
            n = int(p.get("phases", "1"))
            for phase in (ph if n == 1 else "abc"):
                f.add_wye(find(bus), phase, 0.0, float(p["kvar"]) / n)

    wye, delta = additions("ieee123")
    for (bus, pair) in delta:
        f.delta[bus].add(pair)
    return f.network("150"), f.injections(), f.injections(wye, delta)


def write(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s-base-kva", type=float, default=1000.0, help="per-phase power base")
    ap.add_argument("--out", type=Path, default=HERE.parent)
    args = ap.parse_args()
    for name, convert in (("ieee37", convert_37), ("ieee123", convert_123)):
        net, original, mixed = convert(args.s_base_kva)
        write(args.out / name / "network.json", net)
        write(args.out / name / "injections_original.json", original)
        write(args.out / name / "injections_mixed.json", mixed)
        print(f"{name}: {len(net['buses'])} PQ buses, {len(net['lines'])} lines")


if __name__ == "__main__":
    main()
