#!/usr/bin/env python3
"""Independent recount of a snapshot document: demand, wind, solar, HVDC,
inertia and the number of N-1 contingencies implied by the counting rule
(in-service branches + online machines + online IBR/HVDC units)."""

import json
import sys
from fractions import Fraction


def main(src, dst):
    with open(src) as f:
        doc = json.load(f)

    def total(items, pred, key):
        return sum((Fraction(str(x[key])) for x in items if pred(x)), Fraction(0))

    online = lambda x: x.get("online", True)
    ibr = doc["ibr_units"]
    out = {
        "demand_mw": float(total(doc["loads"], lambda x: True, "p")),
        "wind_mw": float(total(ibr, lambda x: online(x) and x["kind"] == "wind", "p")),
        "solar_mw": float(total(ibr, lambda x: online(x) and x["kind"] == "solar", "p")),
        "hvdc_import_mw": float(total(ibr, lambda x: online(x) and x["kind"] == "hvdc" and x["p"] > 0, "p")),
        "hvdc_export_mw": float(-total(ibr, lambda x: online(x) and x["kind"] == "hvdc" and x["p"] < 0, "p")),
        "inertia_mws": float(sum((Fraction(str(m["h"])) * Fraction(str(m["s_rated"]))
                                  for m in doc["machines"] if online(m)), Fraction(0))),
        "contingencies": sum(1 for b in doc["branches"] if b.get("in_service", True))
        + sum(1 for m in doc["machines"] if online(m))
        + sum(1 for u in ibr if online(u)),
    }
    with open(dst, "w") as f:
        json.dump(out, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
