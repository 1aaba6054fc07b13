#!/usr/bin/env python3
"""Generate frozen oracle values for the special-function tests.

Evaluates J0, J1, Y0, Y1 with mpmath at 40 significant digits on the
200-point log grid used by the acceptance suite plus a handful of spot
arguments, and writes tests/data/bessel_oracle.json.  Run once; the JSON
is checked in so the test suite has no arbitrary-precision dependency.
"""

import json
import pathlib

import mpmath as mp
import numpy as np

mp.mp.dps = 40

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "bessel_oracle.json"


def main() -> None:
    grid = np.logspace(-3, np.log10(500.0), 200)
    spot = [1e-3, 1e-2, 0.5, 1.0, 2.0, 5.0, 11.5, 12.0, 12.5, 16.5, 17.0, 17.5,
            25.0, 50.0, 100.0, 200.0, 400.0, 500.0, 1000.0]
    xs = sorted(set(float(x) for x in list(grid) + spot))
    rows = []
    for x in xs:
        mx = mp.mpf(repr(x))
        rows.append({
            "x": x,
            "j0": float(mp.besselj(0, mx)),
            "j1": float(mp.besselj(1, mx)),
            "y0": float(mp.bessely(0, mx)),
            "y1": float(mp.bessely(1, mx)),
        })
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"dps": 40, "values": rows}, indent=1))
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
