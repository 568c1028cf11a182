"""Emit the Sobol direction-number file shipped with the package.

Source: scipy's bundled Joe-Kuo direction-number table (scipy.stats._sobol),
re-serialized into the published column format

    d s a m_1 ... m_s

for dimensions 2..1100 (dimension 1 is the van der Corput radix-2 sequence
and is not listed in that format).  The first rows are cross-checked against
the published table values before writing.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.stats._sobol as _sobol

MAX_DIM = 1100

# spot checks: (d, s, a, (m_i...)) from the published table
KNOWN_ROWS = {
    2: (1, 0, (1,)),
    3: (2, 1, (1, 3)),
    4: (3, 1, (1, 3, 1)),
    5: (3, 2, (1, 1, 1)),
    6: (4, 1, (1, 1, 3, 3)),
    7: (4, 4, (1, 3, 5, 13)),
    8: (5, 2, (1, 1, 5, 5, 17)),
}


def main() -> None:
    poly = _sobol.get_poly_vinit("poly", np.uint32)
    vinit = _sobol.get_poly_vinit("vinit", np.uint32)
    lines = ["d       s       a       m_i"]
    for dim in range(2, MAX_DIM + 1):
        full = int(poly[dim - 1])
        s = full.bit_length() - 1
        # strip leading x^s and trailing 1 to get the published 'a' encoding
        a = (full ^ (1 << s) ^ 1) >> 1
        m = [int(v) for v in vinit[dim - 1][:s]]
        assert all(mi % 2 == 1 and mi < (1 << (j + 1)) for j, mi in enumerate(m)), dim
        if dim in KNOWN_ROWS:
            assert KNOWN_ROWS[dim] == (s, a, tuple(m)), (dim, s, a, m)
        lines.append(f"{dim}\t{s}\t{a}\t" + " ".join(str(x) for x in m))
    out = Path(__file__).resolve().parents[1] / "src" / "ubmcqmc" / "data" / "joe-kuo-6.1100.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(lines) - 1} dimension rows)")


if __name__ == "__main__":
    main()
