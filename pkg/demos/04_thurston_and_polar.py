"""Unit-volume base charts on the Thurston geometries, and a warped polar factor.

The table residual is |volume factor - 1| on random interior points. The
S3/H3 rows of the table only preserve volume in two dimensions, so the
volume-matched Lambert variant is shown next to them. The second part
samples a surface of revolution whose polar volume factor is not that of a
constant-curvature space, keeping the radius law exact.
"""

import math

import numpy as np
from scipy import stats

from radcomp import thurston
from radcomp.diagnostics import make_rng
from radcomp.radial import RadialLaw
from radcomp.rc import PolarVolumeFactor, balanced_polar_sample

rng = make_rng(0)
for kind in thurston.KINDS:
    x = thurston.random_interior_points(kind, 500, rng)
    line = f"{kind:<9} table {np.max(thurston.volume_check(kind, x)):.1e}"
    if kind in ("S3", "H3"):
        xm = thurston.random_interior_points(kind, 500, rng, thurston.VOLUME_MATCHED)
        line += f"   volume-matched {np.max(thurston.volume_check(kind, xm, variant=thurston.VOLUME_MATCHED)):.1e}"
    print(line)

law = RadialLaw("truncnormal", (1.0, 0.35), math.pi)
warped = PolarVolumeFactor(lambda r, u: np.sin(r) * (1 + 0.3 * np.sin(r) ** 2), 2)
s = balanced_polar_sample(warped, law, 20_000, make_rng(1))
print(f"\nwarped surface: KS vs law {stats.kstest(s.r, law.cdf).statistic:.4f} (1% critical {1.63 / math.sqrt(20_000):.4f})")
tilted = PolarVolumeFactor(lambda r, u: np.sin(r) * (1 + 0.1 * u[..., 0]), 2, radial_only=False)
s = balanced_polar_sample(tilted, law, 20_000, make_rng(2), envelope=1.1)
print(f"angular factor: acceptance {s.acceptance:.3f}, mean u_0 {s.directions[:, 0].mean():+.3f}")
