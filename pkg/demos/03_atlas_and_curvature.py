"""Two-chart atlas on the sphere and sensitivity to a wrong curvature radius.

A smooth gate blends a north and a south RC model. Since the south model
carries the reflected law, both describe the same density and the blend is
seamless. The second part measures how far the chart term moves on a shell
of radius R0 when the sampler assumes R_c = 1.2 on the unit sphere.
"""

import math

import numpy as np

from radcomp.charts import AtlasGate, atlas_gradient_sup, atlas_seam_gradient_jump, make_chart
from radcomp.manifold import ManifoldSpec, south_pole
from radcomp.radial import RadialLaw, ReflectedLaw
from radcomp.rc import RcModel, misspec_sensitivity

spec = ManifoldSpec("sphere", 2)
law = RadialLaw("truncnormal", (1.0, 0.35), math.pi)
gate = AtlasGate(0.3, 1.0)
north = RcModel(make_chart(spec, "bexp:alpha=0.5"), law)
south = RcModel(make_chart(spec, "bexp:alpha=0.5", pole=south_pole(spec)), ReflectedLaw(law))
seam = gate.seam_radius(spec)
print(f"seam radius {seam:.4f}")
print(f"gradient jump across the seam {atlas_seam_gradient_jump(gate, north, south):.2e}")
print(f"sup |grad log p| on the band {atlas_gradient_sup(gate, north, south, (seam - 0.5, seam + 0.5)):.3f}\n")

print("curvature mis-specification, R_c assumed 1.2")
for r0 in (0.05, 0.1, 0.2, 0.4):
    m = misspec_sensitivity(spec, spec.with_rc(1.2), r0)
    print(f"  R0={r0:<5} sup|D'|={m.sup_dprime:.3e} bound={m.bound:.3e} ratio={m.ratio:.4f}")
