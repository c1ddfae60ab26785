"""
What mesh refinement does and does not buy
==========================================

Sweeps three nested resolutions for case 1 on the medium arc, where each
level reuses the previous level's data mesh as its reconstruction mesh.
The angle errors improve with resolution.  The conductivity error does
not: it climbs slightly toward its continuum value, because away from
the controlled arc the error is not discretization error at all.  It is
the amplification of tiny data perturbations by the collapsed
determinant, and a finer grid only resolves that amplified field more
sharply.  Published experiments on unstructured meshes start from much
larger coarse-grid errors and do improve under refinement; the errors
here begin below where those end.
"""
from aet2d import RunConfig, render_table, table_mesh_sweep

records = table_mesh_sweep(RunConfig(target_h=0.2))
print(render_table(records), end="")

errors = [r.sigma_error for r in records]
print("\nconductivity error across the three levels: "
      + " -> ".join(f"{e:.4f}" for e in errors))
print("refinement sharpens the picture of the unstable region; it cannot")
print("recover what the boundary control never illuminated.")
