"""
Focal points of an initial submanifold
======================================

Two focal scenarios: a Riemannian one where the initial submanifold is
totally geodesic, and a Lorentzian one where it is tangent to the timelike
axis.  In the second case the relative index picks up a correction equal to
the negative index of g on the tangent space.
"""

from maslovsf import BasisSpec, builtin, find_conjugate_instants, focal_identity_check
from maslovsf.focal import focal_flow

for name in ("equator-focal", "timelike-focal"):
    sc = builtin(name)
    print(f"--- {name}: {sc.description}")

    flow = focal_flow(sc.system, sc.focal)
    for c in find_conjugate_instants(sc.system, flow):
        print(f"focal instant t0 = {c.t0:.9f}  signature {c.signature:+d}")

    rep = focal_identity_check(sc.system, sc.focal, BasisSpec("sine", 32), strict=False)
    print(f"P-Maslov index      {rep.maslov:+d}")
    print(f"relative index      {rep.relative_index:+d}")
    print(f"correction n_-(g|P) {rep.correction:+d}")
    print(f"rel - correction    {rep.rhs:+d}   (matches: {rep.identity_ok})")
    print(f"spectral flow       {rep.spectral_flow:+d}   (equals -P-Maslov: {rep.flow_ok})")

# The spectral flow of the focal index-form path is -P-Maslov in both cases.
# Subtracting the correction once more, as one might expect by analogy with the
# relative-index identity, would give 0 for the timelike case instead of +1.
