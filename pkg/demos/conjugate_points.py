"""
Conjugate instants, Maslov index and spectral flow
===================================================

Walk through the split Lorentzian system J'' = R J with g = diag(-1, 1) and
R = diag(-(1.5 pi)^2, -(2.5 pi)^2), then check that three independent
counts agree.
"""

import numpy as np

from maslovsf import BasisSpec, builtin, crossing_form, find_conjugate_instants, integrate_flow
from maslovsf import maslov_index_geodesic, path_spectral_flow

sc = builtin("split-lorentzian")
system = sc.system

# integrate the fundamental matrix; the J block vanishes on a kernel at each
# conjugate instant
flow = integrate_flow(system)
print(f"max symplectic defect: {flow.defect.max():.2e}")

# det J is exactly 0 at t = 0, so start counting sign changes from the next sample
t, det, sigma = flow.det_curve()
signs = np.sign(det[1:])
print(f"det J changes sign {np.sum(signs[1:] != signs[:-1])} times on the grid")

instants = find_conjugate_instants(system, flow)
for c in instants:
    rep = crossing_form(system, flow, c)
    print(f"t0 = {c.t0:.9f}  multiplicity {c.multiplicity}  signature {c.signature:+d}  crossing form {rep.form.matrix.ravel()}")

# the timelike axis contributes -1, so the sum is 1 - 1 + 1
maslov = maslov_index_geodesic(system, flow)
print("Maslov index:", maslov)

# the Galerkin index form path s -> I_s on [0, 1]; its spectral flow is -maslov
for kind in ("sine", "fem"):
    for n in (16, 32, 64):
        res = path_spectral_flow(system, BasisSpec(kind, n))
        print(f"{kind:4s} N={n:2d}: sf = {res.spectral_flow:+d}   n_-(I_1) - dim H^- = {res.endpoint_index}")
