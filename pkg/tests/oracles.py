"""Frozen reference values.

Each constant was produced once by an independent route and is never
recomputed by the code under test.  Provenance is recorded beside it.
"""

import math

# Hilbert-Schmidt sums of the massive circle block, m = 2, phi = cos.
# Route: dense quadrature_matrix over the full positive x Gamma-image grid
# (pointwise integration on 2(L+1)+1 points), squared moduli summed with numpy.
MASSIVE1D_HS_QUADRATURE = {
    32: 0.1918966569336356,
    64: 0.19191436305560067,
    128: 0.19191658529171024,
}

# Matrix element (e_+ (x) phi_1, P+ pi(X) P- Gamma (e_- (x) phi_0)), m = 2, phi = cos.
# Route: positive-energy spinor coefficients d_a = sqrt((1 + a / sqrt(a^2 + 4)) / 2)
# evaluated by hand, (d_1 - d_-1) / (2 sqrt 2); sign and phase fixed by quadrature.
def _d(a, m=2.0):
    return math.sqrt(0.5 * (1 + a / math.sqrt(a * a + m * m)))


MASSIVE1D_ELEMENT_1P_0M = (_d(1) - _d(-1)) / (2 * math.sqrt(2))

# Massless circle, phi = cos: every HS partial sum equals
# 2|phi_hat(0)|^2 + 4 sum_g g |phi_hat(g)|^2 = 4 * 1 * 1/4 = 1 (hand computation).
MASSLESS1D_HS = 1.0

# zeta(3) partial sums are taken from the definition; Apery's constant to 16 digits.
ZETA3 = 1.2020569031595942
