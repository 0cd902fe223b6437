"""Physical constants (CODATA 2018, SI units).

Pinned as literals rather than taken from scipy.constants so that results do
not drift with the CODATA vintage shipped by the installed scipy.
"""

HBAR = 1.054571817e-34     # J s (exact since 2019 SI, rounded)
K_B = 1.380649e-23         # J/K (exact)
ELECTRON_MASS = 9.1093837015e-31   # kg

CODATA_VERSION = "2018"
