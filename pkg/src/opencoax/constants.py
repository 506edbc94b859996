"""Physical constants, SI units throughout."""

import math
from dataclasses import dataclass

C0 = 299_792_458.0            # speed of light in vacuum [m/s]
MU0 = 4.0e-7 * math.pi        # vacuum permeability [H/m] (pre-2019 exact value)
EPS0 = 1.0 / (MU0 * C0 * C0)  # vacuum permittivity [F/m]
ETA0 = MU0 * C0               # vacuum wave impedance [ohm]

# Euler-Mascheroni constant, appears in the small-argument Neumann series.
EULER_GAMMA = 0.577215664901532860606512

# Attenuation reporting: Im alpha [Np/m] times this gives dB per 100 km.
NEPER_TO_DB_PER_100KM = 2.0e6 * math.log10(math.e)


@dataclass(frozen=True)
class Constants:
    """Bundle of the constants above, handy for passing around explicitly."""

    c0: float = C0
    mu0: float = MU0
    eps0: float = EPS0
    eta0: float = ETA0
    euler_gamma: float = EULER_GAMMA


CONSTANTS = Constants()
