"""Physical constants and unit conversions.

Internal units are SI except carrier density (cm^-3), mobility (cm^2/Vs) and
device geometry (cm), which meet only in the conductivity formula
sigma = n * e * mu (S/cm). Energies are in meV, optical intensity in mW/cm^2.
"""

ELEMENTARY_CHARGE = 1.602176634e-19  # C
BOLTZMANN_MEV = 8.617333e-2  # meV/K
HC_EV_NM = 1239.842  # photon energy (eV) x wavelength (nm)

MM2_PER_CM2 = 100.0
W_PER_MW = 1e-3
NW_PER_W = 1e9

DEFAULT_INTENSITY = 40.0  # mW/cm^2
DEFAULT_PULSE_DURATION = 1.0  # s
