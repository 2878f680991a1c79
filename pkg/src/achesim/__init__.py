"""achesim: pseudo-spectral simulation and semigroup analysis of the
advective Cahn-Hilliard equation with a background shear on the unit torus.
"""

__version__ = "0.1.0"
