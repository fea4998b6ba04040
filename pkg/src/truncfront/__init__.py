"""Truncated heavy-tailed birth processes and their nonlocal mean-field equation.

Subpackages and modules:

* :mod:`truncfront.kernel` -- dispersion kernels, normalisation, tails, sampling.
* :mod:`truncfront.lattice` -- exact event-driven lattice birth process, the
  tip-view/dominating coupling, the nearest-neighbour comparison process and the
  drift/martingale split of the tip position.
* :mod:`truncfront.continuum` -- exact thinning simulation on the real line.
* :mod:`truncfront.meso` -- solver and checks for ``u_t = min(a*u, 1)``.
* :mod:`truncfront.analysis` -- speed fits and side calculations.
* :mod:`truncfront.cli` -- command line entry point.
"""

__version__ = "0.1.0"
