"""Noisy spin channels between inertial observers with partially known frames.

Subpackages are flat modules:

* :mod:`refchannel.qubit` -- spin-1/2 states, Pauli algebra, SU(2) rotations
* :mod:`refchannel.distributions` -- Bessel ratios, vMF densities, bump weights, samplers
* :mod:`refchannel.wigner` -- exact and expanded Wigner rotations, 4x4 Lorentz oracle
* :mod:`refchannel.channels` -- rotation and boost twirls, limit channels, CP checks
* :mod:`refchannel.metrology` -- Uhlmann fidelity and quantum Fisher information
* :mod:`refchannel.scenarios` / :mod:`refchannel.cli` -- sweeps, validation harness, CSV I/O
"""

__version__ = "0.1.0"
