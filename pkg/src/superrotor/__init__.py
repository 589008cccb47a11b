"""Collision-induced decoherence of fast-spinning molecules in a dilute gas.

The package computes anisotropic van der Waals scattering amplitudes in the
eikonal regime, turns them into decoherence and alignment-decay rates, and
propagates rotor density matrices under the matching Lindblad generator.
"""

__version__ = "0.1.0"
