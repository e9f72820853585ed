"""Numerical laboratory for the almost Mathieu operator.

Subpackages are grouped by task: ``arithmetic`` (continued fractions),
``cocycle`` (transfer matrices), ``lyapunov``, ``spectrum``,
``localization``, ``reducibility`` and ``phaselab`` (grid sweeps).
"""

__version__ = "0.1.0"
