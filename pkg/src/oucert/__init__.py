"""Stability certification toolkit for piecewise Ornstein-Uhlenbeck diffusions.

Decides and constructs common quadratic Lyapunov functions (CQLFs) for the
matrix pairs arising from many-server queueing diffusion limits, verifies
Foster-Lyapunov drift conditions numerically, and estimates stationary
behavior by Monte Carlo simulation.
"""

__all__ = ["matkit", "cqlf", "cheb", "oumodel", "lyap", "sim"]
__version__ = "0.1.0"
