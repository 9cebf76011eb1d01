"""Fractional Brownian loops and starbursts.

Sampling, self-intersection local times and Edwards reweighting.
"""

__version__ = "0.1.0"
