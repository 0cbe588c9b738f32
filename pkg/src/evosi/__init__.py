"""Critical evoSI epidemics on configuration-model random graphs.

Simulators for the evoSI, avoSI and AB-avoSI dynamics, dominating/dominated
comparison random walks, Airy-type limit constants, and a Monte Carlo harness
for the n**(-1/3) outbreak-probability scaling and the three-stage structure
of surviving critical epidemics.
"""

__version__ = "0.1.0"
