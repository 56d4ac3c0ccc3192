"""PV single-diode modelling, MPP search and neural MPPT tooling."""

__version__ = "0.1.0"
