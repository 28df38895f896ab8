"""Spectral stability workbench for periodic traveling waves of the
generalized good Boussinesq equation: wave construction, Hill-operator
index counts, quadratic-pencil spectra with Krein signatures, parameter
atlases, and time-evolution cross checks."""

__version__ = "0.1.0"
