"""Stochastic wind-speed models with prescribed stationary law and exponential autocorrelation."""

__version__ = "0.1.0"
