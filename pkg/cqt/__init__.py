"""CQT - steady-state thermodynamics and current noise of driven-dissipative cavity QED."""

__version__ = "0.3.0"
