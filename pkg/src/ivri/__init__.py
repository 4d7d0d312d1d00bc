"""Weak-Hormander determinant checks, stochastic Hodgkin-Huxley simulation and support probes."""
