"""Numerical laboratory for the damped stochastic Burgers equation."""
