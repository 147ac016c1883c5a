"""Numerical checks for double null perturbations of Schwarzschild and Minkowski.

Modules: kerr_background, sphere_calculus, decay_calculus, frame_transform,
bianchi_energy, characteristic_evolution, and the ``nullcone`` command line.
"""
__version__ = "0.1.0"
