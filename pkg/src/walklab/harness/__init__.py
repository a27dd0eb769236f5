"""Experiment harness: configuration, persistence, ablations, CLI, teleop.

Submodules import lazily to keep `walklab.tasks` -> records free of cycles.
"""
