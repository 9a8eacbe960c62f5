"""Desk-scale experiments for the optimal-transport view of mode connectivity.

Every experiment is a pure function of its configuration and a master seed.
Trials draw their random streams from ``make_rng(seed, *key)`` with a key that
identifies the trial, so results don't depend on how trials are scheduled
across worker processes.
"""
