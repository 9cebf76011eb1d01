"""Persistence layer for ensembles and run artifacts.

Everything written to disk goes through ``artifacts.atomic_write`` so a crash
never leaves a partially written file behind.
"""
