"""
Engine Domain Module

Batched collision sampling, sequential interactions and Gillespie engines.
"""
