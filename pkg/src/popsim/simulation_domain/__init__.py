"""
Simulation Domain Module

Hybrid run loop, endpoint sampling, benchmarking and the MCP simulation tools.
"""
