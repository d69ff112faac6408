"""
DSL Domain Module

Text formats for reaction networks and protocols.
"""
