"""
CRN Domain Module

Compiles chemical reaction networks into continuous-time population protocols.
"""
