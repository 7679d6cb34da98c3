"""Registered identity checks, grouped by suite"""
__all__ = ["decompositions", "weakvalue_laws", "pointer_oracles", "protocol_statistics"]
