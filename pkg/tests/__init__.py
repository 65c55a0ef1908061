"""
Tests package for Relevance Diffusion.
"""
