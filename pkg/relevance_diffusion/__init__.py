"""
Relevance Diffusion - denoise only the features that explain a signal
"""

__version__ = '0.1.0'
__author__ = 'Faycal Amrouche'
