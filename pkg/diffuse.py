#!/usr/bin/env python3
"""
Relevance Diffusion - Command Line Tool

Train, sample and evaluate diffusion models that denoise only the relevant features.
"""

import sys

from relevance_diffusion.cli import main

if __name__ == '__main__':
    sys.exit(main())
