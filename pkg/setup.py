#!/usr/bin/env python3
from setuptools import setup, find_packages

setup(
    name="relevance_diffusion",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    include_package_data=True,
    install_requires=[
        "numpy>=1.20.0",
        "scipy>=1.7.0",
        "tqdm>=4.62.0",
        "click>=8.0.0",
        "matplotlib>=3.4.0",
    ],
    entry_points={
        "console_scripts": [
            "relevance-diffusion=relevance_diffusion.cli:main",
        ],
    },
    author="Faycal Amrouche",
    author_email="your.email@example.com",
    description="Denoising diffusion that only denoises the features relevant to a side signal",
    keywords="diffusion, ddpm, information bottleneck, relevance, numpy",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
