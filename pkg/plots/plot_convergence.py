#!/usr/bin/env python3
"""Render a convergence diagram from a benchmark CSV: plot_convergence.py <csv> <out>."""
import sys

from rkplots.figures import convergence_main

if __name__ == "__main__":
    sys.exit(convergence_main())
