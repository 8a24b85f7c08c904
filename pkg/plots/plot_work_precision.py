#!/usr/bin/env python3
"""Render a work-precision diagram from a benchmark CSV: plot_work_precision.py <csv> <out>."""
import sys

from rkplots.figures import work_precision_main

if __name__ == "__main__":
    sys.exit(work_precision_main())
