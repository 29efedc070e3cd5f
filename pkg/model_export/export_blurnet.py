#!/usr/bin/env python3
"""Entry point wrapper; see model_export/export_blurnet.py for the logic."""
import sys

from model_export.export_blurnet import main

if __name__ == "__main__":
    sys.exit(main())
