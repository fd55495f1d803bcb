#!/usr/bin/env python3
"""Entry point: write per-source wavs for a mixture (or clean) manifest.

Usage: separate.py --manifest <mixtures> --out <dir>
"""

import sys

from vpk_extractors.separate import main

if __name__ == "__main__":
    sys.exit(main())
