#!/usr/bin/env python3
"""Entry point: extract features or transcripts from a manifest.

Usage: extract.py --model <id> --manifest <file> --out <dir>
"""

import sys

from vpk_extractors.extract import main

if __name__ == "__main__":
    sys.exit(main())
