# src/resilient_hsa/__main__.py
"""resilient_hsa package entry point.

Allows running the package with:
    python -m resilient_hsa
"""

# stdlib
from __future__ import annotations

import sys

# Local
from resilient_hsa.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
