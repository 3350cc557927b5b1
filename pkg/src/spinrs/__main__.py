"""Entry point for ``python -m spinrs``."""

import sys

from .cli import main

sys.exit(main())
