"""Allow `python -m gsloc`."""

import sys

from .cli import main

sys.exit(main())
