"""Allow ``python -m frontselect``."""

import sys

from .cli import main

sys.exit(main())
