"""``python -m weakwire`` runs the command-line front end."""

import sys

from weakwire.cli import main

sys.exit(main())
