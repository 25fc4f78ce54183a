import sys

from pmedipole.cli import main

sys.exit(main())
