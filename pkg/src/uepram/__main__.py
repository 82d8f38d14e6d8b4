import sys

from uepram.cli import main

sys.exit(main())
