import sys

from nafdsim.cli import main

sys.exit(main())
