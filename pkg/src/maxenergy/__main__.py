import sys

from maxenergy.runner.cli import main

sys.exit(main())
