import sys

from mlgrid.cli import main

sys.exit(main())
