import sys

from vsrp.cli import main

sys.exit(main())
