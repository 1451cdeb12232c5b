import sys

from toricqh.cli import main

sys.exit(main())
