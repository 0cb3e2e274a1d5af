import sys

from specdet.cli import main

sys.exit(main())
