import sys

from ksforge.cli import main

sys.exit(main())
