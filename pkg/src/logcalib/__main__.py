import sys

from logcalib.cli import main

sys.exit(main())
