import sys

from inls.cli import main

sys.exit(main())
