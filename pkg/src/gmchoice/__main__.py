import sys

from gmchoice.cli import main

sys.exit(main())
