import sys

from canmeas.cli import main

sys.exit(main())
