import sys

from nfbackup.cli import main

sys.exit(main())
