import sys

from multibell.cli import main

sys.exit(main())
