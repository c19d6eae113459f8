import sys

from psamathe.cli import main

sys.exit(main())
