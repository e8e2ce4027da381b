import sys

from fraclp.cli import main

sys.exit(main())
