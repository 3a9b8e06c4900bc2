import sys

from rcdsim.main import main

sys.exit(main())
