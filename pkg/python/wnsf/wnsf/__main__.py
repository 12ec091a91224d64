import sys

from wnsf.cli import main

sys.exit(main())
