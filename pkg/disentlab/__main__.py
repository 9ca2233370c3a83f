import sys

from disentlab.cli import main

sys.exit(main())
