from sgdr.cli import main
import sys

sys.exit(main())
