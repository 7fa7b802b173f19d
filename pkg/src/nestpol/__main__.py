from nestpol.cli import main
import sys

sys.exit(main())
