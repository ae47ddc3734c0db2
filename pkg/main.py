import sys

from physarum_lp.cli import main

if __name__ == "__main__":
    sys.exit(main())
