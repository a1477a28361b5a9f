import sys

from repet2d.cli import main

if __name__ == '__main__':
    sys.exit(main())
