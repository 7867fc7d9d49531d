## @file __main__.py
## @brief Entry point: python -m DIO_Observer

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
