"""python -m subspace_bfgs 入口"""

import sys

from subspace_bfgs.bench.cli import main

if __name__ == "__main__":
    sys.exit(main())
