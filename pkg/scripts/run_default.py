#!/usr/bin/env python3
"""Solve the default landing scenario and write outputs to out/.

Equivalent to `seqconic run --default`; kept as a script entry point for
interactive experimentation (edit the settings below and rerun).
"""

import logging
import sys

from seqconic.cli import main

if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(main(["run", "--default", "--out", "out"]))
