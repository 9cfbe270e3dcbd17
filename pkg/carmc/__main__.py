import sys

import coloredlogs
import logging

from carmc.cli import main

"""

carmc checks safety properties of AIGER circuits with complementary approximate reachability: a forward
and a backward engine run side by side, the first conclusive verdict wins. Unsafe verdicts come with a
replayable witness, safe ones with a checkable inductive invariant.

"""


def run():
    logging_format = "%(asctime)s %(hostname)s %(name)s[%(process)d] %(levelname)s %(message)s"
    coloredlogs.install(level="INFO", fmt=logging_format, stream=sys.stderr)
    sys.exit(main())


if __name__ == "__main__":
    run()
