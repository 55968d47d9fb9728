"""Reference wire-protocol server backed by the oracle segmenter.

Serves one sequence per invocation, over stdio by default or a TCP port:

    python3 -m zsmat.oracle_server scenario.json
    python3 -m zsmat.oracle_server scenario.json --tcp 9009

Useful for exercising the exec/TCP transports without any real model and as
a living reference for external segmenter adapters.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from .protocol import serve_session
from .world import OracleSegmenter, scenario_from_dict


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", help="scenario JSON file defining the world")
    parser.add_argument("--tcp", type=int, default=None, metavar="PORT",
                        help="serve one connection on this TCP port instead of stdio")
    args = parser.parse_args(argv)

    with open(args.scenario, "r", encoding="utf-8") as fh:
        cfg = scenario_from_dict(json.load(fh))
    session = OracleSegmenter(cfg)

    if args.tcp is None:
        serve_session(session, sys.stdin, sys.stdout)
        return 0

    with socket.create_server(("127.0.0.1", args.tcp)) as server:
        conn, _ = server.accept()
        with conn:
            reader = conn.makefile("r")
            writer = conn.makefile("w")
            serve_session(session, reader, writer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
