"""Run the service: python -m ringvault.server [--config path]"""

import argparse
from pathlib import Path

import uvicorn

from .app import create_app
from .config import load_config


def main() -> None:
    parser = argparse.ArgumentParser(prog="ringvault-server")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file (env RINGVAULT_* overrides)")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args()

    config = load_config(args.config)
    if args.host:
        config.listen_host = args.host
    if args.port:
        config.listen_port = args.port
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port,
                log_level="warning")


if __name__ == "__main__":
    main()
