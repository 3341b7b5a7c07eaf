import sys

from src.application.cli import CLI

if __name__ == "__main__":
    cli: CLI = CLI()
    sys.exit(cli.run())
