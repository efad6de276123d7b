"""`python -m rendezvous` entry point."""
from __future__ import annotations

from rendezvous.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
