"""
Console Messages
Tagged progress lines on stderr, e.g. "[Upper] L=3 solved in 21 Newton steps".
"""
import sys

_quiet = False


def set_quiet(quiet: bool) -> None:
    global _quiet
    _quiet = quiet


def log(tag: str, message: str, force: bool = False) -> None:
    """Print a tagged line to stderr unless quiet mode is on (force overrides)."""
    if _quiet and not force:
        return
    print(f"[{tag}] {message}", file=sys.stderr, flush=True)


def warn(tag: str, message: str) -> None:
    log(tag, f"WARNING: {message}", force=True)
