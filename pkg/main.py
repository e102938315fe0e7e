"""
CLI Entry Point
Run with: python main.py <command> [flags]
"""
import sys

from dotenv import load_dotenv

# Load environment variables (DIDCAP_*) from .env before the settings import
load_dotenv()

from app import main  # noqa: E402  (import after load_dotenv)

if __name__ == "__main__":
    sys.exit(main())
