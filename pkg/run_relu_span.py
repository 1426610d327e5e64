import sys

from src.cli.commands import main
from src.config.settings import load_settings


# Loading environment variables (RELU_SPAN_THREADS, RELU_SPAN_LOG_LEVEL)
load_settings()

if __name__ == "__main__":
    sys.exit(main())
