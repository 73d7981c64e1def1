import logging
import os
from utils.cli import main as cli_main

# Configure logging
logging.basicConfig(
    level=os.environ.get("RELIC_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    try:
        cli_main()
    except SystemExit:
        raise
    except Exception as e:
        logger.error(f"relic crashed: {str(e)}", exc_info=True)
        raise

if __name__ == "__main__":
    main()
