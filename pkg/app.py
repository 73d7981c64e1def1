import logging
from dataclasses import asdict
from flask import Flask
from utils.settings import load_settings

logger = logging.getLogger(__name__)

app = Flask(__name__)

settings = load_settings()
app.config["RELIC_SETTINGS"] = settings
app.config.update({f"RELIC_{k.upper()}": v for k, v in asdict(settings).items()})
app.config["MAX_CONTENT_LENGTH"] = 4 * 1024 * 1024  # 4MB max request body

try:
    from routes import *
except Exception as e:
    app.logger.error(f"Failed to initialize application: {str(e)}")
    raise
