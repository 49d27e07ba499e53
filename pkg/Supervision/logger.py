import pytz
from logging import getLogger, FileHandler, StreamHandler, ERROR, Formatter, basicConfig, getLevelName
from datetime import datetime
from Supervision.config import Prep

try:
    TZ = pytz.timezone(Prep.TIMEZONE)
except pytz.UnknownTimeZoneError:
    TZ = pytz.utc

class ZonedFormatter(Formatter):
    def formatTime(self, record, datefmt=None):
        dt = datetime.fromtimestamp(record.created, TZ)
        return dt.strftime(datefmt or "%d-%b-%y %I:%M:%S %p")

formatter = ZonedFormatter("[%(asctime)s] [%(levelname)s] - %(message)s", "%d-%b-%y %I:%M:%S %p")
handlers = [StreamHandler()]
if Prep.LOG_FILE:
    handlers.append(FileHandler(Prep.LOG_FILE))
for handler in handlers:
    handler.setFormatter(formatter)

level = getLevelName(Prep.LOG_LEVEL)
if not isinstance(level, int):
    level = getLevelName("INFO")

basicConfig(
    handlers=handlers,
    level=level
)

getLogger("matplotlib").setLevel(ERROR)
getLogger("PIL").setLevel(ERROR)


LOGGER = getLogger("Supervision")
LOGGER.setLevel(level)
