import datetime
import logging
from logging.handlers import TimedRotatingFileHandler
import os

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def create_daily_rotating_log(path):
    """
    Creates a daily rotating log handler
    """
    handler = TimedRotatingFileHandler(path, when="MIDNIGHT", interval=1, backupCount=5)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    return handler


def return_log_directory():
    log_directory = os.environ.get("ELASTFEM_LOG_DIR", "./elastfem_logs")
    os.makedirs(log_directory, exist_ok=True)
    return log_directory


def get_elastfem_logger():
    """
    Package-wide logger writing to elastfem_<date>.log in the log directory.

    Handlers are attached once; later calls return the same configured logger.
    """
    logger = logging.getLogger('elastfem')
    logger.setLevel(logging.INFO)
    if not any(isinstance(h, TimedRotatingFileHandler) for h in logger.handlers):
        log_filename = os.path.join(
            return_log_directory(),
            'elastfem_{}.log'.format(datetime.datetime.now().strftime("%Y-%m-%d")),
        )
        logger.addHandler(create_daily_rotating_log(log_filename))
    return logger
