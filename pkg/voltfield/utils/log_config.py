import logging

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

def setup_logging(level='INFO'):
    """
    Attach a single stream handler to the voltfield logger.

    Usage:
        setup_logging('DEBUG')

    Parameters:
        level -> [str or int, default='INFO'] logging level name or number

    Outputs:
        logger -> [logging.Logger] the package logger
    """
    logger = logging.getLogger('voltfield')
    if isinstance(level,str): level = level.upper()
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    return logger
