import logging

import numpy as np
import pytest

from voltfield.utils.errors import ConfigError,NetworkValidationError,VoltfieldError
from voltfield.utils.log_config import setup_logging
from voltfield.utils.time_utils import epoch_ms,iso2sod,sod2iso

def test_iso2sod():
    sods = iso2sod(['2022-07-18 00:00:30','2022-07-18T12:00:00','13:30:15.5'])
    assert np.allclose(sods,[30,43200,48615.5])
    with pytest.raises(ValueError):
        iso2sod(['noon'])

def test_sod2iso_and_epoch():
    assert list(sod2iso('2022-07-18',[0,30])) == ['2022-07-18T00:00:00.000','2022-07-18T00:00:30.000']
    assert epoch_ms('2022-07-18',0) == 1658102400000
    assert epoch_ms('2022-07-18',1.5) == 1658102401500

def test_error_hierarchy():
    err = NetworkValidationError('buses[1].type','second slack bus')
    assert isinstance(err,ConfigError) and isinstance(err,VoltfieldError)
    assert err.field == 'buses[1].type'
    assert str(err) == 'buses[1].type: second slack bus'

def test_setup_logging():
    logger = setup_logging('debug')
    assert logger.level == logging.DEBUG
    n = len(logger.handlers)
    setup_logging('INFO')
    assert len(logger.handlers) == n
    assert logger.level == logging.INFO
