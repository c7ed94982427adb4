import struct
import zlib
from dataclasses import dataclass

from ..utils.errors import DatagramError,CrcMismatch

MAGIC = 0x5646 # 'VF'
VERSION = 1
FLAG_ACTUATION = 0x01

# magic, version, flags, sensor_id, bus, timestamp_ms, v_pu, p_w, q_var, seq
_BODY = struct.Struct('<HBBHHQdffI')
_CRC = struct.Struct('<I')
DATAGRAM_SIZE = _BODY.size + _CRC.size

_U16,_U32,_U64 = 0xFFFF,0xFFFFFFFF,0xFFFFFFFFFFFFFFFF
_F32 = struct.Struct('<f')

def _single(value):
    """Nearest single precision value; out of range values are left for encode to reject."""
    try:
        return _F32.unpack(_F32.pack(value))[0]
    except (OverflowError,struct.error):
        return value

@dataclass(frozen=True)
class MeasurementDatagram:
    """
    One sensor reading as carried on the wire.

    Attributes:
        sensor_id -> [int] u16 sensor identifier
        bus -> [int] u16 bus index in network order
        timestamp_ms -> [int] u64 milliseconds since the Unix epoch
        v_pu -> [float] voltage magnitude, pu (f64 on the wire)
        p_w,q_var -> [float] active and reactive injection, held at the f32 precision of the wire
        seq -> [int] u32 per-sensor sequence number
        flags -> [int] u8, FLAG_ACTUATION marks setpoint messages
        version -> [int] protocol version
    """
    sensor_id: int
    bus: int
    timestamp_ms: int
    v_pu: float
    p_w: float
    q_var: float
    seq: int = 0
    flags: int = 0
    version: int = VERSION

    def __post_init__(self):
        object.__setattr__(self,'p_w',_single(self.p_w))
        object.__setattr__(self,'q_var',_single(self.q_var))

    @property
    def is_actuation(self):
        return bool(self.flags & FLAG_ACTUATION)

def _check_range(name,value,upper):
    if not 0 <= value <= upper:
        raise ValueError('{:s}={!r} outside [0,{:d}]'.format(name,value,upper))

def encode(dgram):
    """
    Pack a datagram into its 40-byte little-endian form.

    Usage:
        data = encode(MeasurementDatagram(3,3,1696161600000,1.012,1500.,-20.))

    Outputs:
        data -> [bytes] body followed by the CRC32 (zlib) of the first 36 bytes
    """
    _check_range('sensor_id',dgram.sensor_id,_U16)
    _check_range('bus',dgram.bus,_U16)
    _check_range('timestamp_ms',dgram.timestamp_ms,_U64)
    _check_range('seq',dgram.seq,_U32)
    _check_range('flags',dgram.flags,0xFF)
    _check_range('version',dgram.version,0xFF)
    try:
        body = _BODY.pack(MAGIC,dgram.version,dgram.flags,dgram.sensor_id,dgram.bus,dgram.timestamp_ms,
                          dgram.v_pu,dgram.p_w,dgram.q_var,dgram.seq)
    except (OverflowError,struct.error) as exc:
        raise ValueError('datagram not representable: {}'.format(exc)) from exc
    return body + _CRC.pack(zlib.crc32(body))

def decode(data):
    """
    Unpack and validate a 40-byte datagram.

    Outputs:
        dgram -> [MeasurementDatagram]

    Raises:
        DatagramError: wrong size, magic number or protocol version
        CrcMismatch: the payload does not match its CRC
    """
    data = bytes(data)
    if len(data) != DATAGRAM_SIZE:
        raise DatagramError('datagram of {:d} bytes, expected {:d}'.format(len(data),DATAGRAM_SIZE))
    body = data[:_BODY.size]
    crc, = _CRC.unpack(data[_BODY.size:])
    if zlib.crc32(body) != crc:
        raise CrcMismatch('CRC mismatch')
    magic,version,flags,sensor_id,bus,timestamp_ms,v_pu,p_w,q_var,seq = _BODY.unpack(body)
    if magic != MAGIC:
        raise DatagramError('bad magic 0x{:04x}'.format(magic))
    if version != VERSION:
        raise DatagramError('unsupported protocol version {:d}'.format(version))
    return MeasurementDatagram(sensor_id,bus,timestamp_ms,v_pu,p_w,q_var,seq,flags,version)
