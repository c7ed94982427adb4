import socket
import struct
import time
import zlib

import numpy as np
import pytest

from voltfield import run_day
from voltfield.telemetry.tm_codec import DATAGRAM_SIZE,FLAG_ACTUATION,MAGIC,MeasurementDatagram,decode,encode
from voltfield.telemetry.tm_concentrate import BoundedQueue,PhasorDataConcentrator,UdpReceiver
from voltfield.telemetry.tm_publish import PmuPublisher,TelemetryLink
from voltfield.utils.errors import CrcMismatch,DatagramError

T0 = 1658102400000 # 2022-07-18T00:00:00 UTC

class FakeClock(object):

    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

class RecordingSocket(object):

    def __init__(self,fail=False):
        self.sent = []
        self.fail = fail

    def sendto(self,data,endpoint):
        if self.fail:
            raise OSError('network unreachable')
        self.sent.append((data,endpoint))

def _dgram(sensor,ts=T0,**kw):
    return MeasurementDatagram(sensor,sensor,ts,1.0 + 0.001*sensor,1500.0,-20.0,**kw)

# codec

def test_codec_round_trip():
    dgram = MeasurementDatagram(3,7,T0 + 42,1.0123456789,1500.5,-20.25,seq=9)
    data = encode(dgram)
    assert len(data) == DATAGRAM_SIZE == 40
    assert data[:2] == struct.pack('<H',MAGIC)
    assert decode(data) == dgram
    assert not dgram.is_actuation
    assert MeasurementDatagram(0,1,T0,0.0,1.0,0.0,flags=FLAG_ACTUATION).is_actuation

def test_codec_round_trip_fuzzed(rng):
    n = 100000
    ids = rng.integers(0,0xFFFF,size=(n,2),endpoint=True)
    stamps = rng.integers(0,2**63,size=n,dtype=np.uint64)
    seqs = rng.integers(0,0xFFFFFFFF,size=n,endpoint=True)
    flags = rng.integers(0,0xFF,size=n,endpoint=True)
    v = rng.uniform(0.8,1.2,size=n)
    pq = rng.standard_normal((n,2))*10.0**rng.integers(-3,6,size=(n,2))
    for k in range(n):
        dgram = MeasurementDatagram(int(ids[k,0]),int(ids[k,1]),int(stamps[k]),float(v[k]),float(pq[k,0]),
                                    float(pq[k,1]),int(seqs[k]),int(flags[k]))
        assert decode(encode(dgram)) == dgram

def test_codec_single_precision_fields():
    dgram = MeasurementDatagram(1,1,T0,0.1,0.1,-0.1)
    assert dgram.v_pu == 0.1
    assert dgram.p_w == struct.unpack('<f',struct.pack('<f',0.1))[0]
    assert dgram.q_var == -dgram.p_w
    assert decode(encode(dgram)) == dgram

def test_codec_rejects_corruption():
    data = bytearray(encode(_dgram(1)))
    data[20] ^= 0xFF
    with pytest.raises(CrcMismatch):
        decode(bytes(data))
    with pytest.raises(DatagramError):
        decode(encode(_dgram(1))[:-1])
    body = bytearray(encode(_dgram(1))[:36])
    body[0:2] = struct.pack('<H',0x1234)
    with pytest.raises(DatagramError,match='magic'):
        decode(bytes(body) + struct.pack('<I',zlib.crc32(bytes(body))))
    body = bytearray(encode(_dgram(1))[:36])
    body[2] = 9
    with pytest.raises(DatagramError,match='version'):
        decode(bytes(body) + struct.pack('<I',zlib.crc32(bytes(body))))

def test_codec_field_ranges():
    with pytest.raises(ValueError):
        encode(MeasurementDatagram(70000,1,T0,1.0,0.0,0.0))
    with pytest.raises(ValueError):
        encode(MeasurementDatagram(1,1,-5,1.0,0.0,0.0))
    with pytest.raises(ValueError):
        encode(MeasurementDatagram(1,1,T0,1.0,1e40,0.0))

# concentrator

def test_complete_frame():
    pdc = PhasorDataConcentrator([1,2,3])
    assert pdc.add(_dgram(1)) == []
    assert pdc.add(_dgram(2,ts=T0 + 30)) == []
    frames = pdc.add(_dgram(3,ts=T0 - 20))
    assert len(frames) == 1
    frame = frames[0]
    assert frame.complete and frame.timestamp_ms == T0
    assert frame.by_bus()[2] == pytest.approx((1.002,1500.0,-20.0))
    assert pdc.counters['frames_complete'] == 1 and pdc.n_pending == 0

def test_partial_frame_after_window():
    clock = FakeClock()
    pdc = PhasorDataConcentrator([1,2,3],alignment_ms=100,clock=clock)
    pdc.add(_dgram(1))
    pdc.add(_dgram(3))
    assert pdc.poll() == []
    clock.now = 0.15
    frames = pdc.poll()
    assert len(frames) == 1
    assert not frames[0].complete
    assert frames[0].bitmap == 0b101
    assert pdc.counters['frames_partial'] == 1

def test_duplicates_and_late_data():
    clock = FakeClock()
    pdc = PhasorDataConcentrator([1,2],alignment_ms=100,clock=clock)
    pdc.add(_dgram(1))
    pdc.add(_dgram(1))
    assert pdc.counters['duplicates'] == 1
    pdc.add(_dgram(2))
    # already released
    pdc.add(_dgram(2))
    assert pdc.counters['duplicates'] == 2
    # outside the alignment window of any instant
    pdc.add(_dgram(1,ts=T0 + 1400))
    assert pdc.counters['late'] == 1
    # older instant than the last released one
    pdc.add(_dgram(1,ts=T0 - 1000))
    assert pdc.counters['late'] == 2
    assert pdc.n_pending == 0

def test_pending_bound():
    pdc = PhasorDataConcentrator([1,2,3],alignment_ms=100,period_ms=1000)
    assert pdc.max_pending == 1
    pdc.add(_dgram(1))
    frames = pdc.add(_dgram(1,ts=T0 + 1000))
    assert [f.timestamp_ms for f in frames] == [T0]
    assert not frames[0].complete
    assert pdc.n_pending == 1
    assert [f.timestamp_ms for f in pdc.flush()] == [T0 + 1000]

def test_ingest_counters():
    pdc = PhasorDataConcentrator([1])
    bad = bytearray(encode(_dgram(1)))
    bad[-1] ^= 0x01
    assert pdc.ingest(bytes(bad)) == []
    assert pdc.ingest(b'\x00'*12) == []
    pdc.ingest(encode(_dgram(5)))
    pdc.ingest(encode(MeasurementDatagram(0,1,T0,0.0,100.0,0.0,flags=FLAG_ACTUATION)))
    assert pdc.ingest(encode(_dgram(1)))[0].complete
    c = pdc.counters
    assert (c['crc_failures'],c['malformed'],c['unknown_sensor'],c['actuations'],c['received']) == (1,1,1,1,3)
    with pytest.raises(ValueError):
        PhasorDataConcentrator([1,1])

def test_bounded_queue_drops_oldest():
    q = BoundedQueue(3)
    for k in range(5):
        q.put(k)
    assert len(q) == 3
    assert q.dropped == 2
    assert q.drain() == [2,3,4]
    assert q.get() is None
    with pytest.raises(ValueError):
        BoundedQueue(0)

# publisher

def test_publisher_sends_one_datagram_per_bus():
    sock = RecordingSocket()
    pub = PmuPublisher([1,4],('127.0.0.1',9),sock=sock)
    v,p,q = np.linspace(1,1.1,6),np.arange(6.0)*100,-np.arange(6.0)
    pub.publish(T0,v,p,q)
    pub.publish(T0 + 1000,v,p,q)
    got = [decode(data) for data,_ in sock.sent]
    assert [(d.sensor_id,d.bus,d.seq) for d in got] == [(1,1,0),(2,4,0),(1,1,1),(2,4,1)]
    assert got[1].v_pu == v[4] and got[1].p_w == 400.0 and got[1].q_var == -4.0
    pub.actuate(T0,[4],[1234.5],[-10.0])
    assert decode(sock.sent[-1][0]).is_actuation
    assert pub.sent == 5

def test_publisher_counts_send_errors():
    pub = PmuPublisher([1],('127.0.0.1',9),sock=RecordingSocket(fail=True))
    for k in range(3):
        pub.publish(T0 + 1000*k,[1.0,1.0],[0.0,0.0],[0.0,0.0])
    assert pub.send_errors == 3 and pub.sent == 0

# loopback

def test_loopback_soak():
    buses = list(range(1,15))
    pdc = PhasorDataConcentrator(list(range(1,15)),alignment_ms=100)
    rx = UdpReceiver(pdc,queue_size=1000).start()
    pub = PmuPublisher(buses,rx.address)
    v,p,q = np.ones(15),np.full(15,500.0),np.zeros(15)
    try:
        for k in range(600):
            pub.publish(T0 + 1000*k,v,p,q)
            time.sleep(0.001)
    finally:
        time.sleep(0.3)
        rx.stop()
        pub.close()
    frames = rx.frames.drain()
    c = rx.counters()
    assert c['crc_failures'] == 0 and c['malformed'] == 0
    assert c['frames_complete'] >= 0.999*600
    stamps = [f.timestamp_ms for f in frames]
    assert stamps == sorted(set(stamps))
    assert c['dropped_frames'] == 0

def test_telemetry_link():
    with TelemetryLink([1,2,3]) as link:
        for k in range(5):
            link.publish(T0 + 1000*k,np.ones(4),np.zeros(4),np.zeros(4))
            time.sleep(0.01)
        link.actuate(T0 + 5000,[2],[100.0],[0.0])
    c = link.counters()
    assert c['sent'] == 16
    assert c['actuations'] == 1
    assert c['frames_complete'] == 5
    assert len(link.frames()) == 5

def test_run_with_telemetry(short_scenario):
    config = short_scenario.with_overrides(duration_s=120,telemetry=True)
    link = TelemetryLink.from_config(config).start()
    try:
        runlog = run_day(config,telemetry=link)
    finally:
        link.stop()
    assert 'sent' in runlog.counters
    c = link.counters()
    assert c['sent'] + 13*c['dropped_snapshots'] >= 120*13
    assert c['crc_failures'] == 0

def test_receiver_binds_free_port():
    rx = UdpReceiver(PhasorDataConcentrator([1]))
    host,port = rx.address
    assert port > 0
    probe = socket.socket(socket.AF_INET,socket.SOCK_DGRAM)
    probe.sendto(encode(_dgram(1)),(host,port))
    probe.close()
    rx.start()
    frame = rx.frames.get(timeout=2)
    rx.stop()
    assert frame is not None and frame.complete
