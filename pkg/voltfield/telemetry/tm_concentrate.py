import logging
import queue
import socket
import threading
import time
from collections import OrderedDict,deque
from dataclasses import dataclass,field

from .tm_codec import decode
from ..utils.errors import CrcMismatch,DatagramError

log = logging.getLogger(__name__)

@dataclass
class AlignedFrame:
    """
    Snapshot of the grid assembled from the datagrams of one reporting instant.

    Attributes:
        timestamp_ms -> [int] reporting instant
        measurements -> [dict] sensor_id -> MeasurementDatagram
        bitmap -> [int] bit i set when the i-th expected sensor reported
        n_expected -> [int] number of expected sensors
    """
    timestamp_ms: int
    measurements: dict = field(default_factory=dict)
    bitmap: int = 0
    n_expected: int = 0

    @property
    def complete(self):
        return self.bitmap == (1 << self.n_expected) - 1

    def by_bus(self):
        """bus index -> (v_pu, p_w, q_var)"""
        return {d.bus:(d.v_pu,d.p_w,d.q_var) for d in self.measurements.values()}

class BoundedQueue(object):
    """Thread-safe FIFO that discards its oldest item when full."""

    def __init__(self,maxsize):
        if maxsize < 1: raise ValueError('maxsize must be positive')
        self._q = queue.Queue(maxsize)
        self._lock = threading.Lock()
        self.dropped = 0

    def put(self,item):
        with self._lock:
            while True:
                try:
                    self._q.put_nowait(item)
                    return
                except queue.Full:
                    try:
                        self._q.get_nowait()
                        self.dropped += 1
                    except queue.Empty:
                        pass

    def get(self,timeout=None):
        """Next item, or None after `timeout` seconds."""
        try:
            return self._q.get(timeout=timeout) if timeout else self._q.get_nowait()
        except queue.Empty:
            return None

    def drain(self):
        items = []
        while True:
            item = self.get()
            if item is None: return items
            items.append(item)

    def __len__(self):
        return self._q.qsize()

class PhasorDataConcentrator(object):
    """
    class PhasorDataConcentrator

    Groups measurement datagrams by reporting instant. A frame is released as soon as every
    expected sensor has reported, or as a partial frame once its alignment window has expired.

    Usage:
        pdc = PhasorDataConcentrator([1,2,3],alignment_ms=100)
        frames = pdc.ingest(data)

    Inputs:
        sensor_ids -> [list of int] expected sensors, bitmap order

    Parameters:
        alignment_ms -> [float, default=100] datagrams within this distance of a reporting instant belong
        to it; also the time a frame waits for stragglers
        period_ms -> [int, default=1000] reporting period
        clock -> [callable, default=time.monotonic] seconds, drives window expiry
    """

    def __init__(self,sensor_ids,alignment_ms=100.0,period_ms=1000,clock=time.monotonic):
        self.sensor_ids = list(sensor_ids)
        if len(set(self.sensor_ids)) != len(self.sensor_ids):
            raise ValueError('duplicated sensor ids')
        self._bit = {s:i for i,s in enumerate(self.sensor_ids)}
        self.alignment_ms = float(alignment_ms)
        self.period_ms = int(period_ms)
        self.clock = clock
        self.max_pending = int(self.alignment_ms // self.period_ms) + 1
        # timestamp -> (first arrival, frame)
        self._pending = OrderedDict()
        # instants already released and the sensors they held
        self._released = deque(maxlen=64)
        self._watermark = None
        self.counters = {'received':0,'crc_failures':0,'malformed':0,'late':0,'duplicates':0,'unknown_sensor':0,
                         'actuations':0,'frames_complete':0,'frames_partial':0}

    def __repr__(self):
        return 'instance of class PhasorDataConcentrator ({:d} sensors, {:d} pending)'.format(len(self.sensor_ids),len(self._pending))

    @property
    def n_pending(self):
        return len(self._pending)

    def _instant(self,timestamp_ms):
        return int(round(timestamp_ms/self.period_ms))*self.period_ms

    def _release(self,ts):
        _,frame = self._pending.pop(ts)
        self._released.append((ts,set(frame.measurements)))
        self._watermark = ts if self._watermark is None else max(self._watermark,ts)
        self.counters['frames_complete' if frame.complete else 'frames_partial'] += 1
        if not frame.complete:
            log.debug('partial frame at %d ms, bitmap %s',ts,bin(frame.bitmap))
        return frame

    def ingest(self,data):
        """Decode raw bytes and add them. Undecodable datagrams are counted and dropped."""
        try:
            dgram = decode(data)
        except CrcMismatch:
            self.counters['crc_failures'] += 1
            return []
        except DatagramError:
            self.counters['malformed'] += 1
            return []
        return self.add(dgram)

    def add(self,dgram):
        """
        Add a decoded datagram.

        Outputs:
            frames -> [list of AlignedFrame] frames released by this datagram
        """
        self.counters['received'] += 1
        if dgram.is_actuation:
            self.counters['actuations'] += 1
            return []
        if dgram.sensor_id not in self._bit:
            self.counters['unknown_sensor'] += 1
            return []
        ts = self._instant(dgram.timestamp_ms)
        if abs(dgram.timestamp_ms - ts) > self.alignment_ms:
            self.counters['late'] += 1
            return []
        if ts not in self._pending:
            if self._watermark is not None and ts <= self._watermark:
                seen = any(t == ts and dgram.sensor_id in s for t,s in self._released)
                self.counters['duplicates' if seen else 'late'] += 1
                return []
            self._pending[ts] = (self.clock(),AlignedFrame(ts,n_expected=len(self.sensor_ids)))
        frame = self._pending[ts][1]
        if dgram.sensor_id in frame.measurements:
            self.counters['duplicates'] += 1
            return []
        frame.measurements[dgram.sensor_id] = dgram
        frame.bitmap |= 1 << self._bit[dgram.sensor_id]

        out = []
        if frame.complete:
            out.append(self._release(ts))
        # bound the pending set, oldest first
        while len(self._pending) > self.max_pending:
            out.append(self._release(next(iter(self._pending))))
        return out

    def poll(self):
        """Release the frames whose alignment window has expired."""
        now = self.clock()
        expired = [ts for ts,(t0,_) in self._pending.items() if (now - t0)*1000 >= self.alignment_ms]
        return [self._release(ts) for ts in sorted(expired)]

    def flush(self):
        """Release every pending frame."""
        return [self._release(ts) for ts in sorted(self._pending)]

class UdpReceiver(object):
    """
    class UdpReceiver

    Background thread reading datagrams from a UDP socket into a PhasorDataConcentrator; released
    frames go to a bounded drop-oldest queue.

    Usage:
        rx = UdpReceiver(pdc,'127.0.0.1',0)
        rx.start()
        frame = rx.frames.get(timeout=1)
        rx.stop()
    """

    def __init__(self,concentrator,host='127.0.0.1',port=0,queue_size=64,poll_s=0.02):
        self.concentrator = concentrator
        self.frames = BoundedQueue(queue_size)
        self._sock = socket.socket(socket.AF_INET,socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET,socket.SO_RCVBUF,1 << 20)
        self._sock.bind((host,port))
        self._sock.settimeout(poll_s)
        self._stop = threading.Event()
        self._lock = threading.Lock()
        self._thread = None

    @property
    def address(self):
        return self._sock.getsockname()

    def _deliver(self,frames):
        for frame in frames:
            self.frames.put(frame)

    def _run(self):
        while not self._stop.is_set():
            try:
                data,_ = self._sock.recvfrom(2048)
            except socket.timeout:
                data = None
            except OSError as err:
                if self._stop.is_set(): break
                log.warning('receive failed: %s',err)
                continue
            with self._lock:
                if data is not None:
                    self._deliver(self.concentrator.ingest(data))
                self._deliver(self.concentrator.poll())

    def start(self):
        if self._thread is None:
            self._thread = threading.Thread(target=self._run,name='voltfield-pdc',daemon=True)
            self._thread.start()
            log.debug('receiver listening on %s:%d',*self.address)
        return self

    def stop(self,flush=True):
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        with self._lock:
            if flush:
                self._deliver(self.concentrator.flush())
        self._sock.close()

    def counters(self):
        with self._lock:
            out = dict(self.concentrator.counters)
        out['dropped_frames'] = self.frames.dropped
        return out
