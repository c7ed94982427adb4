import logging
import socket
import threading
import time

from .tm_codec import FLAG_ACTUATION,MeasurementDatagram,encode
from .tm_concentrate import BoundedQueue,PhasorDataConcentrator,UdpReceiver

log = logging.getLogger(__name__)

class PmuPublisher(object):
    """
    class PmuPublisher

    Emulated PMUs: one datagram per monitored bus and snapshot, sent fire-and-forget over UDP.

    Usage:
        pub = PmuPublisher([1,2,3],('127.0.0.1',4712))
        pub.publish(1696161600000,v,p,q)

    Inputs:
        buses -> [list of int] monitored bus indices; sensor ids are 1,2,... in this order
        endpoint -> [tuple] (host, port) of the concentrator
    """

    def __init__(self,buses,endpoint,sock=None):
        self.buses = [int(b) for b in buses]
        self.sensor_ids = list(range(1,len(self.buses)+1))
        self.endpoint = tuple(endpoint)
        self._own_sock = sock is None
        self._sock = socket.socket(socket.AF_INET,socket.SOCK_DGRAM) if sock is None else sock
        self._seq = [0]*len(self.buses)
        self.sent = 0
        self.send_errors = 0

    def _send(self,data):
        try:
            self._sock.sendto(data,self.endpoint)
            self.sent += 1
        except OSError as err:
            self.send_errors += 1
            # one warning, then quiet
            if self.send_errors == 1:
                log.warning('telemetry send to %s:%d failed: %s',self.endpoint[0],self.endpoint[1],err)
            else:
                log.debug('telemetry send failed: %s',err)

    def publish(self,timestamp_ms,v,p,q):
        """
        Send the readings of every monitored bus.

        Inputs:
            timestamp_ms -> [int] ms since the Unix epoch
            v,p,q -> [float arrays] per bus of the network (pu, W, var)
        """
        for i,(sensor,bus) in enumerate(zip(self.sensor_ids,self.buses)):
            dgram = MeasurementDatagram(sensor,bus,int(timestamp_ms),float(v[bus]),float(p[bus]),float(q[bus]),seq=self._seq[i])
            self._seq[i] = (self._seq[i] + 1) & 0xFFFFFFFF
            self._send(encode(dgram))

    def actuate(self,timestamp_ms,plant_buses,p_sp,q_sp):
        """Send plant setpoints as actuation messages (sensor id 0)."""
        for bus,p,q in zip(plant_buses,p_sp,q_sp):
            self._send(encode(MeasurementDatagram(0,int(bus),int(timestamp_ms),0.0,float(p),float(q),flags=FLAG_ACTUATION)))

    def close(self):
        if self._own_sock:
            self._sock.close()

class TelemetryLink(object):
    """
    class TelemetryLink

    PMU to concentrator loopback running beside the simulation. Snapshots handed to publish() are
    queued (drop-oldest) and sent by a background thread; a UdpReceiver aligns them into frames.

    Usage:
        with TelemetryLink([1,2,3]) as link:
            link.publish(ts,v,p,q)
        print(link.counters())

    Inputs:
        buses -> [list of int] monitored bus indices

    Parameters:
        host,port -> [str,int] receiver address; port 0 picks a free port
        alignment_ms -> [float, default=100] concentrator alignment window
        queue_size -> [int, default=64] capacity of the snapshot and frame queues
        endpoint -> [tuple, default=None] send elsewhere instead of to the local receiver
    """

    def __init__(self,buses,host='127.0.0.1',port=0,alignment_ms=100.0,queue_size=64,endpoint=None):
        self.buses = [int(b) for b in buses]
        self.host,self.port = host,int(port)
        self.alignment_ms = alignment_ms
        self.queue_size = int(queue_size)
        self._endpoint = endpoint
        self._snapshots = BoundedQueue(self.queue_size)
        self._stop = threading.Event()
        self._thread = None
        self.receiver = None
        self.publisher = None

    @staticmethod
    def from_config(config):
        """Link for the PMU buses and parameters of a ScenarioConfig."""
        tm = config.telemetry
        return TelemetryLink(config.pmu_buses(),host=tm.host,port=tm.port,alignment_ms=tm.alignment_ms,queue_size=tm.queue_size)

    def start(self):
        if self._thread is not None: return self
        pdc = PhasorDataConcentrator(list(range(1,len(self.buses)+1)),alignment_ms=self.alignment_ms)
        self.receiver = UdpReceiver(pdc,self.host,self.port,queue_size=self.queue_size).start()
        self.publisher = PmuPublisher(self.buses,self._endpoint or self.receiver.address)
        self._stop.clear()
        self._thread = threading.Thread(target=self._run,name='voltfield-pmu',daemon=True)
        self._thread.start()
        return self

    def _run(self):
        while True:
            item = self._snapshots.get(timeout=0.05)
            if item is None:
                if self._stop.is_set(): return
                continue
            kind,args = item
            if kind == 'measure':
                self.publisher.publish(*args)
            else:
                self.publisher.actuate(*args)

    def publish(self,timestamp_ms,v,p,q):
        """Queue one snapshot; never blocks."""
        self._snapshots.put(('measure',(timestamp_ms,list(v),list(p),list(q))))

    def actuate(self,timestamp_ms,plant_buses,p_sp,q_sp):
        self._snapshots.put(('actuate',(timestamp_ms,list(plant_buses),list(p_sp),list(q_sp))))

    def frames(self):
        """Aligned frames received so far."""
        return self.receiver.frames.drain() if self.receiver is not None else []

    def stop(self,settle_s=0.2):
        """Send what is queued, let the receiver drain, then close everything."""
        if self._thread is None: return
        self._stop.set()
        self._thread.join()
        self._thread = None
        time.sleep(settle_s)
        self.receiver.stop()
        self.publisher.close()
        log.info('telemetry stopped: %s',self.counters())

    def counters(self):
        out = {'sent':0,'send_errors':0,'dropped_snapshots':self._snapshots.dropped}
        if self.publisher is not None:
            out['sent'],out['send_errors'] = self.publisher.sent,self.publisher.send_errors
        if self.receiver is not None:
            out.update(self.receiver.counters())
        return out

    def __enter__(self):
        return self.start()

    def __exit__(self,*exc):
        self.stop()
        return False
