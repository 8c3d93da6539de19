import time
from functools import wraps

from .logger import debug


def benchit(fn):
    """Log the wall time of each call at debug level."""

    @wraps(fn)
    def fni(*args, **kwargs):
        a = time.perf_counter_ns()
        res = fn(*args, **kwargs)
        b = time.perf_counter_ns()
        tm = (b - a) // 1000
        units = "us"
        if tm > 5000:
            tm = round(tm / 1000, 1)
            units = "ms"
        debug(f"TIME: {fn.__name__} {tm} {units}")
        return res

    return fni


class Stopwatch:
    """Accumulating timer; ``with sw.section("name"):`` adds to a bucket."""

    def __init__(self):
        self._start = time.perf_counter()
        self.buckets = {}

    def elapsed(self):
        return time.perf_counter() - self._start

    def section(self, name):
        return _Section(self, name)


class _Section:
    def __init__(self, watch, name):
        self.watch = watch
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        dt = time.perf_counter() - self.t0
        buckets = self.watch.buckets
        buckets[self.name] = buckets.get(self.name, 0.0) + dt
        return False
