import threading

VERBOSE = False
FLUSH = False

# worker threads share stdout during snapshot and validation sweeps
_LOCK = threading.Lock()


def _emit(ctx, args):
    with _LOCK:
        print(f"({ctx})", *args, flush=FLUSH)


def debug(*args, ctx="DD"):
    if not VERBOSE:
        return

    # allow blank lines without context
    if len(args) == 0 or (len(args) == 1 and args[0] == ""):
        print("", flush=FLUSH)
        return
    _emit(ctx, args)


def warn(*args, ctx="WW"):
    _emit(ctx, args)


def error(*args, ctx="EE"):
    _emit(ctx, args)


def log(*args, ctx="--"):
    _emit(ctx, args)


def info(*args, ctx="--"):
    log(*args, ctx=ctx)


def progress(done, total, what, ctx="..", every=10):
    """Log sweep progress every ``every`` items and at the end."""
    if total <= 0:
        return
    if done == total or done % every == 0:
        log(f"{what}: {done}/{total}", ctx=ctx)
