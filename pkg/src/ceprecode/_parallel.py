import os
from concurrent.futures import ThreadPoolExecutor

WORKERS_ENV = "CE_PRECODE_WORKERS"


def resolve_workers(workers=None):
    """Explicit value, else $CE_PRECODE_WORKERS, else 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else 1
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def map_trials(fn, count, workers=None):
    """``[fn(0), ..., fn(count - 1)]``, optionally on a thread pool.

    Each trial must be a pure function of its index. Results come back in
    index order, so any reduction over them is worker-count independent.
    The heavy kernels release the GIL.
    """
    workers = resolve_workers(workers)
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))
