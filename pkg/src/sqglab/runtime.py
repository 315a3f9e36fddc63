"""Process-wide knobs for worker counts."""

import os

workers = 1


def set_threads(n: int | None) -> None:
    """Cap FFT workers and BLAS threads at ``n`` (None leaves defaults)."""
    global workers
    if n is None:
        return
    if n < 1:
        raise ValueError("thread count must be >= 1")
    workers = int(n)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(limits=n)
