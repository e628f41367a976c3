"""Pure-Python (numpy) twin of the compiled scaling kernel.

Used when the compiled extension is unavailable.  The parallel path chunks
the array across a thread pool; numpy ufuncs release the GIL, so threads can
overlap on multi-core hosts.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def _apply(func_id, chunk, out):
    if func_id == 0:
        np.sqrt(chunk, out=out)
    elif func_id == 1:
        np.add(chunk, 1.0, out=out)
        np.log2(out, out=out)
    elif func_id == 2:
        np.cbrt(chunk, out=out)
    else:
        raise ValueError("unknown function id %d" % func_id)


def scale_into(active, func_id, divisor, out, num_threads):
    n = active.shape[0]
    if out.shape[0] != n:
        raise ValueError("output length mismatch")

    if num_threads <= 1 or n < 4096:
        _apply(func_id, active, out)
    else:
        bounds = np.linspace(0, n, num_threads + 1, dtype=np.intp)
        with ThreadPoolExecutor(max_workers=num_threads) as pool:
            futures = [
                pool.submit(_apply, func_id, active[lo:hi], out[lo:hi])
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()
    if divisor != 1.0:
        np.multiply(out, 1.0 / divisor, out=out)
