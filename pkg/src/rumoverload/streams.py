"""
Seeded random streams and replication dispatch.

Every stochastic routine takes either an integer seed, a
`numpy.random.SeedSequence` or a ready `numpy.random.Generator`. Integer and
SeedSequence seeds are turned into a counter-based Philox generator, and
independent replications get their own child sequence via `spawn`, so
replication ``b`` always sees the same stream whatever the worker count.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def make_rng(seed):
    """
    Return a Philox based generator for an int, SeedSequence or Generator
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def replication_seeds(seed, count):
    """
    One child SeedSequence per replication, in replication order
    """
    if isinstance(seed, np.random.SeedSequence):
        parent = seed
    else:
        parent = np.random.SeedSequence(seed)
    return parent.spawn(count)


def map_replications(function, items, workers=1, label="Replication"):
    """
    Apply `function` to every item and return the results in item order.

    With workers > 1 the items are spread over that many processes, so
    `function` and its bound arguments must be picklable (a module level
    function, possibly wrapped in functools.partial). Progress is logged
    every tenth of the items.
    """
    items = list(items)
    total = len(items)
    step = total // 10 if total >= 10 else 0

    def progress(results):
        for done, result in enumerate(results, start=1):
            if step and done % step == 0:
                logger.info("%s %d of %d", label, done, total)
            yield result

    if workers > 1 and total > 1:
        chunksize = max(1, math.ceil(total / (4 * workers)))
        with ProcessPoolExecutor(max_workers=min(workers, total)) as pool:
            return list(progress(pool.map(function, items, chunksize=chunksize)))
    return list(progress(map(function, items)))
