"""Operation counting and workspace accounting.

Counts are kept at complex-operation granularity: a length-m dot product is
m multiplies and m-1 adds, an axpy is m multiplies and m adds.  ``real_flops``
converts with 6 real flops per complex multiply and 2 per complex add.
"""
from dataclasses import dataclass

import numpy as np


@dataclass
class FlopCounter:
    adds: int = 0
    muls: int = 0
    divs: int = 0
    sqrts: int = 0

    def reset(self):
        self.adds = self.muls = self.divs = self.sqrts = 0

    @property
    def total(self):
        """Complex operations of any kind."""
        return self.adds + self.muls + self.divs + self.sqrts

    @property
    def real_flops(self):
        return 6 * self.muls + 2 * self.adds + 6 * self.divs + self.sqrts

    # kernel shorthands
    def dot(self, m):
        self.muls += m
        self.adds += m - 1

    def axpy(self, m):
        self.muls += m
        self.adds += m

    def nrm2(self, m):
        self.dot(m)
        self.sqrts += 1

    def scal(self, m):
        self.muls += m

    def gemv(self, m, r):
        self.muls += m * r
        self.adds += (m - 1) * r

    def ger(self, m, r):
        self.muls += m * r
        self.adds += m * r


class Workspace:
    """Allocator for the named arrays an algorithm keeps alive.

    Every array an algorithm needs beyond its read-only inputs is obtained
    here, so ``peak`` is the exact auxiliary footprint in complex words.
    Arrays are column-major so that column views are contiguous.
    """

    def __init__(self):
        self.words = 0
        self.peak = 0
        self._arrays = {}

    def panel(self, name, rows, cols):
        return self._alloc(name, (rows, cols))

    def vector(self, name, length):
        return self._alloc(name, (length,))

    def _alloc(self, name, shape):
        if name in self._arrays:
            raise KeyError(f"workspace array {name!r} already allocated")
        arr = np.zeros(shape, dtype=np.complex128, order="F")
        self._arrays[name] = arr
        self.words += arr.size
        self.peak = max(self.peak, self.words)
        return arr

    def release(self, name):
        arr = self._arrays.pop(name)
        self.words -= arr.size

    def __contains__(self, name):
        return name in self._arrays

    def layout(self):
        return {name: arr.shape for name, arr in self._arrays.items()}
