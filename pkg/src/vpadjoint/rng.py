"""xorshift64* generator, so instances are reproducible bit for bit from a
seed independently of numpy's generators."""
import numpy as np

MASK = (1 << 64) - 1
MULT = 2685821657736338717
# xorshift has an all-zero fixed point; seed 0 is mapped to this constant
ZERO_SEED = 0x9E3779B97F4A7C15


class XorShift64Star:
    def __init__(self, seed):
        seed = int(seed) & MASK
        self.state = seed if seed else ZERO_SEED

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK
        x ^= x >> 27
        self.state = x
        return (x * MULT) & MASK

    def uniform(self):
        """Double in [-1, 1): the top 53 output bits scaled."""
        return (self.next_u64() >> 11) * (2.0 / (1 << 53)) - 1.0

    def uniform_array(self, count):
        return np.array([self.uniform() for _ in range(count)])

    def real_matrix(self, rows, cols):
        """Entries drawn in row-major order."""
        return self.uniform_array(rows * cols).reshape(rows, cols)

    def complex_matrix(self, rows, cols):
        """Row-major; real part then imaginary part of each entry."""
        v = self.uniform_array(2 * rows * cols).reshape(rows, cols, 2)
        return v[..., 0] + 1j * v[..., 1]
