import numpy as np


class CompensatedSum:
    """Neumaier-compensated running sums, one per sample"""

    def __init__(self, shape=()):
        self.total = np.zeros(shape, dtype=np.float64)
        self.comp = np.zeros(shape, dtype=np.float64)

    def add_at(self, idx, values):
        """Accumulate values into the entries selected by idx (idx entries unique)"""
        values = np.asarray(values, dtype=np.float64)
        old = self.total[idx]
        t = old + values
        big = np.abs(old) >= np.abs(values)
        self.comp[idx] += np.where(big, (old - t) + values, (values - t) + old)
        self.total[idx] = t

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp
