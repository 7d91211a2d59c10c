"""Gym-style access to the native aquatic navigation environment."""

import numpy as np

from ._hydronav import (
    NUM_RAYS,
    OBSERVATION_SIZE,
    ConfigError,
    ContractViolation,
    DataError,
    EnvHandle,
    Error,
    NumericalError,
    UsageError,
    compute_gae,
    dense_reward,
    movement_reward,
    sensor_penalty,
    sparse_reward,
)

__all__ = [
    "NUM_RAYS",
    "OBSERVATION_SIZE",
    "Box",
    "ConfigError",
    "ContractViolation",
    "DataError",
    "Discrete",
    "Error",
    "NavEnv",
    "NumericalError",
    "UsageError",
    "compute_gae",
    "dense_reward",
    "make",
    "movement_reward",
    "sensor_penalty",
    "sparse_reward",
]


class Discrete:
    def __init__(self, n):
        self.n = int(n)
        self.shape = ()
        self.dtype = np.int64

    def sample(self, rng=None):
        rng = rng or np.random.default_rng()
        return int(rng.integers(self.n))

    def contains(self, x):
        return isinstance(x, (int, np.integer)) and 0 <= int(x) < self.n

    def __repr__(self):
        return f"Discrete({self.n})"


class Box:
    def __init__(self, low, high, shape, dtype=np.float64):
        self.shape = tuple(shape)
        self.dtype = np.dtype(dtype)
        self.low = np.full(self.shape, low, dtype=self.dtype)
        self.high = np.full(self.shape, high, dtype=self.dtype)

    def contains(self, x):
        x = np.asarray(x)
        return x.shape == self.shape and bool(np.all(x >= self.low) and np.all(x <= self.high))

    def __repr__(self):
        return f"Box({self.low.min()}, {self.high.max()}, {self.shape}, {self.dtype})"


class NavEnv:
    """reset/step/close over one native environment.

    Observations are float64 so values cross the boundary unchanged.
    """

    def __init__(self, scenario, seed=0):
        self._handle = EnvHandle(str(scenario), int(seed))
        self.action_space = Discrete(self._handle.action_count)
        self.observation_space = Box(-1.0, 1.0, (OBSERVATION_SIZE,))
        self.action_names = list(self._handle.action_names)

    def reset(self, seed=None):
        return self._handle.reset(seed)

    def step(self, action):
        return self._handle.step(int(action))

    def close(self):
        self._handle.close()

    @property
    def closed(self):
        return self._handle.closed

    @property
    def max_steps(self):
        return self._handle.max_steps

    @property
    def steps(self):
        return self._handle.steps

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make(scenario, seed=0):
    return NavEnv(scenario, seed)
