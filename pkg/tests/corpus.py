"""Shared instance corpus and run recorders for the loop and acceptance tests."""

from dataclasses import dataclass, field

import numpy as np

from qipm.instances import random_feasible_instance
from qipm.loop import SolverConfig, run


def instance(n, index, base_seed=0):
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(n, index))
    return random_feasible_instance(n, rng=np.random.default_rng(seq))


@dataclass
class Recorded:
    report: object
    steps: list = field(default_factory=list)  # (state, direction, new_state, row)

    @property
    def predictor_steps(self):
        return [s for s in self.steps if s[3].gamma == 0]

    @property
    def corrector_steps(self):
        return [s for s in self.steps if s[3].gamma == 1]


def recorded_run(problem, config=None):
    steps = []
    report = run(problem, config or SolverConfig(),
                 observer=lambda *args: steps.append(args))
    return Recorded(report=report, steps=steps)
