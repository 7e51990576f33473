"""Reference plants and the regimes of the two bundled demos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lti import StateSpaceModel

# Zero-order-hold discretisation (h = 0.2 s) of the linearised batch reactor,
# kept at full precision: the 3-decimal rounding shifts Z by up to 6e-3.
_BR_AB = np.array([
    [1.4272830159837626, 0.03886945796122874, 0.8534915461333579, -0.6220850674362388, 0.03356634019840643, -0.3046107739584317],
    [-0.09556449388581977, 0.45490731831492603, -0.03433222918377129, 0.10916813144246132, 0.7868564566944175, 0.008182364008337648],
    [0.11495237542328333, 0.5379487626365839, 0.3836984238777238, 0.5289585290406799, 0.5710296892041856, -0.3795730763572757],
    [-0.011709433981899671, 0.5366240868001861, 0.12189422043898573, 0.7764858632656519, 0.5697213556840612, -0.050354324994843325],
])
_BR_AB_ROUNDED = np.array([
    [1.427, 0.039, 0.854, -0.622, 0.034, -0.305],
    [-0.096, 0.455, -0.034, 0.109, 0.787, 0.008],
    [0.115, 0.538, 0.384, 0.529, 0.571, -0.380],
    [-0.012, 0.537, 0.122, 0.777, 0.570, -0.050],
])
_BR_C = np.array([[1.0, 0, 1, -1], [0, 1, 0, 0]])

# one-step predictor of the batch reactor, 3 decimals
BATCH_REACTOR_Z = np.array([
    [-0.374, -0.714, 1.870, 1.870, -1.311, 0.317, 0.035, -0.634],
    [-0.016, -0.289, -0.037, 1.173, -0.524, 0.007, 0.787, 0.008],
])

SMALL_PLANT_Z_AUG = np.array([
    [0.0, 0, 0, 1, -1, -1, 3, 1],
    [1.0, -1, 0, 1, -2, -2, 2, 2],
])


def batch_reactor(rounded: bool = False) -> StateSpaceModel:
    """Unstable 4-state, 2-input, 2-output batch reactor (sampled at 0.2 s)."""
    AB = _BR_AB_ROUNDED if rounded else _BR_AB
    return StateSpaceModel(AB[:, :4], AB[:, 4:], _BR_C)


def small_plant() -> StateSpaceModel:
    """Marginally unstable 3-state plant with p * ell = 4 > n."""
    A = np.array([[0.0, 1, 0], [-1, 0, 0], [0, 0, 1]])
    B = np.array([[1.0, 0], [0, 1], [1, 0]])
    C = np.array([[1.0, 0, 1], [0, 1, 1]])
    return StateSpaceModel(A, B, C)


@dataclass(frozen=True)
class DemoRegime:
    name: str
    ell: int
    num_experiments: int
    samples_per_experiment: int
    input_bound: float
    du_bar: float
    dy_bar: float
    theta_scale: float = 2.0
    x0_bound: float = 1.0
    augmented: bool = False
    runtime_x0: tuple = ()
    runtime_horizon: int = 0

    def model(self) -> StateSpaceModel:
        return batch_reactor() if self.name == "batch-reactor" else small_plant()


DEMOS = {
    "batch-reactor": DemoRegime("batch-reactor", ell=2, num_experiments=10, samples_per_experiment=4,
                                input_bound=20.0, du_bar=0.01, dy_bar=0.01, x0_bound=10.0),
    "augmented": DemoRegime("augmented", ell=2, num_experiments=1, samples_per_experiment=32,
                            input_bound=2.0, du_bar=0.01, dy_bar=0.01, augmented=True,
                            runtime_x0=(-0.07, -2.19, -2.49), runtime_horizon=200),
}
