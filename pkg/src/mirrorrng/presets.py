"""Named device presets.

tsirelson-chsh
    State (|00> + |11>)/sqrt(2). Each player measures the observable
    cos(theta) Z + sin(theta) X; outcome 0 is the +1 eigenspace.
    Alice: theta = 0 (x = 0), pi/2 (x = 1).
    Bob:   theta = pi/4 (y = 0), -pi/4 (y = 1).
    Expected CHSH score (rescaled) (2 sqrt 2 - 2) / 6 = 0.1380711874...
classical-best
    Both players always output 0. Expected score exactly 0.
maximally-mixed-copyable
    State I/4 on two qubits; both players measure Z whatever the input.
    The purifying adversary copies both outputs exactly.
"""

from __future__ import annotations

import numpy as np

from .games import BellGame, QuantumStrategy, make_chsh_bell_game
from .linalg import DensityOperator, Povm

TSIRELSON_ALICE_ANGLES = (0.0, np.pi / 2)
TSIRELSON_BOB_ANGLES = (np.pi / 4, -np.pi / 4)
TSIRELSON_VALUE = (2 * np.sqrt(2) - 2) / 6

_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def binary_observable_povm(theta: float) -> Povm:
    obs = np.cos(theta) * _Z + np.sin(theta) * _X
    eye = np.eye(2)
    return Povm((0, 1), np.stack([(eye + obs) / 2, (eye - obs) / 2]))


def bell_state() -> DensityOperator:
    return DensityOperator.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2))


def tsirelson_strategy() -> QuantumStrategy:
    alice = tuple(binary_observable_povm(t) for t in TSIRELSON_ALICE_ANGLES)
    bob = tuple(binary_observable_povm(t) for t in TSIRELSON_BOB_ANGLES)
    return QuantumStrategy(bell_state(), (2, 2), (alice, bob))


def classical_best_strategy(n: int = 2) -> QuantumStrategy:
    zero = np.zeros((n, 1, 1))
    zero[0, 0, 0] = 1.0
    m = Povm(tuple(range(n)), zero)
    fam = tuple(m for _ in range(n))
    return QuantumStrategy(DensityOperator(np.ones((1, 1))), (1, 1), (fam, fam))


def maximally_mixed_copyable_strategy() -> QuantumStrategy:
    z = Povm.computational(2)
    fam = (z, z)
    return QuantumStrategy(DensityOperator.maximally_mixed(4), (2, 2), (fam, fam))


PRESETS = {
    "tsirelson-chsh": tsirelson_strategy,
    "classical-best": classical_best_strategy,
    "maximally-mixed-copyable": maximally_mixed_copyable_strategy,
}


def preset(name: str) -> tuple[BellGame, QuantumStrategy]:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return make_chsh_bell_game(), factory()
