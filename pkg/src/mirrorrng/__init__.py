"""Private randomness from Bell violations: protocol simulation and numerical certification."""

from .bounds import (
    BoundReport,
    azuma_tail_bound,
    compare,
    gk_value_bound,
    guessing_event_bound,
    main_theorem_bound,
    optimal_k,
)
from .extract import (
    AffineHashFamily,
    BinaryField,
    apply_hash,
    build_hash_family,
    encode_outputs,
    verify_two_universality,
)
from .games import (
    BellGame,
    DeterministicStrategy,
    GuessingGame,
    QuantumStrategy,
    classical_value,
    expected_score,
    forced_classical_process,
    make_chsh_bell_game,
    make_guessing_game,
    seesaw_lower_bound,
)
from .linalg import (
    CqState,
    DensityOperator,
    Povm,
    PureState,
    canonical_purification,
    conjugate_povm,
    gentle_measurement_disturbance,
    pgp_bound_check,
    pretty_good_measurement,
    trace_norm_distance,
    verify_mirror_identity,
)
from .protocol import (
    DeviceModel,
    ProtocolConfig,
    exact_final_state,
    guessing_statistics,
    run_mirrored_protocol,
    run_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "azuma_tail_bound",
    "compare",
    "gk_value_bound",
    "guessing_event_bound",
    "main_theorem_bound",
    "optimal_k",
    "AffineHashFamily",
    "BinaryField",
    "apply_hash",
    "build_hash_family",
    "encode_outputs",
    "verify_two_universality",
    "BellGame",
    "DeterministicStrategy",
    "GuessingGame",
    "QuantumStrategy",
    "classical_value",
    "expected_score",
    "forced_classical_process",
    "make_chsh_bell_game",
    "make_guessing_game",
    "seesaw_lower_bound",
    "CqState",
    "DensityOperator",
    "Povm",
    "PureState",
    "canonical_purification",
    "conjugate_povm",
    "gentle_measurement_disturbance",
    "pgp_bound_check",
    "pretty_good_measurement",
    "trace_norm_distance",
    "verify_mirror_identity",
    "DeviceModel",
    "ProtocolConfig",
    "exact_final_state",
    "guessing_statistics",
    "run_mirrored_protocol",
    "run_protocol",
]
