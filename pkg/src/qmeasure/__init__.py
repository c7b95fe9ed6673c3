"""Quantum measure theory on finite history spaces.

Histories, events, and decoherence functionals; causal orders and the
causality checks they support (persistence of zero, lack of novelty,
event-operator commutation); classical and quantum patching; circuit
models in double-path-sum form.
"""

__version__ = "0.1.0"

from ._linalg import Tolerance
from .causal_order import (
    CausalOrder,
    Region,
    are_spacelike,
    down_sets,
    future_domain,
    future_set,
    is_past_set,
    shadow,
    validate_scenario_geometry,
)
from .causality import (
    EventOperator,
    check_lon,
    check_partition_identity,
    check_poz,
    check_quantum_factorizability,
    check_spacelike_commutation,
    event_operator,
)
from .decoherence import AxiomReport, DecoherenceFunctional, check_agreement
from .hilbert import (
    EventHilbertSpace,
    LinearCombination,
    build_event_space,
    combo_norm2,
    in_subspace,
    is_null,
    subspace_dim,
)
from .histories import (
    Event,
    HistorySpace,
    RegionAlgebra,
    build_ghz_event,
    build_pr_event,
    complement,
    cylinder_event,
    intersection,
    is_partition,
    material_implication,
    region_algebra,
    symmetric_difference,
    union,
)
from .patching import (
    CorrelationTable,
    JointDcf,
    JointMeasure,
    SettingScenario,
    SettingTheory,
    check_no_signalling,
    chsh_value,
    classical_factorizability_residual,
    classical_patch,
    converse_model,
    joint_feasibility,
    marginalize_measure,
    patch_marginal_residual,
    quantum_patch,
)
from .scenarios import (
    EprbConfig,
    eprb_computational_basis_fixture,
    gen_double_slit,
    gen_eprb,
    gen_ghz,
    gen_pr_box,
)
from .sk_model import (
    SkCircuitConfig,
    SkCircuitModel,
    SkGate,
    check_truncation_independence,
    decoupled_demo_config,
    gen_sk_circuit,
    sk_factorizability_demo,
)
