"""mkc-lab: desk-scale non-contextual hidden-variable models.

Colorings of finite catalogs of totally incompatible bases reproduce Born-rule
statistics, violate the six-context inequality at value 6, reach a CHSH value
of 4 through measurement-triggered state changes, and run the parity-oblivious
multiplexing protocols.
"""

from .linalg import (
    DensityOperator,
    HermitianOperator,
    InvariantViolation,
    OrthonormalBasis,
    born_expectation,
    identity,
    pauli,
    spectral_decomposition,
    spin1_component,
    tensor,
)
from .model import (
    BasisCatalog,
    CatalogSaturationError,
    HiddenState,
    ImpossibleOutcomeError,
    InBasis,
    MeasurementRecord,
    ObservableHandle,
    Scalar,
    apply_function,
    basis_distance,
    is_totally_incompatible,
    measure,
    measure_context,
    new_catalog,
    resolve_context,
    resolve_target,
    sample_hidden_state,
    sample_values,
    value_of,
)
from .experiments import (
    CabelloResult,
    ChshToyResult,
    MerminPeresSquare,
    MixtureResult,
    classical_bound_bruteforce,
    ks_obstruction_check,
    mixture_nonconvexity_demo,
    run_cabello_sequential,
    run_cabello_single_shot,
    run_chsh_toy,
)
from .pom import (
    BoobyBox,
    BoobyTrapViolation,
    PomRunResult,
    audit_parity_obliviousness,
    classical_table,
    pom_states,
    run_classical_table_pom,
    run_direct_box_pom,
    run_quantum_pom,
)
from .stats import RngKey, Tally, derive_seed, draw_categorical, mean_and_se

__version__ = "0.1.0"
