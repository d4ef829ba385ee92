"""Mixed-state entanglement of a multilevel atom in a multimode cavity.

Modules
-------
fock
    Truncated single- and multimode field states.
dynamics
    Closed-form block propagator, dense oracle, branch/ensemble evolution.
entanglement
    Reduced states, entropies and the mutual entropy.
sweep
    Run configurations, figure presets, time sweeps and CSV/plot output.
"""

from .dynamics import (
    BranchState,
    EnsembleState,
    SystemParams,
    assemble_unitary,
    block_unitary,
    evolve_branch,
    evolve_ensemble,
    expm_oracle,
    initial_branch,
    mu_n,
)
from .entanglement import (
    EntanglementPoint,
    atom_entropy,
    atom_reduced,
    entanglement_point,
    field_entropy,
    field_gram,
    mutual_entropy,
    total_entropy,
)
from .fock import (
    ModeSpec,
    coherent_amplitudes,
    fock_amplitudes,
    product_state,
    squeezed_coherent_amplitudes,
)
from .sweep import RunConfig, figure_preset, parse_config, run_sweep

__version__ = "0.1.0"
