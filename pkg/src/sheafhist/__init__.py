"""Finite-dimensional topos truth values for quantum propositions and histories.

Contexts are commutative projector algebras; propositions are daseinized
into clopen subobjects of the spectral presheaf and evaluated against
pseudo-states as sieve-valued truth values.  Two-time histories live on the
product of context posets.
"""

__version__ = "0.1.0"

from .contexts import Context, ContextPoset, close_poset, context_from_commuting, leq, meet, restrict, spectrum
from .daseinization import (
    DaseinizedProposition,
    PseudoState,
    dasein,
    dasein_at,
    dasein_brute_force,
    pseudo_state,
    spectral,
    truth_value,
)
from .decoherence import (
    DensityMatrix,
    Evolution,
    TimedHistory,
    check_additivity,
    check_negation,
    class_operator,
    decoherence,
    is_consistent,
)
from .errors import SheafHistError
from .hpo import HpoHistory, entangled_demo, hpo_negation, hpo_projector, mu, theta, theta_pullback
from .presheaf import FinitePresheaf, GlobalElement, Subobject, global_sections
from .scenario import load_scenario
from .temporal import (
    TensorExpression,
    h,
    h_inverse_exists,
    intermediate,
    j,
    n_time_truth,
    pullback_left,
    pullback_right,
    two_time_truth,
)
