"""Model-based design of synthetic transcriptional circuits.

Simulates promoter/transcript superstructures, scores them, and searches the
wiring space with tabu and scatter search under an epsilon-constraint driver.
"""

from .errors import (
    BudgetExceeded,
    DomainError,
    EmptyFrontError,
    IntegrationError,
    SteadyStateNotReached,
)
from .model import (
    PROMOTERS,
    SPECIES,
    TRANSCRIPTS,
    CircuitState,
    DesignVector,
    InducerCondition,
    KineticParameters,
    SuperstructureMatrix,
    eval_rhs,
    num_configurations,
    production_rates,
)
from .objectives import (
    SENTINEL,
    AdaptationObjective,
    ObjectiveVector,
    PerformanceCostObjective,
    Protocol,
    adaptation_metrics,
    performance_Z,
    production_cost,
)
from .pareto import (
    ParetoFront,
    ParetoPoint,
    dominates,
    epsilon_constraint_front,
    individual_optima_bounds,
    nondominated_filter,
)
from .simulator import (
    IntegratorConfig,
    StepResponse,
    Trajectory,
    find_steady_state,
    integrate,
    step_response,
)
from .solvers import (
    Band,
    ProblemSpec,
    SolverReport,
    exhaustive_search,
    local_refine,
    scatter_search,
    tabu_search,
)

__version__ = "0.1.0"
