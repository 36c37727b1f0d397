"""Box-constrained max-residual regression solvers and max-flow pipelines.

Two solver families minimize ``max_i |(A x - b)_i|`` over the unit box:

* a proximal outer loop around locally adaptive randomized coordinate descent
  (l2 or column-weighted geometry), and
* a phased randomized mirror-prox method whose dual simplex variable lives in
  an implicit near-constant-time maintenance structure.

On top of them sit the flow reductions: spanning-tree congestion
approximation, demand routing by bisection over the congestion radius,
rounding to integral flows, and augmenting-path finishing for exact
unit-capacity maximum flows.
"""

from .baselines import SmoothedObjective, gd_general_norm, plain_cd
from .cdsolver import (
    CdIterate,
    ProxOuterState,
    RegressionResult,
    SubproblemSolver,
    dual_response,
    lcd_step,
    prox_outer_iterate,
    solve_box_linf,
)
from .core import (
    BoxMap,
    RegressionInstance,
    SparseMatrix,
    read_matrix_file,
    reduce_to_unit_box,
    sign_double,
    write_matrix_file,
)
from .errors import InfeasibleError, InputError, SolverFault
from .flow import (
    TreeApproximator,
    almost_route,
    augment_to_max,
    build_tree_approximator,
    dinic_oracle,
    directed_reduce,
    exact_unit_maxflow,
    flow_to_regress,
    round_to_integral,
)
from .graphs import (
    FlowNetwork,
    FlowSolution,
    incidence_apply,
    read_dimacs,
    write_flow_file,
)
from .mirrorprox import (
    MirrorProxConfig,
    PhaseState,
    lj_tilde,
    phase_iterate,
    run_phase,
    sample_pj,
    solve_flow_regress,
)
from .sampling import (
    BufferedUniforms,
    CoordSampler,
    DynamicTree,
    StaticAlias,
    make_rng,
    mixture_sample,
    tree_sample,
    tree_update,
)
from .simplexmaint import ReferenceSimplex, SimplexMaintainer
from .smoothing import (
    LocalSmoothnessParams,
    SoftmaxState,
    apply_coord_update,
    grad_coord,
    local_smoothness,
    smax_eval,
    softmax_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
