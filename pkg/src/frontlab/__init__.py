"""frontlab: a numerical laboratory for damped hyperbolic gradient systems.

Core pieces: polynomial potentials and their derived constants (potential),
travelling-front solvers (frontsolver), the damped-leapfrog integrator
(pdesim), weighted energy/firewall diagnostics (diagnostics), propagating
terraces (terrace), scenario files and the CLI (scenario, cli), and the
bundled acceptance suite (verify).
"""

from .potential import (
    Potential,
    CriticalPoint,
    PotentialAnalysis,
    analyze_potential,
    builtin_potential,
    compute_escape_distance,
    compute_scalars,
    find_critical_points,
)
from .frontsolver import (
    FrontProfile,
    find_bistable_speed_scalar,
    normalize_profile,
    solve_profile_system,
    speed_convert,
    speed_convert_inverse,
    tail_decay_rate,
)
from .pdesim import (
    FieldState,
    InitialCondition,
    RunRecord,
    Snapshot,
    cfl_check,
    init_state,
    run,
    step,
)
from .diagnostics import (
    EnergyReport,
    FrameSpec,
    DiagnosticConstants,
    compute_constants,
    dissipation_delta,
    dissipation_rate,
    escape_points,
    estimate_invasion_speed,
    exp_filter,
    firewall_Q0_F0,
    global_energy,
    positive_energy_at_escape_check,
    standing_relaxation_report,
    traveling_frame_report,
)
from .terrace import (
    Terrace,
    TerraceFit,
    center_report,
    eval_terrace,
    fit_terrace,
    hamiltonian_profile,
)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
