"""Two-stage anti-jamming beam pattern synthesis for distributed arrays."""

from .analog import (
    AdmmParams,
    AnalogState,
    analog_beamforming,
    db_to_linear,
    initial_targets,
    project_mainlobe,
    project_null,
    project_sidelobe,
    solve_epsilon_analog,
    solve_epsilon_binding,
    spoiled_mainlobe_template,
    synthesize_on_steering,
    update_multipliers_analog,
)
from .arrays import (
    AngleGrid,
    BeamSpec,
    UlaGeometry,
    UpaGeometry,
    discretize_spec,
    shift_spec,
    steering_matrix,
    steering_vector,
    upa_pattern,
    upa_steering,
)
from .digital import (
    DigitalState,
    EffectiveArray,
    digital_ls,
    digital_stage,
    effective_steering,
    project_mainlobe_digital,
    project_null_digital,
    project_sidelobe_digital,
    solve_epsilon_digital,
    update_multipliers_digital,
)
from .errors import BeamsynthError, ConfigurationError, DomainError
from .manifold import (
    ArmijoParams,
    LsSystem,
    armijo_step,
    euclidean_gradient,
    ls_objective,
    retract,
    rgd_solve,
    riemannian_project,
    unit_phases,
)
from .metrics import PatternReport, composite_pattern, pattern_report, sinr, sum_rate
from .impairments import (
    ImpairmentModel,
    apply_channel_errors,
    impaired_pattern,
    nonlinear_map_phase,
    quantize_phase,
    sample_errors,
    select_codes_cosine,
)
from .scenario import ScenarioConfig, config_from_dict, load_config
from .pipeline import SynthesisResult, evaluate_solution, load_solution, save_solution, synthesize
from .unfold import (
    CvnnWeights,
    UnfoldInput,
    abs_combine,
    crelu,
    init_w0,
    load_weights,
    predict_step_sizes,
    unfolded_rgd,
)

__version__ = "0.1.0"
