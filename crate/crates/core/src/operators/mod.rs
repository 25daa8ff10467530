mod checks;
mod config;
mod diffusion;
mod drift;
mod shift;
mod space;

pub use checks::{
    check_h1, check_h2, check_h3, check_h4, pair_constants, H1Report, H2Report, H3Report, H4Report, AMPLITUDES,
    H1_RATIO, MARGIN_TOL, SLOPE_TOL,
};
pub use config::{DiffusionConfig, DriftConfig, OperatorConfig, OperatorPair};
pub use diffusion::{DiffusionFn, DiffusionKind, DiffusionOperator, MultiplicationProfile};
pub use drift::{make_linear_heat, make_p_laplace, make_porous_medium, DeclaredConstants, DriftFn, DriftKind, DriftOperator};
pub use shift::{shift_operators, NoisePath};
pub use space::{GalerkinSpace, TripleKind, COLLOCATION_FACTOR};
