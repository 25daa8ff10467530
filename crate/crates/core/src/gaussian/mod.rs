mod ensemble;
mod grid;
mod integrate;
pub mod io;
mod noise;
mod verify;

pub use ensemble::{sample_G, sample_g_with, sample_scalar, sample_scalar_with, EnsembleKind, GaussianEnsemble, GaussianSampler};
pub use grid::TimeGrid;
pub use integrate::{
    integrate_operator, integrate_operator_path, integrate_scalar, integrate_scalar_until, HilbertPaths,
    OperatorProfile, OperatorValuedIntegrand,
};
pub use noise::{DecayLaw, NoiseConfig, NoiseSpec, DEFAULT_TERMS};
pub use verify::*;
