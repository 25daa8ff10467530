mod sample;
mod solve;
mod verify;

pub use sample::cmd_sample;
pub use solve::{cmd_rates, cmd_solve};
pub use verify::cmd_verify;

use gspde::par::ExecMode;

pub(crate) const MODE: ExecMode = ExecMode::Parallel;

/// `|estimate - oracle| <= z·se`, with a rounding-level tolerance when the
/// standard error vanishes.
pub(crate) fn agrees(estimate: f64, se: f64, oracle: f64, z: f64) -> bool {
    let diff = (estimate - oracle).abs();
    if se > 0.0 {
        diff <= z * se
    } else {
        diff <= 1e-12 * oracle.abs().max(1.0)
    }
}
