//! Spectral simulation of Popper's two-particle experiment.
//!
//! A source emits pairs with opposite transverse momenta. Particle 1 meets a
//! slit (or any other local operation) at Alice's station; particle 2 flies
//! freely to Bob's screen. The crate evolves the pair on a periodic lattice
//! and checks, to round-off, that nothing Alice does changes the
//! distribution Bob sees, while coincidence-conditioned distributions do
//! depend on what Alice did.
//!
//! The modules follow the pipeline:
//!
//! * [`lattice`]: grid and unitary position/wavenumber transform
//! * [`entangle`]: source amplitude and the entangled pair state
//! * [`dynamics`]: free flight, slits, explicit unitaries, schedules
//! * [`collapse`]: Born-rule measurement, discrete and on the lattice
//! * [`marginals`]: spectral components, `D(k₂)`, distances
//! * [`verifier`]: scenarios, comparisons and the default check suite
//!
//! ```
//! use nosignal::prelude::*;
//!
//! let grid = GridSpec::new(16.0, 64)?;
//! let source = gaussian_band(&grid, 1.0, 2.0)?;
//! let pair = build_epr_state(&source, Physics::default())?;
//!
//! let screen = SlitScreen::with_defaults(&grid, &Physics::default(), 2.0, 0.0, 4.0 * grid.dy())?;
//! let after = split_step(&pair, &screen.into_operation(&grid), 2.0, 50)?;
//!
//! let d = distribution_distance(&particle2_distribution(&pair), &particle2_distribution(&after))?;
//! assert!(d.max_abs <= 1e-12);
//! # Ok::<(), nosignal::Error>(())
//! ```

pub mod collapse;
pub mod dynamics;
pub mod entangle;
mod error;
pub mod lattice;
pub mod marginals;
pub mod verifier;

pub use error::{Error, Result};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod prelude {
    pub use crate::collapse::{project_aperture, CollapseOutcome, DiscreteBipartite, Region};
    pub use crate::dynamics::{
        apply_local_unitary, free_propagate, make_schedule_slit, random_unitary, split_step, LocalOperation, Potential,
        SlitScreen,
    };
    pub use crate::entangle::{build_epr_state, gaussian_band, BipartiteWave, Physics, SpectralAmplitude};
    pub use crate::lattice::{from_spectrum, make_grid, to_spectrum, GridSpec};
    pub use crate::marginals::{
        distribution_distance, particle2_distribution, position_marginal, screen_profile, spectral_components,
        WavenumberDistribution,
    };
    pub use crate::verifier::{OperationSpec, Scenario};
    pub use crate::{Error, Result};
}

// The guide's code listings are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/source.md")]
    mod source {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
