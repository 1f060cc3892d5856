pub mod angular;
pub mod averaging;
pub mod boundstates;
pub mod error;
pub mod grid;
pub mod interp;
pub mod io;
pub mod potentials;
pub mod propagator;
pub mod pulse;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
pub use num_complex;
pub use potentials::PotentialSet;
pub use propagator::{JobOutput, MomentumAmplitude, Wavefunction};
pub use spectra::{DetectorGrid, DetectorImage, MolecularSpectrum};
pub use units::Constants;
