//! Benchmark fixtures shared by the criterion targets.

use std::path::Path;

use photofrag_core::angular::AngularBasis;
use photofrag_core::spectra::MolecularSpectrum;
use photofrag_core::PotentialSet;

pub fn table() -> PotentialSet {
    PotentialSet::load_table(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/h2plus.dat"))
        .expect("shipped potential table")
}

/// Smooth aligned spectrum peaked at k = 6 on the detector-sized k grid.
pub fn aligned_spectrum(n_l: usize) -> MolecularSpectrum {
    let b = AngularBasis::new(0, n_l).expect("basis");
    let k: Vec<f64> = (1..=1400).map(|i| i as f64 * 0.01).collect();
    MolecularSpectrum::from_fn(k, b.nodes().to_vec(), b.weights().to_vec(), |k, c| {
        k * k * (-(k - 6.0).powi(2) / 0.3).exp() * (0.1 + c.powi(4))
    })
    .expect("spectrum")
}
