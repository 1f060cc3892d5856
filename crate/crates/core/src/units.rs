//! Physical constants and unit conversions. Everything inside the library is
//! in atomic units; conversions happen here, at the boundary.

/// Proton-to-electron mass ratio used for the nuclei.
pub const MASS_RATIO: f64 = 1836.152701;

/// Boltzmann constant in hartree per kelvin.
pub const K_BOLTZMANN: f64 = 3.166811563e-6;

/// Atomic unit of intensity, W/cm² (intensity of a field of 1 a.u. amplitude).
pub const INTENSITY_AU: f64 = 3.509_445e16;

/// Atomic unit of time in femtoseconds.
pub const FS_PER_AU: f64 = 2.418_884_326_585_7e-2;

/// Bohr radius in nanometres.
pub const NM_PER_BOHR: f64 = 5.291_772_109_03e-2;

/// Atomic unit of velocity in m/s.
pub const VELOCITY_AU: f64 = 2.187_691_263_64e6;

/// Speed of light in atomic units.
pub const C_AU: f64 = 137.035_999_084;

/// Masses entering the nuclear Hamiltonian, in electron masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub mass_ratio: f64,
    pub fragment_mass: f64,
    pub reduced_mass: f64,
}

impl Constants {
    pub fn from_mass_ratio(mass_ratio: f64) -> Self {
        Self {
            mass_ratio,
            fragment_mass: mass_ratio,
            reduced_mass: mass_ratio / 2.0,
        }
    }

    /// Homonuclear hydrogen ion.
    pub fn hydrogen() -> Self {
        Self::from_mass_ratio(MASS_RATIO)
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::hydrogen()
    }
}

pub fn fs_to_au(t_fs: f64) -> f64 {
    t_fs / FS_PER_AU
}

pub fn au_to_fs(t_au: f64) -> f64 {
    t_au * FS_PER_AU
}

/// Photon energy (= angular frequency) in hartree for a vacuum wavelength in nm.
pub fn wavelength_nm_to_omega(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_AU / (lambda_nm / NM_PER_BOHR)
}

/// Peak field amplitude (a.u.) of a linearly polarised wave of the given intensity.
pub fn intensity_to_field(intensity_w_cm2: f64) -> f64 {
    (intensity_w_cm2 / INTENSITY_AU).sqrt()
}
