//! Rovibrational levels of the ground curve by Numerov shooting.
//!
//! The radial equation is integrated on a refinement of the propagation grid
//! (an integer number of Numerov steps per grid cell) in Johnson's ratio form,
//! which never overflows and counts nodes directly. The node count brackets
//! the level; the log-derivative mismatch at the outer turning point then
//! refines it.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::potentials::PotentialSet;
use crate::units::Constants;

/// Largest Numerov step used inside one grid cell (bohr).
const NUMEROV_STEP: f64 = 0.0025;
const MAX_ITERATIONS: usize = 200;
const ENERGY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub v: usize,
    pub n_rot: usize,
    /// Hartree, relative to the dissociation asymptote.
    pub energy: f64,
    /// χ on the propagation grid, Σχ²ΔR = 1.
    pub chi: Vec<f64>,
    pub dr: f64,
}

impl BoundState {
    pub fn node_count(&self) -> usize {
        count_sign_changes(&self.chi)
    }

    pub fn overlap(&self, other: &BoundState) -> f64 {
        self.chi
            .iter()
            .zip(&other.chi)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.dr
    }
}

pub(crate) fn count_sign_changes(y: &[f64]) -> usize {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = peak * 1e-12;
    let mut last = 0.0;
    let mut changes = 0;
    for &v in y {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Effective-potential problem on the fine Numerov grid.
struct Radial {
    x0: f64,
    h: f64,
    /// Numerov steps per propagation-grid cell.
    refine: usize,
    mass: f64,
    u: Vec<f64>,
    start: usize,
}

impl Radial {
    fn new(pot: &PotentialSet, consts: &Constants, n_rot: usize, grid: &RadialGrid) -> Self {
        let refine = (grid.dr() / NUMEROV_STEP).ceil().max(1.0) as usize;
        let h = grid.dr() / refine as f64;
        let n = (grid.n_r() - 1) * refine + 1;
        let mass = consts.reduced_mass;
        let centrifugal = (n_rot * (n_rot + 1)) as f64 / (2.0 * mass);
        let x0 = grid.r_min();
        let u: Vec<f64> = (0..n)
            .map(|k| {
                let x = x0 + k as f64 * h;
                pot.evaluate(x).v1 + centrifugal / (x * x)
            })
            .collect();
        let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
        // Leftmost point where the Numerov weight stays positive for any
        // bound energy; the wavefunction is negligible further in.
        let limit = 6.0 / (mass * h * h);
        let start = u.iter().position(|&v| v - umin < limit).unwrap_or(0);
        Self {
            x0,
            h,
            refine,
            mass,
            u,
            start,
        }
    }

    fn n(&self) -> usize {
        self.u.len()
    }

    fn umin(&self) -> f64 {
        self.u[self.start..]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    fn q(&self, k: usize, e: f64) -> f64 {
        2.0 * self.mass * (self.u[k] - e)
    }

    fn weight(&self, k: usize, e: f64) -> f64 {
        1.0 - self.h * self.h * self.q(k, e) / 12.0
    }

    fn coeff(&self, k: usize, e: f64) -> f64 {
        12.0 / self.weight(k, e) - 10.0
    }

    /// Outer boundary for the inward solution: 3× the outer turning point,
    /// clipped to the grid.
    fn end(&self, e: f64) -> usize {
        let turn = self.outer_turning_point(e);
        let x_turn = self.x0 + turn as f64 * self.h;
        let k = ((3.0 * x_turn - self.x0) / self.h).ceil() as usize;
        k.clamp(turn + 4, self.n() - 1)
    }

    fn outer_turning_point(&self, e: f64) -> usize {
        (self.start..self.n())
            .rev()
            .find(|&k| self.u[k] < e)
            .unwrap_or(self.start + 2)
            .max(self.start + 2)
    }

    /// Nodes of the outward solution on [start, end): the number of levels below `e`.
    fn node_count(&self, e: f64, end: usize) -> usize {
        let mut ratio = self.coeff(self.start + 1, e);
        let mut nodes = usize::from(ratio < 0.0);
        for k in self.start + 2..end {
            ratio = self.coeff(k, e) - 1.0 / ratio;
            if ratio < 0.0 {
                nodes += 1;
            }
        }
        nodes
    }

    fn outward_ratios(&self, e: f64, upto: usize) -> Vec<f64> {
        let mut r = vec![0.0; upto + 1];
        r[self.start + 1] = self.coeff(self.start + 1, e);
        for k in self.start + 2..=upto {
            r[k] = self.coeff(k, e) - 1.0 / r[k - 1];
        }
        r
    }

    fn inward_ratios(&self, e: f64, from: usize, end: usize) -> Vec<f64> {
        let mut s = vec![0.0; end + 1];
        s[end - 1] = self.coeff(end - 1, e);
        for k in (from..end - 1).rev() {
            s[k] = self.coeff(k, e) - 1.0 / s[k + 1];
        }
        s
    }

    /// Mismatch of the two solutions at the matching point `m`.
    fn mismatch(&self, e: f64, m: usize, end: usize) -> f64 {
        let r = self.outward_ratios(e, m - 1);
        let s = self.inward_ratios(e, m + 1, end);
        1.0 / s[m + 1] + 1.0 / r[m - 1] - self.coeff(m, e)
    }

    fn wavefunction(&self, e: f64, m: usize, end: usize) -> Vec<f64> {
        let r = self.outward_ratios(e, m - 1);
        let s = self.inward_ratios(e, m + 1, end);
        let mut f = vec![0.0; self.n()];
        f[m] = 1.0;
        for k in (self.start + 1..m).rev() {
            f[k] = f[k + 1] / r[k];
        }
        for k in m + 1..end {
            f[k] = f[k - 1] / s[k];
        }
        for (k, fk) in f.iter_mut().enumerate() {
            if *fk != 0.0 {
                *fk /= self.weight(k, e);
            }
        }
        f
    }
}

fn bound_count(radial: &Radial) -> usize {
    let e = -1e-12;
    if radial.umin() >= e {
        return 0;
    }
    radial.node_count(e, radial.n() - 1)
}

/// Number of levels of the ground curve below the asymptote for rotation `n_rot`.
pub fn bound_level_count(
    pot: &PotentialSet,
    consts: &Constants,
    n_rot: usize,
    grid: &RadialGrid,
) -> usize {
    bound_count(&Radial::new(pot, consts, n_rot, grid))
}

pub fn solve_bound_state(
    pot: &PotentialSet,
    consts: &Constants,
    n_rot: usize,
    v: usize,
    grid: &RadialGrid,
) -> Result<BoundState> {
    let radial = Radial::new(pot, consts, n_rot, grid);
    let found = bound_count(&radial);
    if v >= found {
        return Err(Error::NotBound {
            requested: v,
            found,
        });
    }
    let full = radial.n() - 1;
    let (mut lo, mut hi) = (radial.umin(), -1e-12);
    let mut iterations = 0;
    // Node-count bisection: count(lo) <= v < count(hi).
    while hi - lo > 1e-7 * (1.0 + lo.abs()) {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations, lo, hi });
        }
        let mid = 0.5 * (lo + hi);
        if radial.node_count(mid, full) > v {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let end = radial.end(hi).min(full);
    let m = radial
        .outer_turning_point(0.5 * (lo + hi))
        .clamp(radial.start + 2, end - 2);
    // Regula falsi (Illinois) on the mismatch, bisection as a guard.
    let mut flo = radial.mismatch(lo, m, end);
    let mut fhi = radial.mismatch(hi, m, end);
    let mut side = 0i8;
    let mut e = 0.5 * (lo + hi);
    while hi - lo > ENERGY_TOL {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations, lo, hi });
        }
        let secant = (lo * fhi - hi * flo) / (fhi - flo);
        e = if flo * fhi < 0.0 && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fe = radial.mismatch(e, m, end);
        if fe == 0.0 {
            break;
        }
        let below = radial.node_count(e, full) <= v;
        if below {
            lo = e;
            flo = fe;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = e;
            fhi = fe;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if (fe.abs() < 1e-14) && hi - lo < 1e-9 {
            break;
        }
    }
    let fine = radial.wavefunction(e, m, end);
    let mut chi: Vec<f64> = (0..grid.n_r()).map(|i| fine[i * radial.refine]).collect();
    let norm = (chi.iter().map(|c| c * c).sum::<f64>() * grid.dr()).sqrt();
    let first = chi
        .iter()
        .find(|c| c.abs() > 1e-8 * norm)
        .copied()
        .unwrap_or(1.0);
    let scale = first.signum() / norm;
    chi.iter_mut().for_each(|c| *c *= scale);
    if e >= 0.0 {
        return Err(Error::NotBound {
            requested: v,
            found: v,
        });
    }
    Ok(BoundState {
        v,
        n_rot,
        energy: e,
        chi,
        dr: grid.dr(),
    })
}

/// E(v,N) − E(v,0).
pub fn rotational_shift(
    pot: &PotentialSet,
    consts: &Constants,
    v: usize,
    n_rot: usize,
    grid: &RadialGrid,
) -> Result<f64> {
    if n_rot == 0 {
        return Ok(0.0);
    }
    let e_n = solve_bound_state(pot, consts, n_rot, v, grid)?.energy;
    let e_0 = solve_bound_state(pot, consts, 0, v, grid)?.energy;
    Ok(e_n - e_0)
}

/// One row of a level table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub v: usize,
    pub n_rot: usize,
    pub energy: f64,
}

/// All bound levels with N ≤ `n_max` (and v ≤ `v_max` when given).
pub fn level_table(
    pot: &PotentialSet,
    consts: &Constants,
    n_max: usize,
    v_max: Option<usize>,
    grid: &RadialGrid,
) -> Result<Vec<Level>> {
    let mut out = Vec::new();
    for n_rot in 0..=n_max {
        let count = bound_level_count(pot, consts, n_rot, grid);
        let top = v_max.map_or(count, |m| (m + 1).min(count));
        for v in 0..top {
            let s = solve_bound_state(pot, consts, n_rot, v, grid)?;
            out.push(Level {
                v,
                n_rot,
                energy: s.energy,
            });
        }
    }
    Ok(out)
}

/// CSV text with header `v,N,E_hartree`.
pub fn levels_csv(levels: &[Level]) -> String {
    let mut s = String::from("v,N,E_hartree\n");
    for l in levels {
        s.push_str(&format!("{},{},{:.12e}\n", l.v, l.n_rot, l.energy));
    }
    s
}
