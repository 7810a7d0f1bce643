//! The coupled quartic Hamiltonian, its potential/kinetic split, and the
//! mechanical-similarity scaling between energies.
//!
//! The potential is homogeneous of degree four, so any trajectory at energy E
//! maps onto one at E' by x' = eta x, p' = eta^2 p, t' = t/eta, S' = eta^3 S
//! with eta = (E'/E)^(1/4).

use serde::{Deserialize, Serialize};

use crate::classical::PhasePoint;
use crate::domain::Wavefunction;
use crate::error::{Error, Result};

/// Model constants. `lyapunov_coeff` and `poincare_area_coeff` parametrize
/// lambda(E) = c1 E^(1/4) and A(E) = c2 E^(3/4).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub epsilon: f64,
    pub hbar: f64,
    pub lyapunov_coeff: f64,
    pub poincare_area_coeff: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 0.01,
            hbar: 1.0,
            lyapunov_coeff: 0.385,
            poincare_area_coeff: 11.1,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {}", self.hbar)));
        }
        Ok(())
    }

    /// Lyapunov exponent at energy E.
    pub fn lyapunov(&self, energy: f64) -> f64 {
        self.lyapunov_coeff * energy.powf(0.25)
    }

    /// Characteristic Poincare section area at energy E.
    pub fn poincare_area(&self, energy: f64) -> f64 {
        self.poincare_area_coeff * energy.powf(0.75)
    }
}

/// V(x, y) = x^2 y^2 / 2 + (epsilon/4)(x^4 + y^4).
pub fn potential_value(x: f64, y: f64, params: &ModelParams) -> f64 {
    0.5 * x * x * y * y + 0.25 * params.epsilon * (x * x * x * x + y * y * y * y)
}

/// H = (px^2 + py^2)/2 + V(x, y) for a unit-mass particle.
pub fn hamiltonian_value(p: &PhasePoint, params: &ModelParams) -> f64 {
    0.5 * (p.px * p.px + p.py * p.py) + potential_value(p.x, p.y, params)
}

/// Scale factors of the mechanical similarity E -> E'.
#[derive(Debug, Clone, Copy)]
pub struct ScaleFactors {
    pub eta: f64,
    /// Multiply times by this (1/eta).
    pub time: f64,
    /// Multiply actions by this (eta^3).
    pub action: f64,
}

pub fn scale_factors(energy: f64, energy_prime: f64) -> Result<ScaleFactors> {
    if !(energy > 0.0) || !(energy_prime > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling needs positive energies, got E={energy}, E'={energy_prime}"
        )));
    }
    let eta = (energy_prime / energy).powf(0.25);
    Ok(ScaleFactors { eta, time: 1.0 / eta, action: eta * eta * eta })
}

/// Maps a phase point at energy E to the similar point at energy E'.
pub fn scale_phase_point(
    p: &PhasePoint,
    energy: f64,
    energy_prime: f64,
    _params: &ModelParams,
) -> Result<(PhasePoint, ScaleFactors)> {
    let f = scale_factors(energy, energy_prime)?;
    let eta2 = f.eta * f.eta;
    Ok((
        PhasePoint { x: f.eta * p.x, y: f.eta * p.y, px: eta2 * p.px, py: eta2 * p.py },
        f,
    ))
}

/// Maps a state at energy E to its mechanically similar image at E': lengths
/// scale by eta = (E'/E)^(1/4) exactly as classical orbits do (x' = eta x),
/// so the returned field is psi(x/eta, y/eta), renormalized. Scaling a
/// high-energy scar to E' = 1 shrinks it onto the E = 1 equipotential for
/// display and comparison.
pub fn scale_wavefunction_domain(
    psi: &Wavefunction,
    energy: f64,
    energy_prime: f64,
) -> Result<Wavefunction> {
    let f = scale_factors(energy, energy_prime)?;
    if (f.eta - 1.0).abs() < 1e-15 {
        return Ok(psi.clone());
    }
    let g = psi.grid;
    // bilinear resample of psi(x/eta', y/eta') where positions on the target
    // grid correspond to source positions multiplied by 1/eta
    let out = Wavefunction::from_fn(g, format!("{}|scaled", psi.label), |x, y| {
        let sx = x / f.eta;
        let sy = y / f.eta;
        sample_bilinear(psi, sx, sy)
    });
    out.normalized()
}

fn sample_bilinear(psi: &Wavefunction, x: f64, y: f64) -> num_complex::Complex64 {
    use num_complex::Complex64 as C64;
    let g = &psi.grid;
    if x < g.x_min || y < g.y_min || x >= g.x_max - g.dx() || y >= g.y_max - g.dy() {
        return C64::new(0.0, 0.0);
    }
    let fx = (x - g.x_min) / g.dx();
    let fy = (y - g.y_min) / g.dy();
    let ix = fx.floor() as usize;
    let iy = fy.floor() as usize;
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let at = |i: usize, j: usize| psi.amps[i * g.ny + j];
    at(ix, iy) * ((1.0 - tx) * (1.0 - ty))
        + at(ix + 1, iy) * (tx * (1.0 - ty))
        + at(ix, iy + 1) * ((1.0 - tx) * ty)
        + at(ix + 1, iy + 1) * (tx * ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    const P: ModelParams = ModelParams {
        epsilon: 0.01,
        hbar: 1.0,
        lyapunov_coeff: 0.385,
        poincare_area_coeff: 11.1,
    };

    #[test]
    fn potential_at_origin_is_zero() {
        assert_eq!(potential_value(0.0, 0.0, &P), 0.0);
    }

    #[test]
    fn potential_hand_evaluated() {
        // V(1,1) = 1/2 + (0.01/4)*2 = 0.505
        assert_relative_eq!(potential_value(1.0, 1.0, &P), 0.505, max_relative = 1e-15);
    }

    #[test]
    fn table_point_e10() {
        // center of the E=10 packet: position (1.860, 1.860), momenta (-2, -2)
        let p = PhasePoint { x: 1.860, y: 1.860, px: -2.0, py: -2.0 };
        let h = hamiltonian_value(&p, &P);
        assert!((h - 10.0).abs() / 10.0 < 5e-3, "H = {h}");
    }

    #[test]
    fn table_point_e100() {
        let p = PhasePoint { x: 3.665, y: 3.665, px: -3.0, py: -3.0 };
        let h = hamiltonian_value(&p, &P);
        assert!((h - 100.0).abs() / 100.0 < 5e-3, "H = {h}");
    }

    #[test]
    fn hamiltonian_basics() {
        let p = PhasePoint { x: 0.0, y: 0.0, px: 1.0, py: 1.0 };
        assert_relative_eq!(hamiltonian_value(&p, &P), 1.0);
        let rest = PhasePoint { x: 0.0, y: 0.0, px: 0.0, py: 0.0 };
        assert_eq!(hamiltonian_value(&rest, &P), 0.0);
    }

    #[test]
    fn c4v_symmetry() {
        let pts = [(0.7, -1.3), (2.0, 0.5), (-1.1, -0.2)];
        for (x, y) in pts {
            let v = potential_value(x, y, &P);
            for w in [
                potential_value(y, x, &P),
                potential_value(-x, y, &P),
                potential_value(x, -y, &P),
            ] {
                assert!((v - w).abs() <= 1e-15 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn homogeneity_degree_four() {
        for eta in [0.5, 2.0, 3.0] {
            let v1 = potential_value(0.9 * eta, -1.4 * eta, &P);
            let v0 = potential_value(0.9, -1.4, &P);
            assert_relative_eq!(v1, eta.powi(4) * v0, max_relative = 1e-12);
        }
    }

    #[test]
    fn scaling_identity_and_quartic_root() {
        let p = PhasePoint { x: 1.0, y: -0.5, px: 0.3, py: 0.8 };
        let (q, f) = scale_phase_point(&p, 2.0, 2.0, &P).unwrap();
        assert_eq!(f.eta, 1.0);
        assert_eq!(q.x, p.x);
        let (q, f) = scale_phase_point(&p, 1.0, 16.0, &P).unwrap();
        assert_relative_eq!(f.eta, 2.0);
        assert_relative_eq!(q.x, 2.0 * p.x);
        assert_relative_eq!(q.px, 4.0 * p.px);
        assert_relative_eq!(f.time, 0.5);
        assert_relative_eq!(f.action, 8.0);
    }

    #[test]
    fn scaling_preserves_hamiltonian_contract() {
        // a point with H = 10 scaled to E' = 1 must land on H = 1
        let p = PhasePoint { x: 1.860, y: 1.860, px: -2.0, py: -2.0 };
        let e = hamiltonian_value(&p, &P);
        let (q, _) = scale_phase_point(&p, e, 1.0, &P).unwrap();
        assert!((hamiltonian_value(&q, &P) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaling_round_trip_is_identity() {
        let p = PhasePoint { x: 0.4, y: 1.1, px: -0.7, py: 0.2 };
        let (q, _) = scale_phase_point(&p, 1.0, 7.3, &P).unwrap();
        let (r, _) = scale_phase_point(&q, 7.3, 1.0, &P).unwrap();
        assert_relative_eq!(r.x, p.x, max_relative = 1e-12);
        assert_relative_eq!(r.px, p.px, max_relative = 1e-12);
    }

    #[test]
    fn nonpositive_energy_errors() {
        let p = PhasePoint { x: 0.0, y: 0.0, px: 1.0, py: 0.0 };
        assert!(scale_phase_point(&p, 0.0, 1.0, &P).is_err());
        assert!(scale_phase_point(&p, 1.0, -2.0, &P).is_err());
    }

    #[test]
    fn wavefunction_scaling_identity_and_width() {
        let g = Grid::square(128, 8.0).unwrap();
        let sigma = 1.0;
        let psi = Wavefunction::from_fn(g, "g", |x, y| {
            C64::new((-(x * x + y * y) / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .normalized()
        .unwrap();
        let same = scale_wavefunction_domain(&psi, 3.0, 3.0).unwrap();
        assert_eq!(same.amps, psi.amps);

        // E -> 16E stretches lengths by eta = 2, like the classical x' = eta x;
        // conversely a state at 16E lands on the E = 1 domain shrunk by 1/2
        let scaled = scale_wavefunction_domain(&psi, 1.0, 16.0).unwrap();
        assert_relative_eq!(scaled.norm(), 1.0, max_relative = 1e-10);
        let w = g.cell_area();
        let mut x2 = 0.0;
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                x2 += g.x(ix).powi(2) * scaled.amps[ix * g.ny + iy].norm_sqr() * w;
            }
        }
        // <x^2> of |psi|^2 for a width 2 sigma Gaussian is 4 sigma^2
        assert!((x2 - 4.0 * sigma * sigma).abs() < 2e-2, "got <x^2> = {x2}");

        let back = scale_wavefunction_domain(&scaled, 16.0, 1.0).unwrap();
        let mut x2b = 0.0;
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                x2b += g.x(ix).powi(2) * back.amps[ix * g.ny + iy].norm_sqr() * w;
            }
        }
        assert!((x2b - sigma * sigma).abs() < 2e-2, "round trip <x^2> = {x2b}");
    }
}
