//! Hamilton's equations with action accumulation, periodic-orbit records,
//! Bohr-Sommerfeld quantization and the Ehrenfest time.
//!
//! The six-ODE system is
//!   x' = px, y' = py,
//!   px' = -(x y^2 + eps x^3), py' = -(x^2 y + eps y^3),
//!   Sx' = px^2, Sy' = py^2,
//! integrated by fixed-step RK4. The accumulated action S = Sx + Sy is the
//! line integral of (px dx + py dy) along the trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{hamiltonian_value, scale_phase_point, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        PhasePoint { x, y, px, py }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.px.is_finite() && self.py.is_finite()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        ((self.x - other.x).powi(2)
            + (self.y - other.y).powi(2)
            + (self.px - other.px).powi(2)
            + (self.py - other.py).powi(2))
        .sqrt()
    }
}

/// Sampled trajectory with per-point accumulated action components.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<PhasePoint>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    /// Conserved energy of the initial condition.
    pub energy: f64,
}

impl Trajectory {
    pub fn action(&self, k: usize) -> f64 {
        self.sx[k] + self.sy[k]
    }

    pub fn final_action(&self) -> f64 {
        self.action(self.points.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy)]
struct State6 {
    x: f64,
    y: f64,
    px: f64,
    py: f64,
    sx: f64,
    sy: f64,
}

impl State6 {
    fn from_point(p: &PhasePoint) -> Self {
        State6 { x: p.x, y: p.y, px: p.px, py: p.py, sx: 0.0, sy: 0.0 }
    }

    fn point(&self) -> PhasePoint {
        PhasePoint { x: self.x, y: self.y, px: self.px, py: self.py }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.px.is_finite()
            && self.py.is_finite()
            && self.sx.is_finite()
            && self.sy.is_finite()
    }
}

#[inline]
fn rhs(s: &State6, eps: f64) -> State6 {
    State6 {
        x: s.px,
        y: s.py,
        px: -(s.x * s.y * s.y + eps * s.x * s.x * s.x),
        py: -(s.x * s.x * s.y + eps * s.y * s.y * s.y),
        sx: s.px * s.px,
        sy: s.py * s.py,
    }
}

#[inline]
fn axpy(s: &State6, h: f64, d: &State6) -> State6 {
    State6 {
        x: s.x + h * d.x,
        y: s.y + h * d.y,
        px: s.px + h * d.px,
        py: s.py + h * d.py,
        sx: s.sx + h * d.sx,
        sy: s.sy + h * d.sy,
    }
}

#[inline]
fn rk4_step(s: &State6, dt: f64, eps: f64) -> State6 {
    let k1 = rhs(s, eps);
    let k2 = rhs(&axpy(s, 0.5 * dt, &k1), eps);
    let k3 = rhs(&axpy(s, 0.5 * dt, &k2), eps);
    let k4 = rhs(&axpy(s, dt, &k3), eps);
    State6 {
        x: s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        y: s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        px: s.px + dt / 6.0 * (k1.px + 2.0 * k2.px + 2.0 * k3.px + k4.px),
        py: s.py + dt / 6.0 * (k1.py + 2.0 * k2.py + 2.0 * k3.py + k4.py),
        sx: s.sx + dt / 6.0 * (k1.sx + 2.0 * k2.sx + 2.0 * k3.sx + k4.sx),
        sy: s.sy + dt / 6.0 * (k1.sy + 2.0 * k2.sy + 2.0 * k3.sy + k4.sy),
    }
}

/// Fixed-step RK4 over all six equations; returns the fully sampled
/// trajectory (including the initial point).
pub fn integrate(ic: &PhasePoint, dt: f64, t_end: f64, params: &ModelParams) -> Result<Trajectory> {
    if !(dt > 0.0) || t_end < dt {
        return Err(Error::InvalidParameter(format!(
            "integration needs dt > 0 and t_end >= dt, got dt={dt}, t_end={t_end}"
        )));
    }
    if !ic.is_finite() {
        return Err(Error::NonFiniteState { step: 0 });
    }
    let n = (t_end / dt).round() as usize;
    let mut s = State6::from_point(ic);
    let mut traj = Trajectory {
        dt,
        points: Vec::with_capacity(n + 1),
        sx: Vec::with_capacity(n + 1),
        sy: Vec::with_capacity(n + 1),
        energy: hamiltonian_value(ic, params),
    };
    traj.points.push(s.point());
    traj.sx.push(0.0);
    traj.sy.push(0.0);
    for step in 1..=n {
        s = rk4_step(&s, dt, params.epsilon);
        if !s.is_finite() {
            return Err(Error::NonFiniteState { step });
        }
        traj.points.push(s.point());
        traj.sx.push(s.sx);
        traj.sy.push(s.sy);
    }
    Ok(traj)
}

/// Endpoint of the flow after exactly `t_end`, using full dt steps plus one
/// remainder step. Used where landing exactly on a period matters.
pub fn flow_to(ic: &PhasePoint, dt: f64, t_end: f64, params: &ModelParams) -> Result<(PhasePoint, f64)> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "flow_to needs positive dt and t_end, got dt={dt}, t_end={t_end}"
        )));
    }
    let n = (t_end / dt).floor() as usize;
    let rem = t_end - n as f64 * dt;
    let mut s = State6::from_point(ic);
    for step in 0..n {
        s = rk4_step(&s, dt, params.epsilon);
        if !s.is_finite() {
            return Err(Error::NonFiniteState { step });
        }
    }
    if rem > 1e-14 {
        s = rk4_step(&s, rem, params.epsilon);
    }
    Ok((s.point(), s.sx + s.sy))
}

/// Named periodic orbits of the quartic oscillator at E = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitName {
    HorizontalVertical,
    QuadrupleLoop,
    Bowtie,
    Square,
}

impl OrbitName {
    pub fn parse(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "horizontal_vertical" | "hv" => Ok(OrbitName::HorizontalVertical),
            "quadruple_loop" => Ok(OrbitName::QuadrupleLoop),
            "bowtie" => Ok(OrbitName::Bowtie),
            "square" => Ok(OrbitName::Square),
            other => Err(Error::UnknownOrbit(other.into())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OrbitName::HorizontalVertical => "horizontal_vertical",
            OrbitName::QuadrupleLoop => "quadruple_loop",
            OrbitName::Bowtie => "bowtie",
            OrbitName::Square => "square",
        }
    }
}

/// A periodic orbit plus its quantization metadata at the reference energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub name: OrbitName,
    pub ic: PhasePoint,
    /// Period at the reference energy.
    pub period: f64,
    /// Maslov index of the full orbit.
    pub maslov: u32,
    /// Number of Dirichlet conditions on the symmetry lines.
    pub nd: u32,
    /// Ratio of full to desymmetrized period.
    pub p_ratio: u32,
    /// Admissible excitation numbers.
    pub n_values: Vec<u32>,
    /// Reference energy the record is stated at.
    pub energy: f64,
}

/// Built-in orbit records at E = 1 for the default epsilon = 0.01.
///
/// Starting points lie on the y axis (or the x channel for the
/// horizontal/vertical pair) and are stored refined to machine precision:
/// these orbits are unstable, so initial conditions rounded to four digits
/// amplify to O(0.1) closure defects over one period. px is derived from the
/// energy so that H = 1 holds exactly.
pub fn builtin_orbits() -> Vec<PeriodicOrbit> {
    let eps = 0.01;
    let px_of = |y0: f64| (2.0 * (1.0 - eps / 4.0 * y0 * y0 * y0 * y0)).sqrt();
    vec![
        // The horizontal/vertical pair: the representative member librates
        // along the x channel (y = 0); its partner is the C4v image. The
        // quoted period covers two libration cycles.
        PeriodicOrbit {
            name: OrbitName::HorizontalVertical,
            ic: PhasePoint::new(0.0, 0.0, std::f64::consts::SQRT_2, 0.0),
            period: 33.166696110455,
            maslov: 16,
            nd: 0,
            p_ratio: 0,
            n_values: vec![12, 14, 16, 18, 20, 22, 42, 47, 53, 58, 62],
            energy: 1.0,
        },
        PeriodicOrbit {
            name: OrbitName::QuadrupleLoop,
            ic: PhasePoint::new(0.0, 2.028201657243, px_of(2.028201657243), 0.0),
            period: 18.7513791874,
            maslov: 12,
            nd: 0,
            p_ratio: 4,
            n_values: vec![4, 5, 6, 7, 8, 9, 10],
            energy: 1.0,
        },
        PeriodicOrbit {
            name: OrbitName::Bowtie,
            ic: PhasePoint::new(0.0, 1.654666390047, px_of(1.654666390047), 0.0),
            period: 9.5350375489,
            maslov: 4,
            nd: 0,
            p_ratio: 2,
            n_values: vec![20, 22, 24],
            energy: 1.0,
        },
        PeriodicOrbit {
            name: OrbitName::Square,
            ic: PhasePoint::new(0.0, 1.238737920803, px_of(1.238737920803), 0.0),
            period: 7.8425762431,
            maslov: 4,
            nd: 0,
            p_ratio: 4,
            n_values: vec![3, 4, 5, 6, 7, 8],
            energy: 1.0,
        },
    ]
}

pub fn orbit(name: OrbitName) -> PeriodicOrbit {
    builtin_orbits().into_iter().find(|o| o.name == name).unwrap()
}

/// Integrates one period and returns the phase-space distance start -> end.
pub fn closure_defect(po: &PeriodicOrbit, dt: f64, params: &ModelParams) -> Result<f64> {
    let (end, _) = flow_to(&po.ic, dt, po.period, params)?;
    Ok(end.distance(&po.ic))
}

/// Total action Sx(T) + Sy(T) over one period.
pub fn orbit_action(po: &PeriodicOrbit, dt: f64, params: &ModelParams) -> Result<f64> {
    let (_, s) = flow_to(&po.ic, dt, po.period, params)?;
    Ok(s)
}

/// Bohr-Sommerfeld energies
/// eps_n = [ (2 pi hbar / S0) (P n + mu/4 + P ND / 2) ]^(4/3),
/// with S0 the orbit action measured at the reference energy E = 1.
pub fn bs_energies(
    po: &PeriodicOrbit,
    n_values: &[u32],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    if n_values.is_empty() {
        return Ok(Vec::new());
    }
    let s0 = orbit_action(po, 1e-4, params)?;
    Ok(bs_energies_from_action(s0, po, n_values, params))
}

pub fn bs_energies_from_action(
    s0: f64,
    po: &PeriodicOrbit,
    n_values: &[u32],
    params: &ModelParams,
) -> Vec<f64> {
    n_values
        .iter()
        .map(|&n| {
            let phase = po.p_ratio as f64 * n as f64
                + po.maslov as f64 / 4.0
                + po.p_ratio as f64 * po.nd as f64 / 2.0;
            (2.0 * std::f64::consts::PI * params.hbar / s0 * phase).powf(4.0 / 3.0)
        })
        .collect()
}

/// Ehrenfest time t_E = ln(A/hbar) / (2 lambda) at energy E.
pub fn ehrenfest_time(energy: f64, params: &ModelParams) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter(format!("energy must be > 0, got {energy}")));
    }
    let area = params.poincare_area(energy);
    if area <= params.hbar {
        return Err(Error::InvalidParameter(format!(
            "Poincare area {area} <= hbar {}; Ehrenfest time undefined",
            params.hbar
        )));
    }
    Ok((area / params.hbar).ln() / (2.0 * params.lyapunov(energy)))
}
