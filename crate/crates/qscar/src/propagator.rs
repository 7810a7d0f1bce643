//! Split-operator FFT propagation of the time-dependent Schrodinger equation.
//!
//! One step is the symmetric (Strang) splitting
//!   psi <- e^{-i V dt / 2 hbar} F^{-1} e^{-i hbar k^2 dt / 2} F e^{-i V dt / 2 hbar} psi,
//! second order in dt and unitary up to floating point. Wavenumbers come from
//! the periodic grid, k = 2 pi m / (box length) with signed integer m.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::domain::{Grid, WaveSeries, Wavefunction};
use crate::error::{Error, Result};
use crate::potential::{potential_value, ModelParams};

/// Immutable phase tables plus FFT plans for one (grid, dt) pair.
pub struct PropagatorPlan {
    pub grid: Grid,
    pub dt: f64,
    pub params: ModelParams,
    /// e^{-i V dt / 2 hbar}, row-major (x outer).
    half_v_phase: Vec<C64>,
    /// e^{-i hbar k^2 dt / 2}, transposed layout (ky outer, kx inner).
    kinetic_phase_t: Vec<C64>,
    /// V(x, y) values, row-major.
    v_values: Vec<f64>,
    /// hbar^2 k^2 / 2 table, transposed layout.
    kinetic_energy_t: Vec<f64>,
    fft_x_fwd: Arc<dyn Fft<f64>>,
    fft_x_inv: Arc<dyn Fft<f64>>,
    fft_y_fwd: Arc<dyn Fft<f64>>,
    fft_y_inv: Arc<dyn Fft<f64>>,
}

/// Reusable scratch buffers for stepping.
pub struct Workspace {
    transpose: Vec<C64>,
    scratch: Vec<C64>,
}

impl PropagatorPlan {
    /// Plan for the quartic potential of `params`.
    pub fn new(grid: Grid, dt: f64, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let mut v = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iy in 0..grid.ny {
                v.push(potential_value(x, grid.y(iy), params));
            }
        }
        Self::with_potential(grid, dt, *params, v)
    }

    /// Plan with an explicit potential table (row-major), e.g. a free or
    /// harmonic override in tests and the oracle.
    pub fn with_potential(grid: Grid, dt: f64, params: ModelParams, v_values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("plan dt must be > 0, got {dt}")));
        }
        if v_values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "potential table length {} != grid size {}",
                v_values.len(),
                grid.len()
            )));
        }
        let hbar = params.hbar;
        let half_v_phase: Vec<C64> = v_values
            .iter()
            .map(|&v| C64::from_polar(1.0, -0.5 * v * dt / hbar))
            .collect();
        let mut kinetic_phase_t = Vec::with_capacity(grid.len());
        let mut kinetic_energy_t = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let ky = grid.ky(iy);
            for ix in 0..grid.nx {
                let kx = grid.kx(ix);
                let t = 0.5 * hbar * hbar * (kx * kx + ky * ky);
                kinetic_energy_t.push(t);
                kinetic_phase_t.push(C64::from_polar(1.0, -t * dt / hbar));
            }
        }
        let mut planner = FftPlanner::new();
        Ok(PropagatorPlan {
            grid,
            dt,
            params,
            half_v_phase,
            kinetic_phase_t,
            v_values,
            kinetic_energy_t,
            fft_x_fwd: planner.plan_fft_forward(grid.nx),
            fft_x_inv: planner.plan_fft_inverse(grid.nx),
            fft_y_fwd: planner.plan_fft_forward(grid.ny),
            fft_y_inv: planner.plan_fft_inverse(grid.ny),
        })
    }

    pub fn workspace(&self) -> Workspace {
        let scratch = self
            .fft_x_fwd
            .get_inplace_scratch_len()
            .max(self.fft_x_inv.get_inplace_scratch_len())
            .max(self.fft_y_fwd.get_inplace_scratch_len())
            .max(self.fft_y_inv.get_inplace_scratch_len());
        Workspace {
            transpose: vec![C64::new(0.0, 0.0); self.grid.len()],
            scratch: vec![C64::new(0.0, 0.0); scratch],
        }
    }

    pub fn potential_table(&self) -> &[f64] {
        &self.v_values
    }

    pub fn half_potential_phase(&self) -> &[C64] {
        &self.half_v_phase
    }

    pub fn kinetic_phase(&self) -> &[C64] {
        &self.kinetic_phase_t
    }

    /// One Strang step in place.
    pub fn step_in_place(&self, buf: &mut [C64], ws: &mut Workspace) {
        mul_pointwise(buf, &self.half_v_phase);
        self.fft2_to_transposed(buf, ws);
        mul_pointwise(&mut ws.transpose, &self.kinetic_phase_t);
        self.ifft2_from_transposed(buf, ws);
        mul_pointwise(buf, &self.half_v_phase);
    }

    /// One Strang step, allocating a fresh workspace.
    pub fn step(&self, psi: &Wavefunction) -> Result<Wavefunction> {
        psi.grid.check_same(&self.grid)?;
        let mut out = psi.clone();
        let mut ws = self.workspace();
        self.step_in_place(&mut out.amps, &mut ws);
        Ok(out)
    }

    /// Propagates `n_steps` steps, recording every `stride`-th frame
    /// (including frame 0). The series dt is `plan.dt * stride`.
    pub fn propagate(&self, psi0: &Wavefunction, n_steps: usize, stride: usize) -> Result<WaveSeries> {
        if stride == 0 {
            return Err(Error::InvalidParameter("stride must be >= 1".into()));
        }
        psi0.grid.check_same(&self.grid)?;
        let mut series = WaveSeries::new(self.grid, self.dt * stride as f64, 0.0)?;
        series.push(psi0.amps.clone())?;
        let mut buf = psi0.amps.clone();
        let mut ws = self.workspace();
        for step in 1..=n_steps {
            self.step_in_place(&mut buf, &mut ws);
            if step % stride == 0 {
                series.push(buf.clone())?;
            }
        }
        Ok(series)
    }

    /// Forward 2D FFT from row-major `buf` into the transposed workspace
    /// buffer (ky outer, kx inner). Unnormalized.
    fn fft2_to_transposed(&self, buf: &mut [C64], ws: &mut Workspace) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for row in buf.chunks_exact_mut(ny) {
            self.fft_y_fwd.process_with_scratch(row, &mut ws.scratch);
        }
        transpose(buf, &mut ws.transpose, nx, ny);
        for row in ws.transpose.chunks_exact_mut(nx) {
            self.fft_x_fwd.process_with_scratch(row, &mut ws.scratch);
        }
    }

    /// Inverse of [`fft2_to_transposed`]: transforms the transposed workspace
    /// buffer back into row-major `buf`, including the 1/(nx ny)
    /// normalization.
    fn ifft2_from_transposed(&self, buf: &mut [C64], ws: &mut Workspace) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for row in ws.transpose.chunks_exact_mut(nx) {
            self.fft_x_inv.process_with_scratch(row, &mut ws.scratch);
        }
        transpose(&ws.transpose, buf, ny, nx);
        for row in buf.chunks_exact_mut(ny) {
            self.fft_y_inv.process_with_scratch(row, &mut ws.scratch);
        }
        let scale = 1.0 / (nx * ny) as f64;
        for a in buf.iter_mut() {
            *a *= scale;
        }
    }

    /// Applies the grid Hamiltonian: returns (T + V) psi, not normalized.
    pub fn apply_hamiltonian_in_place(&self, buf: &mut [C64], ws: &mut Workspace) {
        let v_part: Vec<C64> = buf
            .iter()
            .zip(&self.v_values)
            .map(|(a, &v)| a * v)
            .collect();
        self.fft2_to_transposed(buf, ws);
        for (a, &t) in ws.transpose.iter_mut().zip(&self.kinetic_energy_t) {
            *a *= t;
        }
        self.ifft2_from_transposed(buf, ws);
        for (a, b) in buf.iter_mut().zip(&v_part) {
            *a += b;
        }
    }

    /// Spectral kinetic energy expectation <T> for a unit-norm state.
    pub fn kinetic_expectation(&self, psi: &Wavefunction) -> Result<f64> {
        psi.grid.check_same(&self.grid)?;
        let mut buf = psi.amps.clone();
        let mut ws = self.workspace();
        self.fft2_to_transposed(&mut buf, &mut ws);
        let w = self.grid.cell_area() / self.grid.len() as f64;
        Ok(ws
            .transpose
            .iter()
            .zip(&self.kinetic_energy_t)
            .map(|(a, &t)| t * a.norm_sqr())
            .sum::<f64>()
            * w)
    }

    pub fn potential_expectation(&self, psi: &Wavefunction) -> Result<f64> {
        psi.grid.check_same(&self.grid)?;
        let w = self.grid.cell_area();
        Ok(psi
            .amps
            .iter()
            .zip(&self.v_values)
            .map(|(a, &v)| v * a.norm_sqr())
            .sum::<f64>()
            * w)
    }

    /// <H> = <T> + <V> for a unit-norm state.
    pub fn mean_energy(&self, psi: &Wavefunction) -> Result<f64> {
        Ok(self.kinetic_expectation(psi)? + self.potential_expectation(psi)?)
    }
}

#[inline]
fn mul_pointwise(buf: &mut [C64], phase: &[C64]) {
    for (a, p) in buf.iter_mut().zip(phase) {
        *a *= p;
    }
}

/// Cache-blocked out-of-place transpose of an `rows x cols` row-major matrix.
fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    const B: usize = 32;
    for ib in (0..rows).step_by(B) {
        for jb in (0..cols).step_by(B) {
            for i in ib..(ib + B).min(rows) {
                for j in jb..(jb + B).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}
