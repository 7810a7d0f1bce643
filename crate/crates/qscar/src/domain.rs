//! Grids, wavefunctions and time series shared by every other module.
//!
//! All fields live on a periodic rectangular grid (the last point of each
//! axis is excluded), amplitudes are stored row-major with the x index outer,
//! and inner products use the rectangle rule, which is exact for band-limited
//! periodic data.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Periodic rectangular grid. `nx`, `ny` must be powers of two (FFT
/// requirement) and at least 8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Grid {
    pub fn new(
        nx: usize,
        ny: usize,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    ) -> Result<Self> {
        if nx < 8 || ny < 8 || !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "nx, ny must be powers of two >= 8, got {nx}x{ny}"
            )));
        }
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidGrid(format!(
                "box bounds must be increasing, got x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
            )));
        }
        Ok(Grid { nx, ny, x_min, x_max, y_min, y_max })
    }

    /// Square box `[-half_width, half_width)^2` with `n` points per side.
    pub fn square(n: usize, half_width: f64) -> Result<Self> {
        Grid::new(n, n, -half_width, half_width, -half_width, half_width)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Quadrature weight of one cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy()
    }

    /// Signed Fourier wavenumber along x for FFT bin `m`.
    pub fn kx(&self, m: usize) -> f64 {
        let len = self.x_max - self.x_min;
        let m_signed = if m < self.nx / 2 { m as i64 } else { m as i64 - self.nx as i64 };
        2.0 * std::f64::consts::PI * m_signed as f64 / len
    }

    /// Signed Fourier wavenumber along y for FFT bin `m`.
    pub fn ky(&self, m: usize) -> f64 {
        let len = self.y_max - self.y_min;
        let m_signed = if m < self.ny / 2 { m as i64 } else { m as i64 - self.ny as i64 };
        2.0 * std::f64::consts::PI * m_signed as f64 / len
    }

    fn summary(&self) -> String {
        format!(
            "{}x{} [{}, {}]x[{}, {}]",
            self.nx, self.ny, self.x_min, self.x_max, self.y_min, self.y_max
        )
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(self.summary(), other.summary()));
        }
        Ok(())
    }
}

/// Complex amplitude field on a [`Grid`], row-major with x as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid,
    pub amps: Vec<C64>,
    pub label: String,
}

impl Wavefunction {
    pub fn new(grid: Grid, amps: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude count {} != grid size {}",
                amps.len(),
                grid.len()
            )));
        }
        if let Some(i) = amps.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude(i));
        }
        Ok(Wavefunction { grid, amps, label: label.into() })
    }

    /// Build from a pointwise function of (x, y).
    pub fn from_fn(grid: Grid, label: impl Into<String>, mut f: impl FnMut(f64, f64) -> C64) -> Self {
        let mut amps = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iy in 0..grid.ny {
                amps.push(f(x, grid.y(iy)));
            }
        }
        Wavefunction { grid, amps, label: label.into() }
    }

    pub fn zeros(grid: Grid, label: impl Into<String>) -> Self {
        Wavefunction { grid, amps: vec![C64::new(0.0, 0.0); grid.len()], label: label.into() }
    }

    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.grid.ny + iy
    }

    /// L2 norm under the grid quadrature.
    pub fn norm(&self) -> f64 {
        let w = self.grid.cell_area();
        (self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Returns a unit-norm copy; the phase is untouched.
    pub fn normalized(&self) -> Result<Wavefunction> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / n;
        let mut out = self.clone();
        for a in &mut out.amps {
            *a *= inv;
        }
        Ok(out)
    }

    /// Largest |psi|^2 on the grid boundary (the four box edges).
    pub fn edge_density(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut max = 0.0f64;
        for iy in 0..ny {
            max = max.max(self.amps[iy].norm_sqr());
            max = max.max(self.amps[(nx - 1) * ny + iy].norm_sqr());
        }
        for ix in 0..nx {
            max = max.max(self.amps[ix * ny].norm_sqr());
            max = max.max(self.amps[ix * ny + ny - 1].norm_sqr());
        }
        max
    }

    /// Projection onto the totally symmetric (A1) sector: the average over
    /// the eight C4v images of the field. Requires a square grid centered on
    /// the origin.
    pub fn symmetrize_a1(&self) -> Result<Wavefunction> {
        let g = &self.grid;
        if g.nx != g.ny || (g.x_min + g.x_max).abs() > 1e-12 || (g.y_min + g.y_max).abs() > 1e-12 {
            return Err(Error::InvalidGrid(
                "A1 symmetrization needs a square origin-centered grid".into(),
            ));
        }
        let n = g.nx;
        // index maps: x -> -x is ix -> (n - ix) % n on the periodic grid
        let flip = |i: usize| (n - i) % n;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for ix in 0..n {
            let fx = flip(ix);
            for iy in 0..n {
                let fy = flip(iy);
                let s = self.amps[ix * n + iy]
                    + self.amps[fx * n + iy]
                    + self.amps[ix * n + fy]
                    + self.amps[fx * n + fy]
                    + self.amps[iy * n + ix]
                    + self.amps[fy * n + ix]
                    + self.amps[iy * n + fx]
                    + self.amps[fy * n + fx];
                amps[ix * n + iy] = s / 8.0;
            }
        }
        Ok(Wavefunction { grid: self.grid, amps, label: format!("{}|A1", self.label) })
    }
}

/// `sum conj(a) * b * dx * dy` over the shared grid.
pub fn inner_product(a: &Wavefunction, b: &Wavefunction) -> Result<C64> {
    a.grid.check_same(&b.grid)?;
    let s: C64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid.cell_area())
}

/// Returns a unit-norm copy of `psi`.
pub fn normalize(psi: &Wavefunction) -> Result<Wavefunction> {
    psi.normalized()
}

/// Time-ordered sequence of amplitude frames on one grid.
#[derive(Debug, Clone)]
pub struct WaveSeries {
    pub grid: Grid,
    pub dt: f64,
    pub t0: f64,
    pub frames: Vec<Vec<C64>>,
}

impl WaveSeries {
    pub fn new(grid: Grid, dt: f64, t0: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("series dt must be > 0, got {dt}")));
        }
        Ok(WaveSeries { grid, dt, t0, frames: Vec::new() })
    }

    pub fn push(&mut self, frame: Vec<C64>) -> Result<()> {
        if frame.len() != self.grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "frame length {} != grid size {}",
                frame.len(),
                self.grid.len()
            )));
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Time of frame `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn last_time(&self) -> f64 {
        if self.frames.is_empty() {
            self.t0
        } else {
            self.time(self.frames.len() - 1)
        }
    }

    pub fn frame_as_wavefunction(&self, k: usize, label: impl Into<String>) -> Wavefunction {
        Wavefunction { grid: self.grid, amps: self.frames[k].clone(), label: label.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_field(grid: Grid, x0: f64, sigma: f64) -> Wavefunction {
        Wavefunction::from_fn(grid, "g", |x, y| {
            C64::new(
                (-((x - x0).powi(2) + y * y) / (4.0 * sigma * sigma)).exp(),
                0.0,
            )
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn grid_rejects_bad_dims() {
        assert!(Grid::new(7, 8, -1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Grid::new(12, 8, -1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 1.0, -1.0, -1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, -1.0, 1.0, -1.0, 1.0).is_ok());
    }

    #[test]
    fn spacing_excludes_last_point() {
        let g = Grid::square(8, 4.0).unwrap();
        assert_relative_eq!(g.dx(), 1.0);
        assert_relative_eq!(g.x(0), -4.0);
        assert_relative_eq!(g.x(7), 3.0);
    }

    #[test]
    fn inner_product_normalized_is_one() {
        let g = Grid::square(256, 8.0).unwrap();
        let psi = gaussian_field(g, 0.0, 0.7);
        let ip = inner_product(&psi, &psi).unwrap();
        assert!((ip.re - 1.0).abs() < 1e-10, "got {ip}");
        assert!(ip.im.abs() < 1e-10);
    }

    #[test]
    fn inner_product_phase() {
        let g = Grid::square(64, 8.0).unwrap();
        let psi = gaussian_field(g, 0.0, 0.7);
        let mut ipsi = psi.clone();
        for a in &mut ipsi.amps {
            *a *= C64::new(0.0, 1.0);
        }
        let ip = inner_product(&psi, &ipsi).unwrap();
        assert!((ip - C64::new(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn gaussian_overlap_closed_form() {
        // two unit-norm Gaussians of common width sigma offset by d along x
        // have overlap exp(-d^2 / (8 sigma^2)).
        let g = Grid::square(256, 8.0).unwrap();
        let sigma = 0.6;
        let d = 1.2;
        let g1 = gaussian_field(g, -d / 2.0, sigma);
        let g2 = gaussian_field(g, d / 2.0, sigma);
        let ip = inner_product(&g1, &g2).unwrap();
        let expected = (-d * d / (8.0 * sigma * sigma)).exp();
        assert!((ip.re - expected).abs() < 1e-10, "got {} want {expected}", ip.re);
        assert!(ip.im.abs() < 1e-12);
    }

    #[test]
    fn inner_product_grid_mismatch_errors() {
        let a = gaussian_field(Grid::square(64, 8.0).unwrap(), 0.0, 0.7);
        let b = gaussian_field(Grid::square(32, 8.0).unwrap(), 0.0, 0.7);
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_, _))));
    }

    #[test]
    fn normalize_scales_and_is_idempotent() {
        let g = Grid::square(64, 8.0).unwrap();
        let mut psi = gaussian_field(g, 0.0, 0.7);
        for a in &mut psi.amps {
            *a *= 2.0;
        }
        let n1 = normalize(&psi).unwrap();
        assert_relative_eq!(n1.norm(), 1.0, max_relative = 1e-12);
        let n2 = normalize(&n1).unwrap();
        for (a, b) in n1.amps.iter().zip(&n2.amps) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn normalize_zero_errors() {
        let g = Grid::square(8, 1.0).unwrap();
        let psi = Wavefunction::zeros(g, "z");
        assert!(matches!(normalize(&psi), Err(Error::ZeroNorm)));
    }

    #[test]
    fn normalize_random_field() {
        let g = Grid::square(64, 3.0).unwrap();
        let mut k = 0u64;
        let psi = Wavefunction::from_fn(g, "r", |_, _| {
            // cheap deterministic pseudo-random values
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (k >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = (k >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            C64::new(a, b)
        });
        let n = normalize(&psi).unwrap();
        let w = g.cell_area();
        let total: f64 = n.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * w;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_linearity_and_conjugate_symmetry() {
        let g = Grid::square(32, 4.0).unwrap();
        let a = gaussian_field(g, 0.3, 0.8);
        let b = gaussian_field(g, -0.4, 0.5);
        let c = gaussian_field(g, 0.1, 1.1);
        let alpha = C64::new(0.7, -1.3);
        let mut combo = b.clone();
        for (i, x) in combo.amps.iter_mut().enumerate() {
            *x = alpha * *x + c.amps[i];
        }
        let lhs = inner_product(&a, &combo).unwrap();
        let rhs = alpha * inner_product(&a, &b).unwrap() + inner_product(&a, &c).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);

        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn a1_symmetrization_is_projection() {
        let g = Grid::square(32, 4.0).unwrap();
        let psi = Wavefunction::from_fn(g, "asym", |x, y| {
            C64::new((-(x * x + y * y) / 4.0).exp(), 0.0) * C64::from_polar(1.0, x + 0.5 * y)
        });
        let p1 = psi.symmetrize_a1().unwrap();
        let p2 = p1.symmetrize_a1().unwrap();
        for (a, b) in p1.amps.iter().zip(&p2.amps) {
            assert!((a - b).norm() < 1e-13);
        }
        // symmetric under x <-> y by construction
        for ix in 0..32 {
            for iy in 0..32 {
                let d = (p1.amps[ix * 32 + iy] - p1.amps[iy * 32 + ix]).norm();
                assert!(d < 1e-13);
            }
        }
    }
}
