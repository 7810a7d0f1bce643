//! Correlation functions, energy spectra, peak finding, and state
//! extraction from propagated series.
//!
//! The correlation is C(t) = <psi(t)|psi(0)>; the spectrum is its Fourier
//! transform I(E) = integral C(t) e^{-iEt/hbar} dt over [0, T] (rectangle
//! rule), whose |I| peaks sit at the eigenenergies. The low-resolution
//! variant truncates the window to the Ehrenfest time, using the Hermitian
//! extension C(-t) = conj(C(t)) for the negative half. Eigenfunctions and
//! scarred functions come from the frame-weighted sums
//! sum_k psi(t_k) e^{+iE t_k/hbar} dt.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::domain::{inner_product, WaveSeries, Wavefunction};
use crate::error::{Error, Result};
use crate::potential::ModelParams;

#[derive(Debug, Clone)]
pub struct Correlation {
    pub dt: f64,
    pub t0: f64,
    pub values: Vec<C64>,
}

impl Correlation {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn last_time(&self) -> f64 {
        if self.values.is_empty() {
            self.t0
        } else {
            self.time(self.values.len() - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    Hann,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub amplitude: Vec<C64>,
    /// The time span (or Ehrenfest time) that set the resolution.
    pub resolution_time: f64,
}

/// Uniform energy grid description.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub n_bins: usize,
}

impl EnergyGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = self.n_bins.max(2);
        let step = (self.e_max - self.e_min) / (n - 1) as f64;
        (0..n).map(|i| self.e_min + i as f64 * step).collect()
    }
}

/// C(t_k) = <psi(t_k)|psi0> per frame.
pub fn correlation(series: &WaveSeries, psi0: &Wavefunction) -> Result<Correlation> {
    series.grid.check_same(&psi0.grid)?;
    let mut values = Vec::with_capacity(series.len());
    for frame in &series.frames {
        let psi_t = Wavefunction { grid: series.grid, amps: frame.clone(), label: String::new() };
        values.push(inner_product(&psi_t, psi0)?);
    }
    Ok(Correlation { dt: series.dt, t0: series.t0, values })
}

/// Single-frame correlation sample, for streaming accumulation.
pub fn correlation_sample(frame: &[C64], psi0: &Wavefunction) -> C64 {
    let s: C64 = frame
        .iter()
        .zip(&psi0.amps)
        .map(|(a, b)| a.conj() * b)
        .sum();
    s * psi0.grid.cell_area()
}

fn window_weight(window: Window, k: usize, len: usize) -> f64 {
    match window {
        Window::None => 1.0,
        Window::Hann => {
            if len < 2 {
                1.0
            } else {
                let x = std::f64::consts::PI * k as f64 / (len - 1) as f64;
                x.sin().powi(2) * 2.0
            }
        }
    }
}

/// I(E) = sum_k w_k C(t_k) e^{-iE t_k / hbar} dt on the given energy grid.
pub fn spectrum(
    corr: &Correlation,
    e_grid: &EnergyGrid,
    window: Window,
    params: &ModelParams,
) -> Result<Spectrum> {
    if corr.values.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least 2 samples".into()));
    }
    if e_grid.n_bins < 2 {
        return Err(Error::EmptyInput("energy grid needs at least 2 bins".into()));
    }
    let energies = e_grid.values();
    let len = corr.values.len();
    let inv_hbar = 1.0 / params.hbar;
    let mut amplitude = Vec::with_capacity(energies.len());
    for &e in &energies {
        // phase recurrence e^{-iE t_k} = e^{-iE t0} * (e^{-iE dt})^k
        let step = C64::from_polar(1.0, -e * corr.dt * inv_hbar);
        let mut phase = C64::from_polar(1.0, -e * corr.t0 * inv_hbar);
        let mut acc = C64::new(0.0, 0.0);
        for (k, c) in corr.values.iter().enumerate() {
            acc += c * phase * window_weight(window, k, len);
            phase *= step;
        }
        amplitude.push(acc * corr.dt);
    }
    Ok(Spectrum { energies, amplitude, resolution_time: corr.last_time() - corr.t0 })
}

/// Low-resolution spectrum: the transform truncated to |t| <= t_e with the
/// Hermitian extension C(-t) = conj(C(t)), so
/// I(E) = dt [ C(0) + 2 sum_{0 < t_k <= t_e} Re( C(t_k) e^{-iE t_k/hbar} ) ],
/// which is real.
pub fn low_res_spectrum(
    corr: &Correlation,
    run_energy: f64,
    e_grid: &EnergyGrid,
    params: &ModelParams,
) -> Result<Spectrum> {
    let t_e = crate::classical::ehrenfest_time(run_energy, params)?;
    low_res_spectrum_at(corr, t_e, e_grid, params)
}

pub fn low_res_spectrum_at(
    corr: &Correlation,
    t_e: f64,
    e_grid: &EnergyGrid,
    params: &ModelParams,
) -> Result<Spectrum> {
    if corr.t0 != 0.0 {
        return Err(Error::InvalidParameter(
            "low-resolution spectrum expects a series starting at t = 0".into(),
        ));
    }
    let have = corr.last_time();
    if t_e > have + 1e-12 {
        return Err(Error::TimeRangeUnavailable { lo: -t_e, hi: t_e, have_lo: 0.0, have_hi: have });
    }
    let k_max = (t_e / corr.dt).floor() as usize;
    let energies = e_grid.values();
    let inv_hbar = 1.0 / params.hbar;
    let mut amplitude = Vec::with_capacity(energies.len());
    for &e in &energies {
        let step = C64::from_polar(1.0, -e * corr.dt * inv_hbar);
        let mut phase = C64::new(1.0, 0.0);
        let mut acc = corr.values[0].re * 0.5 * 2.0; // C(0) term
        for c in corr.values.iter().take(k_max + 1).skip(1) {
            phase *= step;
            acc += 2.0 * (c * phase).re;
        }
        amplitude.push(C64::new(acc * corr.dt, 0.0));
    }
    Ok(Spectrum { energies, amplitude, resolution_time: t_e })
}

/// Local maxima of |I(E)| with prominence above `min_prominence` times the
/// spectrum maximum, refined by three-point parabolic interpolation and
/// sorted ascending. Maxima consistent with finite-window leakage of a
/// taller peak (side lobes, bounded by 2 H / (T dE / hbar) for the window
/// span T) are screened out, as are maxima inside a taller peak's main lobe.
pub fn find_peaks(spectrum: &Spectrum, min_prominence: f64) -> Vec<f64> {
    find_peaks_with_params(spectrum, min_prominence, &ModelParams::default())
}

pub fn find_peaks_with_params(
    spectrum: &Spectrum,
    min_prominence: f64,
    params: &ModelParams,
) -> Vec<f64> {
    let mag: Vec<f64> = spectrum.amplitude.iter().map(|a| a.norm()).collect();
    let n = mag.len();
    if n < 3 {
        return Vec::new();
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let threshold = min_prominence * max;
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for i in 1..n - 1 {
        if mag[i] > mag[i - 1] && mag[i] >= mag[i + 1] && prominence(&mag, i) >= threshold {
            candidates.push((i, mag[i]));
        }
    }
    // tallest first; drop maxima explainable as leakage of accepted peaks
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let t_window = spectrum.resolution_time.max(f64::MIN_POSITIVE);
    let lobe = 2.0 * std::f64::consts::PI * params.hbar / t_window;
    let mut accepted: Vec<(usize, f64)> = Vec::new();
    'cand: for &(i, h) in &candidates {
        let e = spectrum.energies[i];
        for &(j, hj) in &accepted {
            let de = (e - spectrum.energies[j]).abs();
            if de < 1.5 * lobe {
                continue 'cand;
            }
            let envelope = 2.0 * hj * 2.0 * params.hbar / (t_window * de);
            if h < envelope {
                continue 'cand;
            }
        }
        accepted.push((i, h));
    }
    let de = spectrum.energies[1] - spectrum.energies[0];
    let mut peaks: Vec<f64> = accepted
        .iter()
        .map(|&(i, _)| {
            let denom = mag[i - 1] - 2.0 * mag[i] + mag[i + 1];
            let delta = if denom.abs() > 0.0 {
                0.5 * (mag[i - 1] - mag[i + 1]) / denom
            } else {
                0.0
            };
            spectrum.energies[i] + delta.clamp(-0.5, 0.5) * de
        })
        .collect();
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    peaks
}

fn prominence(mag: &[f64], i: usize) -> f64 {
    let h = mag[i];
    let mut left_min = h;
    for k in (0..i).rev() {
        left_min = left_min.min(mag[k]);
        if mag[k] > h {
            break;
        }
    }
    let mut right_min = h;
    for k in i + 1..mag.len() {
        right_min = right_min.min(mag[k]);
        if mag[k] > h {
            break;
        }
    }
    h - left_min.max(right_min)
}

/// Inclusive frame range of a series covering times [t_lo, t_hi].
fn frame_range(series: &WaveSeries, t_lo: f64, t_hi: f64) -> Result<(usize, usize)> {
    let have_lo = series.t0;
    let have_hi = series.last_time();
    if t_lo < have_lo - 1e-9 || t_hi > have_hi + 1e-9 || t_lo > t_hi {
        return Err(Error::TimeRangeUnavailable { lo: t_lo, hi: t_hi, have_lo, have_hi });
    }
    let k_lo = ((t_lo - series.t0) / series.dt).ceil() as usize;
    let k_hi = ((t_hi - series.t0) / series.dt).floor() as usize;
    Ok((k_lo, k_hi.min(series.len() - 1)))
}

/// Normalized frame-weighted sum  sum_k psi(t_k) e^{+iE t_k/hbar} w_k dt over
/// the frames inside [t_lo, t_hi].
pub fn extract_state(
    series: &WaveSeries,
    energy: f64,
    t_range: (f64, f64),
    window: Window,
    params: &ModelParams,
) -> Result<Wavefunction> {
    let (k_lo, k_hi) = frame_range(series, t_range.0, t_range.1)?;
    if k_lo > k_hi {
        return Err(Error::EmptyInput("empty extraction range".into()));
    }
    let len = k_hi - k_lo + 1;
    let mut acc = vec![C64::new(0.0, 0.0); series.grid.len()];
    let inv_hbar = 1.0 / params.hbar;
    for (j, k) in (k_lo..=k_hi).enumerate() {
        let t = series.time(k);
        let ph = C64::from_polar(series.dt * window_weight(window, j, len), energy * t * inv_hbar);
        for (a, v) in acc.iter_mut().zip(&series.frames[k]) {
            *a += ph * v;
        }
    }
    let raw = Wavefunction { grid: series.grid, amps: acc, label: format!("state_E{energy:.5}") };
    raw.normalized()
}

/// Norm of the extraction sum before normalization; measures how resonant
/// `energy` is with the series content.
pub fn extraction_mass(
    series: &WaveSeries,
    energy: f64,
    t_range: (f64, f64),
    params: &ModelParams,
) -> Result<f64> {
    let (k_lo, k_hi) = frame_range(series, t_range.0, t_range.1)?;
    let mut acc = vec![C64::new(0.0, 0.0); series.grid.len()];
    let inv_hbar = 1.0 / params.hbar;
    for k in k_lo..=k_hi {
        let t = series.time(k);
        let ph = C64::from_polar(series.dt, energy * t * inv_hbar);
        for (a, v) in acc.iter_mut().zip(&series.frames[k]) {
            *a += ph * v;
        }
    }
    let w = series.grid.cell_area();
    Ok((acc.iter().map(|a| a.norm_sqr()).sum::<f64>() * w).sqrt())
}

/// Symmetric-window extraction over [-t_e, t_e]:
///   integral psi(t) e^{+iEt/hbar} dt,
/// where the negative-time half comes from a backward series. For the real
/// Hamiltonian, psi(-t) = conj(U(t) conj(psi0)), so `backward` must hold the
/// forward propagation of conj(psi0).
pub fn extract_state_symmetric(
    forward: &WaveSeries,
    backward: &WaveSeries,
    energy: f64,
    t_e: f64,
    params: &ModelParams,
) -> Result<Wavefunction> {
    forward.grid.check_same(&backward.grid)?;
    let (_, k_hi_f) = frame_range(forward, 0.0, t_e)?;
    let (_, k_hi_b) = frame_range(backward, 0.0, t_e)?;
    let mut acc = vec![C64::new(0.0, 0.0); forward.grid.len()];
    let inv_hbar = 1.0 / params.hbar;
    // t = 0 counted once (from the forward series)
    for k in 0..=k_hi_f {
        let t = forward.time(k);
        let ph = C64::from_polar(forward.dt, energy * t * inv_hbar);
        for (a, v) in acc.iter_mut().zip(&forward.frames[k]) {
            *a += ph * v;
        }
    }
    for k in 1..=k_hi_b {
        let t = -backward.time(k);
        let ph = C64::from_polar(backward.dt, energy * t * inv_hbar);
        for (a, v) in acc.iter_mut().zip(&backward.frames[k]) {
            *a += ph * v.conj();
        }
    }
    let raw = Wavefunction {
        grid: forward.grid,
        amps: acc,
        label: format!("scar_E{energy:.5}"),
    };
    raw.normalized()
}
