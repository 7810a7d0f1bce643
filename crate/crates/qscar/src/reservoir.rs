//! Complex-valued echo-state network with output feedback.
//!
//! The reservoir has no input layer: states evolve by teacher forcing,
//!   x~(t) = f(W x(t-1) + W_back y(t-1)),   x(t) = (1-a) x(t-1) + a x~(t),
//! with the split activation f(z) = tanh(Re z) + i tanh(Im z). Only the
//! readout W_out is trained, by complex ridge regression in closed form,
//!   W_out = (X* X + g I)^{-1} (X* Y),
//! with * the conjugate transpose. Training runs in two stages: a
//! teacher-forced stage over the first split of the data, then a free-running
//! stage over the remainder whose states (driven by the model's own
//! predictions) are refit against the true frames, which teaches the readout
//! how small prediction errors move the internal states during the test
//! phase.
//!
//! Frames enter and leave the reservoir in norm units (amplitudes scaled by
//! sqrt(dx dy)), so the feedback scale and the ridge coefficient mean the
//! same thing on every grid.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Grid, WaveSeries};
use crate::error::{Error, Result};
use crate::linalg::{
    back_substitute_conj, cholesky_in_place, forward_substitute, spectral_radius_estimate,
    CsrMatrix,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservoirConfig {
    pub n_nodes: usize,
    pub spectral_radius: f64,
    pub density: f64,
    /// Leaking rate alpha in (0, 1].
    pub leak: f64,
    /// Ridge coefficient gamma.
    pub ridge: f64,
    /// Transient states discarded before fitting.
    pub t_min: usize,
    pub seed: u64,
    /// Fraction of the training data used for the teacher-forced stage.
    pub split_first: f64,
    pub feedback_scale: f64,
    /// Project each free-run output back to unit wavefunction norm.
    pub renormalize: bool,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        ReservoirConfig {
            n_nodes: 2000,
            spectral_radius: 0.5,
            density: 0.005,
            leak: 0.2,
            ridge: 0.001,
            t_min: 500,
            seed: 1,
            split_first: 0.8,
            feedback_scale: 1.0,
            renormalize: true,
        }
    }
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        let c = self;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if c.n_nodes == 0 {
            return bad("n_nodes must be >= 1".into());
        }
        if !(c.leak > 0.0 && c.leak <= 1.0) {
            return bad(format!("leak must be in (0, 1], got {}", c.leak));
        }
        if !(c.spectral_radius > 0.0) {
            return bad(format!("spectral_radius must be > 0, got {}", c.spectral_radius));
        }
        if !(c.density > 0.0 && c.density <= 1.0) {
            return bad(format!("density must be in (0, 1], got {}", c.density));
        }
        if !(c.ridge >= 0.0) {
            return bad(format!("ridge must be >= 0, got {}", c.ridge));
        }
        if !(c.split_first > 0.0 && c.split_first < 1.0) && c.split_first != 1.0 {
            return bad(format!("split_first must be in (0, 1), got {}", c.split_first));
        }
        Ok(())
    }
}

/// Power-iteration count used everywhere a spectral radius is estimated.
pub const POWER_ITERS: usize = 200;
const RADIUS_SEED: u64 = 0x5eed;

/// Trained or untrained reservoir bound to one grid (L = nx * ny).
pub struct ReservoirModel {
    pub config: ReservoirConfig,
    pub grid: Grid,
    /// Sparse recurrent matrix, rescaled to the target spectral radius.
    pub w: CsrMatrix,
    /// Dense feedback matrix, n_nodes x L, already multiplied by
    /// feedback_scale.
    pub w_back: Vec<f64>,
    /// Readout, L x n_nodes row-major; present after training.
    pub w_out: Option<Vec<C64>>,
    /// Current internal state.
    pub state: Vec<C64>,
    /// Feedback vector for the next free-run step (norm units).
    pub last_output: Option<Vec<C64>>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub stage1_rows: usize,
    pub stage2_rows: usize,
    /// Mean squared residual of the final readout on the stage-1 rows.
    pub stage1_mse: f64,
    /// Mean squared residual of the final readout on the stage-2 rows.
    pub stage2_mse: f64,
}

impl ReservoirModel {
    pub fn l_dim(&self) -> usize {
        self.grid.len()
    }

    fn n(&self) -> usize {
        self.config.n_nodes
    }

    /// Scale factor from raw amplitudes to the reservoir's norm units.
    pub fn amp_scale(&self) -> f64 {
        self.grid.cell_area().sqrt()
    }
}

/// Component-wise split tanh, the complex activation.
pub fn activation(z: &mut [C64]) {
    for v in z.iter_mut() {
        *v = C64::new(v.re.tanh(), v.im.tanh());
    }
}

/// Builds the random reservoir for `grid`: W sparse with Bernoulli(density)
/// entries uniform on [-1, 1], rescaled so the power-iteration estimate of
/// its spectral radius equals the configured value; W_back dense uniform on
/// [-1, 1] times feedback_scale. Deterministic in the seed.
pub fn init(config: &ReservoirConfig, grid: Grid) -> Result<ReservoirModel> {
    config.validate()?;
    let n = config.n_nodes;
    if (n * n) as f64 * config.density < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "expected nonzero count N^2 * density = {} < 1: the recurrent matrix would be empty",
            (n * n) as f64 * config.density
        )));
    }
    let l = grid.len();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let mut triplets = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if rng.gen::<f64>() < config.density {
                triplets.push((r, c, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    if triplets.is_empty() {
        return Err(Error::InvalidParameter(
            "recurrent matrix came out empty; raise density or n_nodes".into(),
        ));
    }
    let mut w = CsrMatrix::from_triplets(n, n, triplets);
    let estimate = spectral_radius_estimate(&w, POWER_ITERS, RADIUS_SEED);
    if estimate > 0.0 {
        w.scale(config.spectral_radius / estimate);
    }

    let mut w_back = Vec::with_capacity(n * l);
    for _ in 0..n * l {
        w_back.push(rng.gen_range(-1.0..1.0) * config.feedback_scale);
    }

    Ok(ReservoirModel {
        config: *config,
        grid,
        w,
        w_back,
        w_out: None,
        state: vec![C64::new(0.0, 0.0); n],
        last_output: None,
    })
}

/// One leaky state update driven by the previous output (norm units):
/// returns (1 - a) x + a f(W x + W_back y_prev).
pub fn drive(model: &ReservoirModel, state: &[C64], y_prev: &[C64]) -> Result<Vec<C64>> {
    let n = model.n();
    let l = model.l_dim();
    if state.len() != n || y_prev.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "drive: state {} (want {n}), feedback {} (want {l})",
            state.len(),
            y_prev.len()
        )));
    }
    let mut pre = vec![C64::new(0.0, 0.0); n];
    model.w.mul_complex(state, &mut pre);
    // W_back is real: accumulate real and imaginary parts in one pass
    for (r, p) in pre.iter_mut().enumerate() {
        let row = &model.w_back[r * l..(r + 1) * l];
        let mut acc_re = 0.0;
        let mut acc_im = 0.0;
        for (w, y) in row.iter().zip(y_prev) {
            acc_re += w * y.re;
            acc_im += w * y.im;
        }
        *p += C64::new(acc_re, acc_im);
    }
    activation(&mut pre);
    let a = model.config.leak;
    Ok(state
        .iter()
        .zip(&pre)
        .map(|(x, t)| x * (1.0 - a) + t * a)
        .collect())
}

/// Readout application y = W_out x.
pub fn readout(model: &ReservoirModel, state: &[C64]) -> Result<Vec<C64>> {
    let w_out = model.w_out.as_ref().ok_or(Error::Untrained)?;
    let n = model.n();
    let mut y = Vec::with_capacity(model.l_dim());
    for row in w_out.chunks_exact(n) {
        let mut acc = C64::new(0.0, 0.0);
        for (w, x) in row.iter().zip(state) {
            acc += w * x;
        }
        y.push(acc);
    }
    Ok(y)
}

/// Teacher-forced state collection: drives the reservoir with the frames of
/// `teach` (in norm units), discards the first `t_min` states, and pairs the
/// state at step t with frame t as its target. Returns the state matrix X
/// (rows x N) and the paired target frame indices.
pub fn collect_states(
    model: &ReservoirModel,
    teach: &WaveSeries,
) -> Result<(Array2<C64>, Vec<usize>)> {
    let t_min = model.config.t_min;
    let m = teach.len();
    if m < t_min + 2 {
        return Err(Error::SeriesTooShort { len: m, min: t_min + 1 });
    }
    let scale = model.amp_scale();
    let n = model.n();
    let rows = m - t_min - 1;
    let mut x = Array2::zeros((rows, n));
    let mut state = model.state.clone();
    let mut y_prev: Vec<C64> = teach.frames[0].iter().map(|a| a * scale).collect();
    for t in 1..m {
        state = drive(model, &state, &y_prev)?;
        if t > t_min {
            for (j, v) in state.iter().enumerate() {
                x[(t - t_min - 1, j)] = *v;
            }
        }
        if t + 1 < m {
            for (dst, src) in y_prev.iter_mut().zip(&teach.frames[t]) {
                *dst = src * scale;
            }
        }
    }
    Ok((x, (t_min + 1..m).collect()))
}

/// Closed-form complex ridge readout: solves
/// (X* X + g I) B = X* Y and returns W_out = B^T (L x N, row-major).
pub fn fit_readout(x: &Array2<C64>, y: &Array2<C64>, gamma: f64) -> Result<Vec<C64>> {
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "fit_readout: X is {}x{}, Y is {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let n = x.ncols();
    let l = y.ncols();
    let xh = x.t().mapv(|z| z.conj());
    let mut a = xh.dot(x);
    for i in 0..n {
        a[(i, i)] += gamma;
    }
    cholesky_in_place(&mut a)?;
    let b = xh.dot(y); // N x L
    let solved = solve_with_factor(&a, b);
    // transpose (no conjugation) into row-major L x N
    let mut w_out = vec![C64::new(0.0, 0.0); l * n];
    for i in 0..n {
        for j in 0..l {
            w_out[j * n + i] = solved[(i, j)];
        }
    }
    Ok(w_out)
}

/// Solves L L^H Z = B given the Cholesky factor, column-blocked so the
/// substitution vectorizes across right-hand sides.
fn solve_with_factor(l_factor: &Array2<C64>, mut b: Array2<C64>) -> Array2<C64> {
    let n = l_factor.nrows();
    let cols = b.ncols();
    let lf = l_factor.as_slice().expect("contiguous");
    let bs = b.as_slice_mut().expect("contiguous");
    // forward: for each pivot i, row_i of Z = (B_i - L[i, :i] Z[:i]) / L_ii
    for i in 0..n {
        let (done, rest) = bs.split_at_mut(i * cols);
        let row = &mut rest[..cols];
        for k in 0..i {
            let lik = lf[i * n + k];
            if lik.re != 0.0 || lik.im != 0.0 {
                let zk = &done[k * cols..(k + 1) * cols];
                for (r, z) in row.iter_mut().zip(zk) {
                    *r -= lik * z;
                }
            }
        }
        let inv = C64::new(1.0, 0.0) / lf[i * n + i];
        for r in row.iter_mut() {
            *r *= inv;
        }
    }
    // backward with L^H: Z_i = (Z_i - sum_{k>i} conj(L[k,i]) Z_k) / conj(L_ii)
    for i in (0..n).rev() {
        let (head, tail) = bs.split_at_mut((i + 1) * cols);
        let row = &mut head[i * cols..];
        for k in i + 1..n {
            let lki = lf[k * n + i].conj();
            if lki.re != 0.0 || lki.im != 0.0 {
                let zk = &tail[(k - i - 1) * cols..(k - i) * cols];
                for (r, z) in row.iter_mut().zip(zk) {
                    *r -= lki * z;
                }
            }
        }
        let inv = C64::new(1.0, 0.0) / lf[i * n + i].conj();
        for r in row.iter_mut() {
            *r *= inv;
        }
    }
    b
}

/// Two-stage training over `teach`. Stage 1 teacher-forces the first
/// `split_first` fraction of the frames and fits a readout; stage 2
/// continues from the stage-1 end state in free-run mode over the remaining
/// frames, recording prediction-driven states against the true frames, and
/// refits the readout on the concatenated rows. The model ends teacher-forced
/// through the full series, ready to free-run from the last frame.
pub fn train_two_stage(model: &mut ReservoirModel, teach: &WaveSeries) -> Result<TrainReport> {
    model.grid.check_same(&teach.grid)?;
    let m = teach.len();
    let m1 = ((model.config.split_first * m as f64).floor() as usize).clamp(1, m);
    let scale = model.amp_scale();

    // stage 1: teacher-forced states over frames[0..m1]
    let mut stage1 = WaveSeries::new(teach.grid, teach.dt, teach.t0)?;
    stage1.frames = teach.frames[..m1].to_vec();
    let (x1, t1_idx) = collect_states(model, &stage1)?;
    let y1 = frames_to_matrix(teach, &t1_idx, scale);
    let w_out1 = fit_readout(&x1, &y1, model.config.ridge)?;

    // state at the end of stage 1 (teacher-forced)
    let mut state = model.state.clone();
    let mut y_prev: Vec<C64> = teach.frames[0].iter().map(|a| a * scale).collect();
    for t in 1..m1 {
        state = drive(model, &state, &y_prev)?;
        y_prev.clear();
        y_prev.extend(teach.frames[t].iter().map(|a| a * scale));
    }
    let stage1_end = state.clone();

    let report;
    if m1 == m {
        // degenerate split: single-stage training
        model.w_out = Some(w_out1);
        report = TrainReport {
            stage1_rows: x1.nrows(),
            stage2_rows: 0,
            stage1_mse: residual_mse(model, &x1, &y1),
            stage2_mse: 0.0,
        };
    } else {
        // stage 2: free-run with the stage-1 readout, recording states
        model.w_out = Some(w_out1);
        let rows2 = m - m1;
        let n = model.n();
        let mut x2 = Array2::zeros((rows2, n));
        let mut st2 = stage1_end.clone();
        // feedback starts from the model's own prediction at the end of
        // stage 1, exactly as in the test phase
        let mut y_fb = readout(model, &st2)?;
        maybe_renormalize(model, &mut y_fb);
        for (i, _t) in (m1..m).enumerate() {
            st2 = drive(model, &st2, &y_fb)?;
            for (j, v) in st2.iter().enumerate() {
                x2[(i, j)] = *v;
            }
            y_fb = readout(model, &st2)?;
            maybe_renormalize(model, &mut y_fb);
        }
        let t2_idx: Vec<usize> = (m1..m).collect();
        let y2 = frames_to_matrix(teach, &t2_idx, scale);

        // refit on the concatenation with the same gamma
        let mut x_all = Array2::zeros((x1.nrows() + rows2, n));
        x_all.slice_mut(ndarray::s![..x1.nrows(), ..]).assign(&x1);
        x_all.slice_mut(ndarray::s![x1.nrows().., ..]).assign(&x2);
        let mut y_all = Array2::zeros((y1.nrows() + rows2, y1.ncols()));
        y_all.slice_mut(ndarray::s![..y1.nrows(), ..]).assign(&y1);
        y_all.slice_mut(ndarray::s![y1.nrows().., ..]).assign(&y2);
        let w_out = fit_readout(&x_all, &y_all, model.config.ridge)?;
        model.w_out = Some(w_out);

        // teacher-force through stage 2 for the warm handoff state
        let mut st = stage1_end;
        let mut y_teach: Vec<C64> = teach.frames[m1 - 1].iter().map(|a| a * scale).collect();
        for t in m1..m {
            st = drive(model, &st, &y_teach)?;
            y_teach.clear();
            y_teach.extend(teach.frames[t].iter().map(|a| a * scale));
        }
        state = st;

        report = TrainReport {
            stage1_rows: x1.nrows(),
            stage2_rows: rows2,
            stage1_mse: residual_mse(model, &x1, &y1),
            stage2_mse: residual_mse(model, &x2, &y2),
        };
    }

    model.state = state;
    model.last_output = Some(teach.frames[m - 1].iter().map(|a| a * scale).collect());
    Ok(report)
}

fn frames_to_matrix(series: &WaveSeries, idx: &[usize], scale: f64) -> Array2<C64> {
    let l = series.grid.len();
    let mut y = Array2::zeros((idx.len(), l));
    for (r, &t) in idx.iter().enumerate() {
        for (c, a) in series.frames[t].iter().enumerate() {
            y[(r, c)] = a * scale;
        }
    }
    y
}

fn residual_mse(model: &ReservoirModel, x: &Array2<C64>, y: &Array2<C64>) -> f64 {
    let w_out = model.w_out.as_ref().unwrap();
    let n = model.n();
    let l = y.ncols();
    let mut acc = 0.0;
    for (r, xr) in x.outer_iter().enumerate() {
        let xr = xr.as_slice().unwrap();
        for j in 0..l {
            let row = &w_out[j * n..(j + 1) * n];
            let mut pred = C64::new(0.0, 0.0);
            for (w, xv) in row.iter().zip(xr) {
                pred += w * xv;
            }
            acc += (pred - y[(r, j)]).norm_sqr();
        }
    }
    acc / (x.nrows() * l) as f64
}

fn maybe_renormalize(model: &ReservoirModel, y: &mut [C64]) {
    if model.config.renormalize {
        renormalize_norm_units(y);
    }
}

/// Projects a frame in norm units back to unit wavefunction norm.
pub fn renormalize_norm_units(y: &mut [C64]) {
    let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        let inv = 1.0 / norm;
        for a in y.iter_mut() {
            *a *= inv;
        }
    }
}

/// Autoregressive prediction of `n_steps` frames from the trained model's
/// warm state. Advances the model state so successive calls continue the
/// run. Outputs are raw amplitudes (norm units undone).
pub fn free_run(model: &mut ReservoirModel, n_steps: usize) -> Result<WaveSeries> {
    if model.w_out.is_none() {
        return Err(Error::Untrained);
    }
    let y_prev = model.last_output.clone().ok_or(Error::Untrained)?;
    let inv_scale = 1.0 / model.amp_scale();
    let mut series = WaveSeries::new(model.grid, 1.0, 0.0)?;
    let mut state = model.state.clone();
    let mut y_prev = y_prev;
    for _ in 0..n_steps {
        state = drive(model, &state, &y_prev)?;
        let mut y = readout(model, &state)?;
        maybe_renormalize(model, &mut y);
        series.push(y.iter().map(|a| a * inv_scale).collect())?;
        y_prev = y;
    }
    model.state = state;
    model.last_output = Some(y_prev);
    Ok(series)
}
