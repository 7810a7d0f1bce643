//! Independent ground truth: direct diagonalization of the grid Hamiltonian
//! by Lanczos iteration with full reorthogonalization, matrix-free through
//! the FFT kinetic operator. Optionally restricted to the totally symmetric
//! (A1) sector by projecting every Krylov vector with the C4v symmetrizer.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::domain::{inner_product, Wavefunction};
use crate::error::{Error, Result};
use crate::propagator::{PropagatorPlan, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryFilter {
    None,
    A1,
}

/// One converged eigenpair of the grid Hamiltonian.
pub struct EigPair {
    pub energy: f64,
    pub state: Wavefunction,
    /// ||H phi - E phi|| / ||phi|| under the grid quadrature.
    pub residual: f64,
}

/// Applies the grid Hamiltonian (spectral kinetic + pointwise potential).
pub fn apply_hamiltonian(psi: &Wavefunction, plan: &PropagatorPlan) -> Result<Wavefunction> {
    psi.grid.check_same(&plan.grid)?;
    let mut out = psi.clone();
    let mut ws = plan.workspace();
    plan.apply_hamiltonian_in_place(&mut out.amps, &mut ws);
    out.label = format!("H({})", psi.label);
    Ok(out)
}

const LANCZOS_TOL: f64 = 1e-8;
const MAX_MATVECS: usize = 5000;

/// The k lowest eigenpairs of the grid Hamiltonian, by Lanczos with full
/// reorthogonalization. With `SymmetryFilter::A1` the iteration runs inside
/// the A1 sector (symmetrized start vector, re-projection each step).
pub fn lowest_eigenpairs(
    plan: &PropagatorPlan,
    k: usize,
    filter: SymmetryFilter,
) -> Result<Vec<EigPair>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need k >= 1 eigenpairs".into()));
    }
    let grid = plan.grid;
    let l = grid.len();
    let mut ws = plan.workspace();

    // deterministic start vector with broad support
    let mut v0 = Wavefunction::from_fn(grid, "start", |x, y| {
        let r2 = x * x + y * y;
        C64::new((-0.35 * r2).exp() * (1.0 + 0.3 * x * x + 0.17 * y * y + 0.05 * x * x * y * y), 0.0)
    });
    if filter == SymmetryFilter::A1 {
        v0 = v0.symmetrize_a1()?;
    }
    let mut v = v0.normalized()?.amps;

    let mut basis: Vec<Vec<C64>> = vec![v.clone()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let w_quad = grid.cell_area();

    let dot = |a: &[C64], b: &[C64]| -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * w_quad
    };

    let mut matvecs = 0usize;
    let block = 40usize.max(3 * k);
    let mut exhausted = false;
    let mut best: Option<Vec<EigPair>> = None;
    let mut best_residuals: Vec<f64> = Vec::new();

    loop {
        // extend the Krylov basis by `block` vectors
        for _ in 0..block {
            if matvecs >= MAX_MATVECS {
                break;
            }
            let j = basis.len() - 1;
            let mut w = basis[j].clone();
            plan.apply_hamiltonian_in_place(&mut w, &mut ws);
            matvecs += 1;
            if filter == SymmetryFilter::A1 {
                w = symmetrize_amps(&w, grid.nx);
            }
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            axpy(&mut w, &basis[j], -a);
            if j > 0 {
                let b_prev = beta[j - 1];
                axpy(&mut w, &basis[j - 1], -b_prev);
            }
            // full reorthogonalization, twice for numerical safety
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy_c(&mut w, q, -c);
                }
            }
            let b = (w.iter().map(|x| x.norm_sqr()).sum::<f64>() * w_quad).sqrt();
            if b < 1e-13 {
                // invariant subspace exhausted; drop the trailing alpha so
                // the tridiagonal matrix stays consistent with the basis
                alpha.pop();
                exhausted = true;
                break;
            }
            beta.push(b);
            let inv = 1.0 / b;
            for x in &mut w {
                *x *= inv;
            }
            basis.push(w);
        }

        let m = alpha.len();
        if m >= k {
            // Ritz pairs of the tridiagonal matrix, then true residuals
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

            let mut pairs = Vec::with_capacity(k);
            let mut residuals = Vec::with_capacity(k);
            for &i in order.iter().take(k) {
                let e = eig.eigenvalues[i];
                let mut amps = vec![C64::new(0.0, 0.0); l];
                for (r, q) in basis.iter().take(m).enumerate() {
                    let c = eig.eigenvectors[(r, i)];
                    if c != 0.0 {
                        for (a, qv) in amps.iter_mut().zip(q) {
                            *a += qv * c;
                        }
                    }
                }
                let state =
                    Wavefunction::new(grid, amps, format!("oracle_E{e:.5}"))?.normalized()?;
                let mut h_amps = state.amps.clone();
                plan.apply_hamiltonian_in_place(&mut h_amps, &mut ws);
                let res = {
                    let mut acc = 0.0;
                    for (h, s) in h_amps.iter().zip(&state.amps) {
                        acc += (h - s * e).norm_sqr();
                    }
                    (acc * w_quad).sqrt()
                };
                residuals.push(res);
                pairs.push(EigPair { energy: e, state, residual: res });
            }
            let done = residuals.iter().all(|&r| r <= LANCZOS_TOL.max(1e-8));
            let improved = best_residuals.is_empty()
                || residuals.iter().cloned().fold(0.0, f64::max)
                    < best_residuals.iter().cloned().fold(0.0, f64::max);
            if improved {
                best = Some(pairs);
                best_residuals = residuals;
            }
            if done {
                break;
            }
        }
        if exhausted || matvecs >= MAX_MATVECS {
            break;
        }
    }

    let pairs = best.ok_or(Error::NoConvergence { matvecs, residuals: best_residuals.clone() })?;
    if pairs.iter().any(|p| p.residual > 1e-6) {
        return Err(Error::NoConvergence { matvecs, residuals: best_residuals });
    }
    Ok(pairs)
}

fn symmetrize_amps(amps: &[C64], n: usize) -> Vec<C64> {
    let flip = |i: usize| (n - i) % n;
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for ix in 0..n {
        let fx = flip(ix);
        for iy in 0..n {
            let fy = flip(iy);
            let s = amps[ix * n + iy]
                + amps[fx * n + iy]
                + amps[ix * n + fy]
                + amps[fx * n + fy]
                + amps[iy * n + ix]
                + amps[fy * n + ix]
                + amps[iy * n + fx]
                + amps[fy * n + fx];
            out[ix * n + iy] = s / 8.0;
        }
    }
    out
}

fn axpy(dst: &mut [C64], src: &[C64], factor: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s * factor;
    }
}

fn axpy_c(dst: &mut [C64], src: &[C64], factor: C64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s * factor;
    }
}

/// Orthonormality defect of a set of states: max |<i|j> - delta_ij|.
pub fn orthonormality_defect(pairs: &[EigPair]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..pairs.len() {
        for j in i..pairs.len() {
            let ip = inner_product(&pairs[i].state, &pairs[j].state).unwrap();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - C64::new(target, 0.0)).norm());
        }
    }
    worst
}
