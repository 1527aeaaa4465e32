//! Radial reduction of the fibrewise Poisson problem on the Eguchi–Hanson space.
//!
//! For U(2)-invariant data the Laplacian reduces to
//! Δu = −ρ⁻¹ (ρ κ u′)′ with ρ the radial volume density and κ = h^{rr}.
//! In x = log r this is −(r²κ u_x)_x = r⁴ (ρ/r³) f, discretised by a conservative
//! three-point scheme on a uniform x grid.

use crate::eguchi_hanson::{metric_h, EhError};
use crate::forms::loglog_slope;
use crate::linalg::{det_f64, inverse_f64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const MAX_GAMMA: f64 = 0.5;
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Slack on fitted slopes.
pub const SLOPE_TOL: f64 = 0.1;
/// Tail slopes above this, halfway between the indicial roots 0 and −2, count as non-decaying.
pub const GROWTH_SLOPE: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FibreError {
    #[error("decay offset must lie in (0, {MAX_GAMMA}], got {0}")]
    BadGamma(f64),
    #[error("grid must satisfy 0 < r0 < r_max with r_max/r0 >= 1e3 and at least 16 nodes")]
    GridTooSmall,
    #[error("source decays with slope {0:.3}, slower than required")]
    NonDecayingSource(f64),
    #[error("solution tail slope {0:.3} lies outside the decaying window")]
    NonDecaying(f64),
    #[error("discrete residual {0:e} above tolerance")]
    Residual(f64),
    #[error("iterative solve did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Eh(#[from] EhError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    dx: f64,
}

impl RadialGrid {
    pub fn log_spaced(r0: f64, r_max: f64, count: usize) -> Result<Self, FibreError> {
        if !(r0 > 0.0 && r_max / r0 >= 1e3 && r_max.is_finite() && count >= 16) {
            return Err(FibreError::GridTooSmall);
        }
        let (x0, x1) = (r0.ln(), r_max.ln());
        let dx = (x1 - x0) / (count - 1) as f64;
        let nodes = (0..count).map(|i| (x0 + dx * i as f64).exp()).collect();
        Ok(RadialGrid { nodes, dx })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    /// Every other node, for refinement studies.
    pub fn coarsened(&self) -> Option<RadialGrid> {
        if self.len() % 2 == 0 || self.len() < 33 {
            return None;
        }
        Some(RadialGrid {
            nodes: self.nodes.iter().step_by(2).cloned().collect(),
            dx: 2.0 * self.dx,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterBoundary {
    /// u′/u = −2/r.
    DecayRobin,
    /// Prescribed value at r_max.
    Dirichlet(f64),
}

/// Symmetric tridiagonal system K u = W f with lumped weights W.
#[derive(Clone, Debug)]
pub struct RadialOperator {
    grid: RadialGrid,
    /// ρ/r³ at the nodes.
    density: Vec<f64>,
    conductivity: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
    weights: Vec<f64>,
    outer: OuterBoundary,
}

/// (ρ/r³, κ) along the ray y = (r, 0, 0, 0).
pub fn sample_coefficients(a: f64, r: f64) -> Result<(f64, f64), EhError> {
    let h = metric_h(a, &[r, 0.0, 0.0, 0.0])?;
    let inv = inverse_f64(&h).ok_or(EhError::OnBolt(r))?;
    Ok((det_f64(&h).sqrt(), inv[(0, 0)]))
}

impl RadialOperator {
    pub fn eguchi_hanson(a: f64, grid: RadialGrid, outer: OuterBoundary) -> Result<Self, FibreError> {
        let coeff = |r: f64| sample_coefficients(a, r);
        Self::assemble(grid, outer, &coeff)
    }

    pub fn assemble(
        grid: RadialGrid,
        outer: OuterBoundary,
        coeff: &dyn Fn(f64) -> Result<(f64, f64), EhError>,
    ) -> Result<Self, FibreError> {
        let n = grid.len();
        let dx = grid.dx;
        let mut density = Vec::with_capacity(n);
        let mut conductivity = Vec::with_capacity(n);
        for &r in grid.nodes() {
            let (d, k) = coeff(r)?;
            density.push(d);
            conductivity.push(k);
        }
        // face coefficient r² κ ρ/r³ at geometric midpoints
        let faces: Vec<f64> = grid
            .nodes
            .windows(2)
            .map(|w| {
                let r = (w[0] * w[1]).sqrt();
                coeff(r).map(|(d, k)| r * r * k * d)
            })
            .collect::<Result<_, _>>()?;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for (i, &p) in faces.iter().enumerate() {
            let c = p / dx;
            diag[i] += c;
            diag[i + 1] += c;
            off[i] = -c;
        }
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let r = grid.nodes[i];
                let cell = if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
                cell * r.powi(4) * density[i]
            })
            .collect();
        if outer == OuterBoundary::DecayRobin {
            let r = grid.r_max();
            diag[n - 1] += 2.0 * r * r * conductivity[n - 1] * density[n - 1];
        }
        Ok(RadialOperator {
            grid,
            density,
            conductivity,
            diag,
            off,
            weights,
            outer,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn conductivity(&self) -> &[f64] {
        &self.conductivity
    }

    pub fn outer(&self) -> OuterBoundary {
        self.outer
    }

    /// K u.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * u[i];
                if i > 0 {
                    v += self.off[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * u[i + 1];
                }
                v
            })
            .collect()
    }

    /// Discrete Δu = W⁻¹ K u.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply(u).iter().zip(&self.weights).map(|(k, w)| k / w).collect()
    }

    /// ⟨u, v⟩ weighted by the discrete volume.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    fn system(&self, source: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rhs: Vec<f64> = source.iter().zip(&self.weights).map(|(f, w)| f * w).collect();
        let mut diag = self.diag.clone();
        let mut off = self.off.clone();
        if let OuterBoundary::Dirichlet(value) = self.outer {
            let n = diag.len();
            rhs[n - 2] -= off[n - 2] * value;
            off[n - 2] = 0.0;
            diag[n - 1] = 1.0;
            rhs[n - 1] = value;
        }
        (diag, off, rhs)
    }

    /// Direct tridiagonal solve; returns (u, relative residual).
    pub fn solve_direct(&self, source: &[f64]) -> (Vec<f64>, f64) {
        let (diag, off, rhs) = self.system(source);
        let u = thomas(&diag, &off, &rhs);
        let res = relative_residual(&diag, &off, &rhs, &u);
        (u, res)
    }

    /// Jacobi-preconditioned conjugate gradients from `start`.
    pub fn solve_cg(&self, source: &[f64], start: &[f64], tol: f64) -> Result<Vec<f64>, FibreError> {
        let (diag, off, rhs) = self.system(source);
        let apply = |v: &[f64]| tridiag_apply(&diag, &off, v);
        let n = rhs.len();
        let mut u = start.to_vec();
        let au = apply(&u);
        let mut r: Vec<f64> = rhs.iter().zip(&au).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(x, d)| x / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = dot(&r, &z);
        let bnorm = dot(&rhs, &rhs).sqrt().max(f64::MIN_POSITIVE);
        let max_iter = 50 * n;
        for _ in 0..max_iter {
            if dot(&r, &r).sqrt() <= tol * bnorm {
                return Ok(u);
            }
            let ap = apply(&p);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            z = r.iter().zip(&diag).map(|(x, d)| x / d).collect();
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(FibreError::NoConvergence(max_iter))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tridiag_apply(diag: &[f64], off: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut v = diag[i] * u[i];
            if i > 0 {
                v += off[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                v += off[i] * u[i + 1];
            }
            v
        })
        .collect()
}

fn relative_residual(diag: &[f64], off: &[f64], rhs: &[f64], u: &[f64]) -> f64 {
    let au = tridiag_apply(diag, off, u);
    let num: f64 = au.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / m;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut u = vec![0.0; n];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - c[i] * u[i + 1];
    }
    u
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
    /// Log-log slope of |u| over the fit window, if u is not identically zero there.
    pub tail_slope: Option<f64>,
}

impl RadialSolution {
    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn tail_window(r_max: f64) -> (f64, f64) {
    (r_max * 1e-3, r_max * 1e-2)
}

/// Log-log slope of |values| over nodes in [lo, hi], `None` if they vanish there.
pub fn fitted_slope(r: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = r
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, v)| (*x, v.abs()))
        .unzip();
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if xs.len() < 2 || ys.iter().any(|v| *v <= 1e-300) || ys.iter().all(|v| *v <= 1e-14 * peak) {
        return None;
    }
    Some(loglog_slope(&xs, &ys))
}

pub fn check_gamma(gamma: f64) -> Result<(), FibreError> {
    if gamma > 0.0 && gamma <= MAX_GAMMA {
        Ok(())
    } else {
        Err(FibreError::BadGamma(gamma))
    }
}

/// Solve Δu = f with decay, for sources O(r^{−4+γ}).
pub fn solve_poisson(op: &RadialOperator, source: &dyn Fn(f64) -> f64, gamma: f64) -> Result<RadialSolution, FibreError> {
    check_gamma(gamma)?;
    let r = op.grid().nodes().to_vec();
    let r_max = op.grid().r_max();
    let f: Vec<f64> = r.iter().map(|&x| source(x)).collect();
    if let Some(s) = fitted_slope(&r, &f, r_max * 0.1, r_max) {
        if s > -4.0 + gamma + SLOPE_TOL {
            return Err(FibreError::NonDecayingSource(s));
        }
    }
    let (u, residual) = op.solve_direct(&f);
    if residual > RESIDUAL_TOL {
        return Err(FibreError::Residual(residual));
    }
    let (lo, hi) = tail_window(r_max);
    let tail_slope = fitted_slope(&r, &u, lo, hi);
    if let Some(s) = tail_slope {
        if s > GROWTH_SLOPE {
            return Err(FibreError::NonDecaying(s));
        }
    }
    Ok(RadialSolution {
        r,
        u,
        residual,
        tail_slope,
    })
}

/// Solves from the zero vector and from a seeded random start with CG; returns the max difference.
pub fn uniqueness_gap(op: &RadialOperator, source: &dyn Fn(f64) -> f64, seed: u64) -> Result<f64, FibreError> {
    let f: Vec<f64> = op.grid().nodes().iter().map(|&x| source(x)).collect();
    let n = f.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u0 = op.solve_cg(&f, &vec![0.0; n], 1e-14)?;
    let u1 = op.solve_cg(&f, &start, 1e-14)?;
    let scale = u0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(u0.iter().zip(&u1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

/// Decaying radial solution of the flat problem, ½[r⁻²∫₀^r s³f ds + ∫_r^∞ s f ds],
/// by composite Simpson quadrature in log r.
pub fn flat_oracle(source: &dyn Fn(f64) -> f64, r: f64, r_inf: f64, panels: usize) -> f64 {
    let lo = 1e-8f64.min(r * 1e-6);
    let inner = simpson_log(&|s| s.powi(3) * source(s), lo, r, panels);
    let outer = simpson_log(&|s| s * source(s), r, r_inf, panels);
    0.5 * (inner / (r * r) + outer)
}

fn simpson_log(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let (xa, xb) = (a.ln(), b.ln());
    let h = (xb - xa) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = xa + h * i as f64;
        let s = x.exp();
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * g(s) * s;
    }
    acc * h / 3.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Leading exponent of ρκ at large r.
    pub flux_exponent: f64,
    /// Limit of κ at large r.
    pub conductivity_limit: f64,
    /// Roots of the indicial polynomial, ascending.
    pub roots: [f64; 2],
    /// Relative discrete Laplacian of r^λ on the outer decade, λ = 0, −1, −2, −3.
    pub harmonic_defects: Vec<(f64, f64)>,
}

/// Indicial roots at infinity of the reduced operator, from sampled coefficients.
pub fn verify_rates(a: f64) -> Result<RateReport, FibreError> {
    let r = 1e4 * a.sqrt();
    let flux = |x: f64| sample_coefficients(a, x).map(|(d, k)| d * k * x.powi(3));
    let step = 1e-3;
    let m = ((flux(r * (1.0 + step))?).ln() - (flux(r * (1.0 - step))?).ln())
        / ((1.0 + step).ln() - (1.0 - step).ln());
    let (_, kappa) = sample_coefficients(a, r)?;
    // κ λ(λ−1) + κ m λ = 0
    let b = m - 1.0;
    let mut roots = [0.0, -b];
    roots.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));

    let grid = RadialGrid::log_spaced(1e-2 * a.sqrt(), 1e4 * a.sqrt(), 801)?;
    let op = RadialOperator::eguchi_hanson(a, grid, OuterBoundary::DecayRobin)?;
    let nodes = op.grid().nodes();
    let mut defects = Vec::new();
    for lambda in [0.0, -1.0, -2.0, -3.0] {
        let u: Vec<f64> = nodes.iter().map(|x| x.powf(lambda)).collect();
        let lap = op.laplacian(&u);
        let mut worst = 0.0f64;
        for (i, x) in nodes.iter().enumerate() {
            if i == 0 || i + 1 == nodes.len() || *x < 1e2 * a.sqrt() || *x > 1e3 * a.sqrt() {
                continue;
            }
            // scale by the size of a single second-derivative term
            worst = worst.max((lap[i] * x * x / u[i]).abs());
        }
        defects.push((lambda, worst));
    }
    Ok(RateReport {
        flux_exponent: m,
        conductivity_limit: kappa,
        roots,
        harmonic_defects: defects,
    })
}
