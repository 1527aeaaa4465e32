//! The Eguchi–Hanson family on the double cover ℂ²∖{0} with coordinates y1..y4,
//! complex structure z1 = y1 + i y2, z2 = y3 + i y4.
//!
//! With s = r² and q = √(s² + a²) the potential is F(s) = q + a log s − a log(q + a),
//! and the Kähler form is ω = F'(s) ω₀ − ½F''(s) ds∧θ where
//! θ = y2 dy1 − y1 dy2 + y4 dy3 − y3 dy4.

use crate::forms::{fd_exterior_derivative, loglog_slope, FormError, KForm, Stencil};
use crate::g2::{fundamental_relation_residual, G2Error};
use crate::hk4::{standard_omegas, CYCLIC, HORIZONTAL, VERTICAL};
use crate::linalg::{inverse_f64, Mat};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EhError {
    #[error("parameters must be positive (a = {a}, t = {t})")]
    BadParams { a: f64, t: f64 },
    #[error("radius must be positive, got {0}")]
    OnBolt(f64),
    #[error("quadrature did not converge: {0} vs {1}")]
    QuadratureNotConverged(f64, f64),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    G2(#[from] G2Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhParams {
    a: f64,
    t: f64,
}

impl EhParams {
    pub fn new(a: f64, t: f64) -> Result<Self, EhError> {
        if !(a > 0.0 && t > 0.0 && a.is_finite() && t.is_finite()) {
            return Err(EhError::BadParams { a, t });
        }
        Ok(EhParams { a, t })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile { a: self.a }
    }
}

pub fn radius(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_radius(y: &[f64]) -> Result<f64, EhError> {
    let r = radius(y);
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(EhError::OnBolt(r))
    }
}

/// Radial potential and its derivatives in r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    a: f64,
}

impl RadialProfile {
    pub fn new(a: f64) -> Result<Self, EhError> {
        EhParams::new(a, 1.0).map(|p| p.profile())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    fn q(&self, s: f64) -> f64 {
        s.hypot(self.a)
    }

    fn positive(r: f64) -> Result<(), EhError> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(EhError::OnBolt(r))
        }
    }

    /// √(r⁴+a²) − a log((√(r⁴+a²)+a)/r²).
    pub fn f_quotient_form(&self, r: f64) -> Result<f64, EhError> {
        Self::positive(r)?;
        let s = r * r;
        let q = self.q(s);
        Ok(q - self.a * ((q + self.a) / s).ln())
    }

    /// √(r⁴+a²) + 2a log r − a log(√(r⁴+a²)+a).
    pub fn f_log_form(&self, r: f64) -> Result<f64, EhError> {
        Self::positive(r)?;
        let q = self.q(r * r);
        Ok(q + 2.0 * self.a * r.ln() - self.a * (q + self.a).ln())
    }

    pub fn f(&self, r: f64) -> Result<f64, EhError> {
        self.f_quotient_form(r)
    }

    /// Derivatives of F in s = r², orders 1..=4.
    fn big_f_derivs(&self, s: f64) -> [f64; 4] {
        let a2 = self.a * self.a;
        let q = self.q(s);
        let f1 = q / s;
        let f2 = -a2 / (q * s * s);
        let f3 = a2 * (s * s + 2.0 * q * q) / (q.powi(3) * s.powi(3));
        let w = s * s + 2.0 * q * q;
        let f4 = a2
            * (6.0 / (q.powi(3) * s * s) - 3.0 * w / (q.powi(5) * s * s) - 3.0 * w / (q.powi(3) * s.powi(4)));
        [f1, f2, f3, f4]
    }

    /// f and its r-derivatives up to order 4.
    pub fn derivatives(&self, r: f64) -> Result<[f64; 5], EhError> {
        let f0 = self.f(r)?;
        let [a1, a2, a3, a4] = self.big_f_derivs(r * r);
        let (r2, r3, r4) = (r * r, r * r * r, r.powi(4));
        Ok([
            f0,
            2.0 * r * a1,
            2.0 * a1 + 4.0 * r2 * a2,
            12.0 * r * a2 + 8.0 * r3 * a3,
            12.0 * a2 + 48.0 * r2 * a3 + 16.0 * r4 * a4,
        ])
    }

    /// (f, f′, f″).
    pub fn potential(&self, r: f64) -> Result<(f64, f64, f64), EhError> {
        let d = self.derivatives(r)?;
        Ok((d[0], d[1], d[2]))
    }

    /// G = f − r², evaluated without cancellation.
    pub fn g_decay(&self, r: f64) -> Result<f64, EhError> {
        Self::positive(r)?;
        let s = r * r;
        let q = self.q(s);
        let a = self.a;
        let q_minus_s = a * a / (q + s);
        Ok(q_minus_s - a * ((q_minus_s + a) / s).ln_1p())
    }

    /// (G, G′, G″) without cancellation.
    pub fn g_decay_derivs(&self, r: f64) -> Result<[f64; 3], EhError> {
        let g = self.g_decay(r)?;
        let s = r * r;
        let q = self.q(s);
        let a2 = self.a * self.a;
        let g1 = 2.0 * a2 / ((q + s) * r);
        let g2 = -2.0 * a2 * (s / (q + s) + 1.0) / (q * s);
        Ok([g, g1, g2])
    }

    /// H(u) = √(u+a²) − a log(√(u+a²)+a), so that f = 2a log r + H(r⁴).
    pub fn h_smooth(&self, u: f64) -> f64 {
        let v = (u + self.a * self.a).sqrt();
        v - self.a * (v + self.a).ln()
    }

    /// Radial conductivity h^{rr} = √(r⁴+a²)/r².
    pub fn kappa_closed_form(&self, r: f64) -> f64 {
        self.q(r * r) / (r * r)
    }
}

/// θ = y2 dy1 − y1 dy2 + y4 dy3 − y3 dy4, with I(ds) = 2θ.
fn theta_form(y: &[f64]) -> KForm<f64> {
    KForm::from_coeffs(4, 1, vec![y[1], -y[0], y[3], -y[2]]).expect("4 coefficients")
}

fn ds_form(y: &[f64]) -> KForm<f64> {
    KForm::from_coeffs(4, 1, y.iter().map(|v| 2.0 * v).collect()).expect("4 coefficients")
}

/// Kähler form ω^I_a at a point of ℂ²∖{0}, evaluated analytically.
pub fn omega_i(a: f64, y: &[f64]) -> Result<KForm<f64>, EhError> {
    check_radius(y)?;
    RadialProfile::new(a)?;
    // Split ω₀ = σ + ω_⊥ with σ = −ds∧θ/(2s) on the plane of r∂_r and its I-rotation.
    // Then ω = (q/s) ω_⊥ + (s/q) σ, which avoids cancelling F′ + sF″ near the bolt.
    let s: f64 = y.iter().map(|v| v * v).sum();
    let q = s.hypot(a);
    let w0 = standard_omegas::<f64>()[0].clone();
    let sigma = ds_form(y).wedge(&theta_form(y))?.scale(&(-0.5 / s));
    let perp = &w0 - &sigma;
    Ok(&perp.scale(&(q / s)) + &sigma.scale(&(s / q)))
}

/// The triple (ω^I_a, ω^J, ω^K); the last two are the flat forms.
pub fn triple(a: f64, y: &[f64]) -> Result<[KForm<f64>; 3], EhError> {
    let [_, wj, wk] = standard_omegas::<f64>();
    Ok([omega_i(a, y)?, wj, wk])
}

/// Standard complex structure I on vectors.
pub fn complex_structure() -> Mat<f64> {
    Mat::from_rows(&[
        vec![0.0, -1.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, -1.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ])
}

fn two_form_matrix(w: &KForm<f64>) -> Mat<f64> {
    Mat::from_fn(4, 4, |i, j| w.coeff(&[i, j]))
}

/// h_a(u,v) = ω^I_a(u, Iv).
pub fn metric_h(a: f64, y: &[f64]) -> Result<Mat<f64>, EhError> {
    Ok(two_form_matrix(&omega_i(a, y)?).mul(&complex_structure()))
}

/// (r, max|h_a − h₀|) along the diagonal ray y = r(1,1,1,1)/2, with the log-log slope.
pub fn ale_decay(a: f64, radii: &[f64]) -> Result<(Vec<(f64, f64)>, f64), EhError> {
    let id = Mat::<f64>::identity(4);
    let rows = radii
        .iter()
        .map(|&r| {
            let y = [0.5 * r; 4];
            Ok((r, metric_h(a, &y)?.sub(&id).max_abs()))
        })
        .collect::<Result<Vec<_>, EhError>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().cloned().unzip();
    Ok((rows, loglog_slope(&xs, &ys)))
}

/// Induced area of the bolt, πa t², by quadrature over the affine chart w of ℂP¹.
///
/// The section w ↦ ε(1, w)/√(1+|w|²) sits on the sphere r = ε; its ω^I_a-area is
/// computed numerically and the ε⁴ correction removed by Richardson extrapolation
/// in ε² (the area is an even function of ε²).
pub fn bolt_area(params: &EhParams) -> Result<f64, EhError> {
    let a = params.a;
    let eps = 1e-3 * a.sqrt();
    let coarse = section_area(a, eps, 96)?;
    let fine = section_area(a, eps, 192)?;
    if ((coarse - fine) / fine).abs() > 1e-6 {
        return Err(EhError::QuadratureNotConverged(coarse, fine));
    }
    Ok(fine * params.t * params.t)
}

/// ∫ σ_ε*ω^I_a over the w-plane using polar coordinates w = tan β · e^{iα}.
pub fn section_area(a: f64, eps: f64, n: usize) -> Result<f64, EhError> {
    let n = n + n % 2;
    let nb = n;
    let na = 2 * n;
    let hb = (PI / 2.0) / nb as f64;
    let ha = 2.0 * PI / na as f64;
    let mut total = 0.0;
    for ib in 0..=nb {
        let beta = ib as f64 * hb;
        let wb = if ib == 0 || ib == nb {
            1.0
        } else if ib % 2 == 1 {
            4.0
        } else {
            2.0
        };
        if ib == nb {
            continue;
        }
        let rho = beta.tan();
        let jac = rho / beta.cos().powi(2);
        let mut ring = 0.0;
        for ia in 0..na {
            let alpha = ia as f64 * ha;
            let (x, yv) = (rho * alpha.cos(), rho * alpha.sin());
            ring += section_density(a, eps, x, yv)?;
        }
        total += wb * ring * ha * jac;
    }
    Ok(total * hb / 3.0)
}

/// σ*ω^I_a (∂x, ∂y) at w = x + iy.
fn section_density(a: f64, eps: f64, x: f64, y: f64) -> Result<f64, EhError> {
    let n2 = 1.0 + x * x + y * y;
    let n = n2.sqrt();
    let n3 = n2 * n;
    let point = [eps / n, 0.0, eps * x / n, eps * y / n];
    let dx = [-eps * x / n3, 0.0, eps * (1.0 / n - x * x / n3), -eps * x * y / n3];
    let dy = [-eps * y / n3, 0.0, -eps * x * y / n3, eps * (1.0 / n - y * y / n3)];
    let w = two_form_matrix(&omega_i(a, &point)?);
    let wdy = w.mul_vec(&dy);
    Ok(dx.iter().zip(&wdy).map(|(u, v)| u * v).sum())
}

/// Torsion-free product structure (φ, ψ, g) on ℝ³ × X at (x, y).
pub fn product_structure(params: &EhParams, point: &[f64]) -> Result<(KForm<f64>, KForm<f64>, Mat<f64>), EhError> {
    let y = &point[3..7];
    let t2 = params.t * params.t;
    let omegas = triple(params.a, y)?;
    let e = |k: usize| KForm::<f64>::basis_element(7, &[HORIZONTAL[k]]);
    let mut phi = KForm::from_terms(7, &[(1, "123")]);
    let vol_x = KForm::<f64>::from_terms(4, &[(1, "1234")]).embed(7, &VERTICAL);
    let mut psi = vol_x.scale(&(t2 * t2));
    for k in 0..3 {
        let wk = omegas[k].embed(7, &VERTICAL).scale(&t2);
        phi = &phi - &wk.wedge(&e(k))?;
        let (i, j) = CYCLIC[k];
        psi = &psi - &wk.wedge(&e(i))?.wedge(&e(j))?;
    }
    let h = metric_h(params.a, y)?;
    let g = Mat::from_fn(7, 7, |i, j| match (i < 3, j < 3) {
        (true, true) => {
            if i == j {
                1.0
            } else {
                0.0
            }
        }
        (false, false) => t2 * h[(i - 3, j - 3)],
        _ => 0.0,
    });
    Ok((phi, psi, g))
}

/// Fundamental-relation residual of the product structure at `point` with step `h`.
pub fn product_relation_residual(params: &EhParams, point: &[f64], h: f64) -> Result<f64, EhError> {
    let field = |x: &[f64]| match product_structure(params, x) {
        Ok((phi, _, _)) => phi,
        Err(_) => KForm::from_coeffs(7, 3, vec![f64::NAN; 35]).expect("35 coefficients"),
    };
    Ok(fundamental_relation_residual(&field, point, h, Stencil::Central2)?)
}

/// max |dφ| + max |dψ| of the product structure by central differences.
pub fn product_torsion_fd(params: &EhParams, point: &[f64], h: f64) -> Result<f64, EhError> {
    check_radius(&point[3..7])?;
    let nan = |deg: usize| KForm::from_coeffs(7, deg, vec![f64::NAN; 35]).expect("35 coefficients");
    let phi = |x: &[f64]| product_structure(params, x).map(|v| v.0).unwrap_or_else(|_| nan(3));
    let psi = |x: &[f64]| product_structure(params, x).map(|v| v.1).unwrap_or_else(|_| nan(4));
    let dphi = fd_exterior_derivative(&phi, point, h)?;
    let dpsi = fd_exterior_derivative(&psi, point, h)?;
    Ok(dphi.max_abs() + dpsi.max_abs())
}

type MetricField<'a> = &'a dyn Fn(&[f64]) -> Mat<f64>;

fn d4(f: &dyn Fn(f64) -> Mat<f64>, h: f64) -> Mat<f64> {
    let a = f(2.0 * h);
    let b = f(h);
    let c = f(-h);
    let d = f(-2.0 * h);
    b.sub(&c).scale(&8.0).sub(&a).add(&d).scale(&(1.0 / (12.0 * h)))
}

/// Christoffel symbols Γ^k_{ij} (flattened k*n*n + i*n + j) by 4th-order differences.
pub fn christoffel_fd(metric: MetricField<'_>, p: &[f64], h: f64) -> Vec<f64> {
    let n = p.len();
    let g = metric(p);
    let ginv = inverse_f64(&g).expect("non-degenerate metric");
    let dg: Vec<Mat<f64>> = (0..n)
        .map(|l| {
            d4(
                &|s| {
                    let mut x = p.to_vec();
                    x[l] += s;
                    metric(&x)
                },
                h,
            )
        })
        .collect();
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[k * n * n + i * n + j] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// Ricci tensor by nested 4th-order central differences.
pub fn ricci_fd(metric: MetricField<'_>, p: &[f64], h: f64) -> Mat<f64> {
    let n = p.len();
    let gam = christoffel_fd(metric, p, h);
    let at = |k: usize, i: usize, j: usize| gam[k * n * n + i * n + j];
    let dgam: Vec<Vec<f64>> = (0..n)
        .map(|l| {
            let shifted = |s: f64| {
                let mut x = p.to_vec();
                x[l] += s;
                christoffel_fd(metric, &x, h)
            };
            let (a, b, c, d) = (shifted(2.0 * h), shifted(h), shifted(-h), shifted(-2.0 * h));
            (0..a.len()).map(|m| (8.0 * (b[m] - c[m]) - a[m] + d[m]) / (12.0 * h)).collect()
        })
        .collect();
    let dat = |l: usize, k: usize, i: usize, j: usize| dgam[l][k * n * n + i * n + j];
    Mat::from_fn(n, n, |i, j| {
        let mut r = 0.0;
        for k in 0..n {
            r += dat(k, k, i, j) - dat(j, k, i, k);
            for l in 0..n {
                r += at(k, k, l) * at(l, i, j) - at(k, j, l) * at(l, i, k);
            }
        }
        r
    })
}

/// max |Ric| of h_a at `y` with step `h`.
pub fn ricci_norm(a: f64, y: &[f64], h: f64) -> Result<f64, EhError> {
    check_radius(y)?;
    let m = |x: &[f64]| metric_h(a, x).unwrap_or_else(|_| Mat::from_fn(4, 4, |_, _| f64::NAN));
    Ok(ricci_fd(&m, y, h).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::theta;
    use crate::linalg::symmetric_eigenvalues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_y(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = radius(&dir);
        let r = rng.gen_range(lo..hi);
        dir.iter().map(|v| v * r / n).collect()
    }

    #[test]
    fn value_at_one() {
        let p = RadialProfile::new(1.0).unwrap();
        let expect = 2f64.sqrt() - (2f64.sqrt() + 1.0).ln();
        assert!((p.f(1.0).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.532839).abs() < 1e-6);
    }

    #[test]
    fn two_forms_agree() {
        for a in [0.5, 1.0, 2.5] {
            let p = RadialProfile::new(a).unwrap();
            let mut r = 1e-3;
            while r <= 1e3 {
                let (x, y) = (p.f_quotient_form(r).unwrap(), p.f_log_form(r).unwrap());
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{r} {x} {y}");
                r *= 1.37;
            }
        }
    }

    #[test]
    fn scaling_in_a() {
        let p4 = RadialProfile::new(4.0).unwrap();
        let p1 = RadialProfile::new(1.0).unwrap();
        let lhs = p4.f(3.0).unwrap();
        let rhs = 4.0 * p1.f(1.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
    }

    #[test]
    fn bad_radius() {
        assert!(matches!(RadialProfile::new(1.0).unwrap().f(0.0), Err(EhError::OnBolt(_))));
        assert!(matches!(omega_i(1.0, &[0.0; 4]), Err(EhError::OnBolt(_))));
        assert!(EhParams::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = RadialProfile::new(1.3).unwrap();
        let h = 1e-4;
        for r in [0.4, 1.0, 2.7] {
            let d = p.derivatives(r).unwrap();
            for k in 1..5 {
                let fd = (p.derivatives(r + h).unwrap()[k - 1] - p.derivatives(r - h).unwrap()[k - 1]) / (2.0 * h);
                assert!((fd - d[k]).abs() < 1e-6 * d[k].abs().max(1.0), "order {k} at {r}");
            }
            let closed = 2.0 * (r.powi(4) + 1.69f64).sqrt() / r;
            assert!((d[1] - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_slopes() {
        let p = RadialProfile::new(1.0).unwrap();
        let rs: Vec<f64> = (0..10).map(|i| 10.0 * 1.4f64.powi(i)).collect();
        for k in 0..3 {
            let v: Vec<f64> = rs.iter().map(|&r| p.g_decay_derivs(r).unwrap()[k].abs()).collect();
            let slope = loglog_slope(&rs, &v);
            assert!((slope - (-2.0 - k as f64)).abs() < 0.05, "k={k} slope {slope}");
        }
        let r = 200.0;
        assert!((p.g_decay(r).unwrap() + 1.0 / (2.0 * r * r)).abs() < 1e-3 / (r * r));
    }

    #[test]
    fn smooth_part_at_bolt() {
        for a in [0.5, 1.0, 3.0] {
            let p = RadialProfile::new(a).unwrap();
            let h0 = a - a * (2.0 * a).ln();
            assert!((p.h_smooth(0.0) - h0).abs() < 1e-14);
            for r in [1e-2, 2e-2, 4e-2] {
                let k = p.f_log_form(r).unwrap() - 2.0 * a * r.ln();
                let quartic = (k - h0) / r.powi(4);
                assert!((quartic - 1.0 / (4.0 * a)).abs() < 1e-3 / a, "{quartic}");
            }
        }
    }

    #[test]
    fn omega_is_self_dual_closed_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let y = random_y(&mut rng, 0.3, 3.0);
            let w = omega_i(1.0, &y).unwrap();
            let star = crate::forms::ModelSpace::new(metric_h(1.0, &y).unwrap(), 1).unwrap();
            assert!(star.hodge(&w).unwrap().max_abs_diff(&w) < 1e-12);
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            assert_eq!(omega_i(1.0, &neg).unwrap(), w);
            let field = |x: &[f64]| omega_i(1.0, x).unwrap();
            let d1 = fd_exterior_derivative(&field, &y, 1e-3).unwrap().max_abs();
            let d2 = fd_exterior_derivative(&field, &y, 5e-4).unwrap().max_abs();
            assert!(d2 < 1e-4 && d2 < d1 / 3.0 + 1e-10, "{d1} {d2}");
            let [wi, wj, _] = triple(1.0, &y).unwrap();
            assert!(wi.wedge(&wi).unwrap().max_abs_diff(&wj.wedge(&wj).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn flat_limit() {
        let y = [0.6, -0.4, 1.1, 0.3];
        let r4 = radius(&y).powi(4);
        let w0 = standard_omegas::<f64>()[0].clone();
        for a in [1e-2, 1e-3] {
            let diff = omega_i(a, &y).unwrap().max_abs_diff(&w0);
            assert!(diff < 2.0 * a * a / r4, "{a} {diff}");
        }
    }

    #[test]
    fn metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let i = complex_structure();
        for _ in 0..10 {
            let y = random_y(&mut rng, 0.2, 4.0);
            let h = metric_h(1.0, &y).unwrap();
            assert!(h.is_symmetric(1e-12));
            assert!(symmetric_eigenvalues(&h)[0] > 0.0);
            assert!((h.det() - 1.0).abs() < 1e-12);
            let hi = i.transpose().mul(&h).mul(&i);
            assert!(hi.sub(&h).max_abs() < 1e-12);
        }
    }

    #[test]
    fn metric_scaling_in_a() {
        let a: f64 = 2.3;
        let y = [0.7, 0.2, -1.1, 0.5];
        let ys: Vec<f64> = y.iter().map(|v| v / a.sqrt()).collect();
        let ha = metric_h(a, &y).unwrap();
        let h1 = metric_h(1.0, &ys).unwrap();
        assert!(ha.sub(&h1).max_abs() < 1e-10);
    }

    #[test]
    fn ale_slope() {
        let radii: Vec<f64> = (0..=10).map(|i| 5.0 * 10f64.powf(i as f64 / 10.0)).collect();
        let (rows, slope) = ale_decay(1.0, &radii).unwrap();
        assert!((slope + 4.0).abs() < 0.1, "{slope}");
        assert!(rows[0].1 > rows[10].1);
    }

    #[test]
    fn radial_conductivity() {
        let p = RadialProfile::new(1.0).unwrap();
        for r in [0.3, 1.0, 5.0] {
            let h = metric_h(1.0, &[r, 0.0, 0.0, 0.0]).unwrap();
            let inv = h.inverse().unwrap();
            assert!((inv[(0, 0)] - p.kappa_closed_form(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn bolt_area_values() {
        for (a, t) in [(1.0, 1.0), (2.5, 1.0), (1.0, 0.1)] {
            let area = bolt_area(&EhParams::new(a, t).unwrap()).unwrap();
            let expect = PI * a * t * t;
            assert!(((area - expect) / expect).abs() < 1e-6, "{a} {t} {area}");
        }
    }

    #[test]
    fn product_theta_and_torsion() {
        let params = EhParams::new(1.0, 1.0).unwrap();
        let point = [0.2, -0.1, 0.4, 0.9, -0.3, 0.5, 0.7];
        let (phi, psi, g) = product_structure(&params, &point).unwrap();
        assert!(theta(&phi).unwrap().max_abs_diff(&psi) < 1e-9);
        let (gm, _) = crate::g2::metric_from_phi(&phi).unwrap();
        assert!(gm.sub(&g).max_abs() < 1e-9);
        // φ and ψ are affine in ω^I, so the discrete relation cancels identically.
        for h in [0.1, 0.05, 0.025] {
            assert!(product_relation_residual(&params, &point, h).unwrap() < 1e-11);
        }
        let t1 = product_torsion_fd(&params, &point, 0.02).unwrap();
        let t2 = product_torsion_fd(&params, &point, 0.01).unwrap();
        assert!((t1 / t2).log2() > 1.9, "{t1} {t2}");
    }

    #[test]
    fn ricci_flat() {
        let y = [1.1, 0.4, -0.7, 0.9];
        let r = radius(&y);
        let ric = ricci_norm(1.0, &y, r / 200.0).unwrap();
        assert!(ric < 1e-4, "{ric}");
        let c1 = ricci_norm(1.0, &y, r / 8.0).unwrap();
        let c2 = ricci_norm(1.0, &y, r / 16.0).unwrap();
        assert!(c1 / c2 > 8.0, "{c1} {c2}");
    }

    #[test]
    fn flat_ricci_vanishes() {
        let m = |_: &[f64]| Mat::<f64>::identity(4);
        assert!(ricci_fd(&m, &[0.1, 0.2, 0.3, 0.4], 0.01).max_abs() < 1e-12);
    }
}
