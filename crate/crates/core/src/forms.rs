//! Exterior algebra on flat model spaces.
//!
//! A [`KForm`] stores dense coefficients over the lexicographic basis of strictly
//! increasing multi-indices. Indices are 0-based internally; the string helper
//! [`KForm::from_terms`] uses 1-based digits so that `"123"` reads as `e1∧e2∧e3`.

use crate::linalg::Mat;
use crate::scalar::Scalar;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;
use thiserror::Error;

pub const MAX_DIM: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("space mismatch: dimension {left} vs {right}")]
    SpaceMismatch { left: usize, right: usize },
    #[error("degree overflow: {deg} exceeds dimension {dim}")]
    DegreeOverflow { deg: usize, dim: usize },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("non-finite field value at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("coefficient count {got} does not match basis size {expected}")]
    BadLength { got: usize, expected: usize },
}

struct Tables {
    /// by_degree[n][k] lists the masks of degree k in lexicographic order.
    by_degree: Vec<Vec<Vec<u8>>>,
    /// position[n][mask] is the index of `mask` within its degree block.
    position: Vec<Vec<usize>>,
}

fn lex_key(mask: u8) -> Vec<u8> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut by_degree = Vec::new();
        let mut position = Vec::new();
        for n in 0..=MAX_DIM {
            let mut degs = vec![Vec::new(); n + 1];
            for mask in 0u16..(1 << n) {
                degs[mask.count_ones() as usize].push(mask as u8);
            }
            let mut pos = vec![0; 1 << n];
            for list in degs.iter_mut() {
                list.sort_by_key(|&m| lex_key(m));
                for (i, &m) in list.iter().enumerate() {
                    pos[m as usize] = i;
                }
            }
            by_degree.push(degs);
            position.push(pos);
        }
        Tables { by_degree, position }
    })
}

/// Basis masks of degree `k` on an `n`-dimensional space, lexicographic.
pub fn basis(n: usize, k: usize) -> &'static [u8] {
    &tables().by_degree[n][k]
}

pub fn basis_index(n: usize, mask: u8) -> usize {
    tables().position[n][mask as usize]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn mask_indices(mask: u8) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

fn indices_mask(idx: &[usize]) -> Option<u8> {
    let mut m = 0u8;
    for &i in idx {
        let bit = 1u8 << i;
        if m & bit != 0 {
            return None;
        }
        m |= bit;
    }
    Some(m)
}

/// Sign of `e^A ∧ e^B` relative to `e^{A∪B}`; zero when the masks overlap.
pub fn wedge_sign(a: u8, b: u8) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0;
    for j in 0..8 {
        if b & (1 << j) != 0 {
            swaps += (a >> (j + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign of the permutation that sorts `idx`; zero on repeats.
pub fn sort_sign(idx: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] == idx[j] {
                return 0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn full_mask(n: usize) -> u8 {
    ((1u16 << n) - 1) as u8
}

#[derive(Clone, Debug, PartialEq)]
pub struct KForm<S> {
    dim: usize,
    deg: usize,
    c: Vec<S>,
}

impl<S: Scalar> KForm<S> {
    pub fn zero(dim: usize, deg: usize) -> Self {
        assert!(dim <= MAX_DIM && deg <= dim, "form of degree {deg} on dimension {dim}");
        KForm { dim, deg, c: vec![S::zero(); binomial(dim, deg)] }
    }

    pub fn scalar(dim: usize, s: S) -> Self {
        let mut f = Self::zero(dim, 0);
        f.c[0] = s;
        f
    }

    pub fn from_coeffs(dim: usize, deg: usize, c: Vec<S>) -> Result<Self, FormError> {
        if dim > MAX_DIM {
            return Err(FormError::UnsupportedDimension(dim));
        }
        if deg > dim {
            return Err(FormError::DegreeOverflow { deg, dim });
        }
        let expected = binomial(dim, deg);
        if c.len() != expected {
            return Err(FormError::BadLength { got: c.len(), expected });
        }
        Ok(KForm { dim, deg, c })
    }

    /// `coef · e^{i1}∧…∧e^{ik}` with indices in any order (0-based).
    pub fn term(dim: usize, coef: S, idx: &[usize]) -> Self {
        let mut f = Self::zero(dim, idx.len());
        let sign = sort_sign(idx);
        if sign != 0 {
            let mask = indices_mask(idx).expect("distinct indices");
            let v = if sign > 0 { coef } else { -coef };
            f.c[basis_index(dim, mask)] = v;
        }
        f
    }

    pub fn basis_element(dim: usize, idx: &[usize]) -> Self {
        Self::term(dim, S::one(), idx)
    }

    /// Sum of integer multiples of basis monomials written as 1-based digit strings.
    pub fn from_terms(dim: usize, terms: &[(i64, &str)]) -> Self {
        let deg = terms.first().map_or(0, |t| t.1.len());
        let mut f = Self::zero(dim, deg);
        for (coef, word) in terms {
            let idx: Vec<usize> = word
                .chars()
                .map(|ch| ch.to_digit(10).expect("digit index") as usize - 1)
                .collect();
            f = &f + &Self::term(dim, S::from_i64(*coef), &idx);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn coeffs(&self) -> &[S] {
        &self.c
    }

    pub fn coeff_of_mask(&self, mask: u8) -> &S {
        &self.c[basis_index(self.dim, mask)]
    }

    /// Coefficient of `e^{idx}` accounting for the ordering sign.
    pub fn coeff(&self, idx: &[usize]) -> S {
        let sign = sort_sign(idx);
        if sign == 0 || idx.len() != self.deg {
            return S::zero();
        }
        let v = self.coeff_of_mask(indices_mask(idx).unwrap()).clone();
        if sign > 0 {
            v
        } else {
            -v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// Non-zero terms as (sorted indices, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &S)> {
        basis(self.dim, self.deg)
            .iter()
            .zip(&self.c)
            .filter(|(_, v)| !v.is_zero())
            .map(|(&m, v)| (mask_indices(m), v))
    }

    fn check_same(&self, other: &Self) -> Result<(), FormError> {
        if self.dim != other.dim {
            return Err(FormError::SpaceMismatch { left: self.dim, right: other.dim });
        }
        if self.deg != other.deg {
            return Err(FormError::DegreeMismatch { left: self.deg, right: other.deg });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_same(other)?;
        Ok(KForm {
            dim: self.dim,
            deg: self.deg,
            c: self.c.iter().zip(&other.c).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, FormError> {
        self.try_add(&-other)
    }

    pub fn scale(&self, s: &S) -> Self {
        KForm { dim: self.dim, deg: self.deg, c: self.c.iter().map(|a| a.clone() * s.clone()).collect() }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        if self.dim != other.dim {
            return Err(FormError::SpaceMismatch { left: self.dim, right: other.dim });
        }
        let deg = self.deg + other.deg;
        if deg > self.dim {
            return Err(FormError::DegreeOverflow { deg, dim: self.dim });
        }
        let mut out = Self::zero(self.dim, deg);
        let ba = basis(self.dim, self.deg);
        let bb = basis(self.dim, other.deg);
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in other.c.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let s = wedge_sign(ba[i], bb[j]);
                if s == 0 {
                    continue;
                }
                let k = basis_index(self.dim, ba[i] | bb[j]);
                let p = x.clone() * y.clone();
                out.c[k] = if s > 0 { out.c[k].clone() + p } else { out.c[k].clone() - p };
            }
        }
        Ok(out)
    }

    /// Contraction `v ⌟ self` with a vector given in the coordinate basis.
    pub fn interior(&self, v: &[S]) -> Result<Self, FormError> {
        if v.len() != self.dim {
            return Err(FormError::SpaceMismatch { left: self.dim, right: v.len() });
        }
        if self.deg == 0 {
            return Err(FormError::DegreeZero);
        }
        let mut out = Self::zero(self.dim, self.deg - 1);
        for (m, x) in basis(self.dim, self.deg).iter().zip(&self.c) {
            if x.is_zero() {
                continue;
            }
            let mut pos = 0;
            for i in 0..self.dim {
                if m & (1 << i) == 0 {
                    continue;
                }
                if !v[i].is_zero() {
                    let k = basis_index(self.dim, m & !(1 << i));
                    let p = v[i].clone() * x.clone();
                    out.c[k] = if pos % 2 == 0 { out.c[k].clone() + p } else { out.c[k].clone() - p };
                }
                pos += 1;
            }
        }
        Ok(out)
    }

    /// Pullback by the linear map `a: ℝ^{a.cols} → ℝ^{a.rows}`; `self` lives on the target.
    pub fn pullback(&self, a: &Mat<S>) -> Result<Self, FormError> {
        if a.rows() != self.dim {
            return Err(FormError::SpaceMismatch { left: self.dim, right: a.rows() });
        }
        let n = a.cols();
        if self.deg > n {
            return Err(FormError::DegreeOverflow { deg: self.deg, dim: n });
        }
        let mut out = Self::zero(n, self.deg);
        for (m, x) in basis(self.dim, self.deg).iter().zip(&self.c) {
            if x.is_zero() {
                continue;
            }
            let rows = mask_indices(*m);
            for (k, mj) in basis(n, self.deg).iter().enumerate() {
                let cols = mask_indices(*mj);
                let d = a.submatrix(&rows, &cols).det();
                if !d.is_zero() {
                    out.c[k] = out.c[k].clone() + x.clone() * d;
                }
            }
        }
        Ok(out)
    }

    /// Relabels `e^i ↦ e^{map[i]}` into a space of dimension `dim`.
    pub fn embed(&self, dim: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.dim, "embedding map length");
        let mut out = Self::zero(dim, self.deg);
        for (idx, x) in self.terms() {
            let img: Vec<usize> = idx.iter().map(|&i| map[i]).collect();
            out = &out + &Self::term(dim, x.clone(), &img);
        }
        out
    }

    pub fn to_f64(&self) -> KForm<f64> {
        KForm { dim: self.dim, deg: self.deg, c: self.c.iter().map(|x| x.to_f64()).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector (the flat induced norm).
    pub fn coeff_norm(&self) -> f64 {
        self.c.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    /// Largest coefficient difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        match self.try_sub(other) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }
}

impl KForm<f64> {
    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }
}

impl<S: Scalar> Add for &KForm<S> {
    type Output = KForm<S>;
    /// Panics on shape mismatch; use [`KForm::try_add`] for the checked version.
    fn add(self, rhs: &KForm<S>) -> KForm<S> {
        self.try_add(rhs).expect("adding forms of different shape")
    }
}

impl<S: Scalar> Sub for &KForm<S> {
    type Output = KForm<S>;
    fn sub(self, rhs: &KForm<S>) -> KForm<S> {
        self.try_sub(rhs).expect("subtracting forms of different shape")
    }
}

impl<S: Scalar> Neg for &KForm<S> {
    type Output = KForm<S>;
    fn neg(self) -> KForm<S> {
        KForm { dim: self.dim, deg: self.deg, c: self.c.iter().map(|a| -a.clone()).collect() }
    }
}

impl<S: Scalar> Add for KForm<S> {
    type Output = KForm<S>;
    fn add(self, rhs: KForm<S>) -> KForm<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for KForm<S> {
    type Output = KForm<S>;
    fn sub(self, rhs: KForm<S>) -> KForm<S> {
        &self - &rhs
    }
}

impl<S: Scalar> Neg for KForm<S> {
    type Output = KForm<S>;
    fn neg(self) -> KForm<S> {
        -&self
    }
}

impl<S: Scalar> fmt::Display for KForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, x) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let word: String = idx.iter().map(|i| char::from(b'1' + *i as u8)).collect();
            write!(f, "({:?})e{}", x, word)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Sum of wedge products, panicking on shape errors. Intended for fixed formulas.
pub fn w<S: Scalar>(a: &KForm<S>, b: &KForm<S>) -> KForm<S> {
    a.wedge(b).expect("wedge of incompatible forms")
}

/// An oriented inner-product space with constant metric.
#[derive(Clone, Debug)]
pub struct ModelSpace<S> {
    dim: usize,
    metric: Mat<S>,
    inverse: Mat<S>,
    orientation: i8,
    sqrt_det: S,
    grams: [OnceLock<Mat<S>>; MAX_DIM + 1],
}

impl<S: Scalar> ModelSpace<S> {
    pub fn euclidean(dim: usize) -> Self {
        Self::new(Mat::identity(dim), 1).expect("identity metric")
    }

    /// Requires a symmetric positive-definite metric. Exact mode also needs a
    /// rational square root of the determinant.
    pub fn new(metric: Mat<S>, orientation: i8) -> Result<Self, FormError> {
        let dim = metric.rows();
        if dim > MAX_DIM || dim != metric.cols() {
            return Err(FormError::UnsupportedDimension(dim));
        }
        if orientation != 1 && orientation != -1 {
            return Err(FormError::InvalidMetric(format!("orientation {orientation}")));
        }
        if !metric.is_symmetric(1e-12) {
            return Err(FormError::InvalidMetric("not symmetric".into()));
        }
        let positive = if S::EXACT {
            metric.is_positive_definite_exact()
        } else {
            crate::linalg::symmetric_eigenvalues(&metric.to_f64())[0] > 0.0
        };
        if !positive {
            return Err(FormError::InvalidMetric("not positive definite".into()));
        }
        let det = metric.det();
        let sqrt_det = det
            .sqrt_checked()
            .ok_or_else(|| FormError::InvalidMetric("determinant has no exact square root".into()))?;
        let inverse = metric.inverse().ok_or_else(|| FormError::InvalidMetric("singular".into()))?;
        Ok(ModelSpace { dim, metric, inverse, orientation, sqrt_det, grams: Default::default() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Mat<S> {
        &self.metric
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn sqrt_det(&self) -> &S {
        &self.sqrt_det
    }

    /// Induced inner product on `Λ^k` in the coefficient basis.
    pub fn gram(&self, k: usize) -> &Mat<S> {
        self.grams[k].get_or_init(|| {
            let b = basis(self.dim, k);
            Mat::from_fn(b.len(), b.len(), |i, j| {
                if k == 0 {
                    return S::one();
                }
                self.inverse.submatrix(&mask_indices(b[i]), &mask_indices(b[j])).det()
            })
        })
    }

    pub fn volume(&self) -> KForm<S> {
        let v = if self.orientation > 0 { self.sqrt_det.clone() } else { -self.sqrt_det.clone() };
        KForm::term(self.dim, v, &(0..self.dim).collect::<Vec<_>>())
    }

    fn check(&self, a: &KForm<S>) -> Result<(), FormError> {
        if a.dim != self.dim {
            Err(FormError::SpaceMismatch { left: self.dim, right: a.dim })
        } else {
            Ok(())
        }
    }

    pub fn inner(&self, a: &KForm<S>, b: &KForm<S>) -> Result<S, FormError> {
        self.check(a)?;
        a.check_same(b)?;
        let gb = self.gram(a.deg).mul_vec(&b.c);
        Ok(a.c.iter().zip(&gb).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone()))
    }

    pub fn norm(&self, a: &KForm<S>) -> Result<f64, FormError> {
        Ok(self.inner(a, a)?.to_f64().max(0.0).sqrt())
    }

    pub fn hodge(&self, a: &KForm<S>) -> Result<KForm<S>, FormError> {
        self.check(a)?;
        let k = a.deg;
        let raised = self.gram(k).mul_vec(&a.c);
        let full = full_mask(self.dim);
        let factor = if self.orientation > 0 { self.sqrt_det.clone() } else { -self.sqrt_det.clone() };
        let mut out = KForm::zero(self.dim, self.dim - k);
        for (m, x) in basis(self.dim, k).iter().zip(raised) {
            if x.is_zero() {
                continue;
            }
            let comp = full & !m;
            let s = wedge_sign(*m, comp);
            let idx = basis_index(self.dim, comp);
            let v = x * factor.clone();
            out.c[idx] = if s > 0 { v } else { -v };
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    /// Second-order central difference.
    Central2,
    /// Fourth-order central difference.
    Central4,
}

/// Finite-difference partial derivative of a form field along coordinate `j`.
pub fn fd_partial<F>(field: &F, p: &[f64], j: usize, h: f64, stencil: Stencil) -> Result<KForm<f64>, FormError>
where
    F: Fn(&[f64]) -> KForm<f64>,
{
    let eval = |s: f64| -> Result<KForm<f64>, FormError> {
        let mut q = p.to_vec();
        q[j] += s;
        let v = field(&q);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FormError::NonFinite(q))
        }
    };
    match stencil {
        Stencil::Central2 => {
            let d = eval(h)?.try_sub(&eval(-h)?)?;
            Ok(d.scale(&(0.5 / h)))
        }
        Stencil::Central4 => {
            let a = eval(2.0 * h)?;
            let b = eval(h)?;
            let c = eval(-h)?;
            let d = eval(-2.0 * h)?;
            let num = &(&(&b - &c).scale(&8.0) - &a) + &d;
            Ok(num.scale(&(1.0 / (12.0 * h))))
        }
    }
}

/// Finite-difference exterior derivative `dω = Σ_j e^j ∧ ∂_j ω` at `p`.
pub fn fd_exterior_derivative_with<F>(
    field: &F,
    p: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<KForm<f64>, FormError>
where
    F: Fn(&[f64]) -> KForm<f64>,
{
    let n = p.len();
    let base = field(p);
    if !base.is_finite() {
        return Err(FormError::NonFinite(p.to_vec()));
    }
    if base.dim != n {
        return Err(FormError::SpaceMismatch { left: base.dim, right: n });
    }
    if base.deg == n {
        return Err(FormError::DegreeOverflow { deg: n + 1, dim: n });
    }
    let mut out = KForm::zero(n, base.deg + 1);
    for j in 0..n {
        let dj = fd_partial(field, p, j, h, stencil)?;
        out = &out + &KForm::basis_element(n, &[j]).wedge(&dj)?;
    }
    Ok(out)
}

/// Second-order central-difference exterior derivative.
pub fn fd_exterior_derivative<F>(field: &F, p: &[f64], h: f64) -> Result<KForm<f64>, FormError>
where
    F: Fn(&[f64]) -> KForm<f64>,
{
    fd_exterior_derivative_with(field, p, h, Stencil::Central2)
}

/// Codifferential `d* = (−1)^{n(k+1)+1} ∗d∗` for a constant metric.
pub fn fd_codifferential<F>(
    space: &ModelSpace<f64>,
    field: &F,
    p: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<KForm<f64>, FormError>
where
    F: Fn(&[f64]) -> KForm<f64>,
{
    let n = space.dim();
    let k = field(p).deg();
    if k == 0 {
        return Ok(KForm::zero(n, 0));
    }
    let starred = |x: &[f64]| space.hodge(&field(x)).unwrap_or_else(|_| KForm::zero(n, n - k));
    let d = fd_exterior_derivative_with(&starred, p, h, stencil)?;
    let s = space.hodge(&d)?;
    let sign = if (n * (k + 1) + 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(s.scale(&sign))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Rational};

    type F = KForm<Rational>;

    #[test]
    fn lexicographic_basis() {
        let b: Vec<Vec<usize>> = basis(4, 2).iter().map(|&m| mask_indices(m)).collect();
        assert_eq!(b, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(basis(7, 3).len(), 35);
        assert_eq!(mask_indices(basis(7, 3)[34]), vec![4, 5, 6]);
        for n in 0..=MAX_DIM {
            for k in 0..=n {
                assert_eq!(basis(n, k).len(), binomial(n, k));
            }
        }
    }

    #[test]
    fn wedge_basis_case() {
        let a = F::from_terms(4, &[(1, "12")]);
        let b = F::from_terms(4, &[(1, "34")]);
        assert_eq!(a.wedge(&b).unwrap(), F::from_terms(4, &[(1, "1234")]));
        let c = F::from_terms(4, &[(1, "2")]);
        let d = F::from_terms(4, &[(1, "1")]);
        assert_eq!(c.wedge(&d).unwrap(), F::from_terms(4, &[(-1, "12")]));
    }

    #[test]
    fn wedge_errors() {
        let a = F::from_terms(4, &[(1, "12")]);
        let b = F::from_terms(3, &[(1, "12")]);
        assert!(matches!(a.wedge(&b), Err(FormError::SpaceMismatch { .. })));
        let c = F::from_terms(4, &[(1, "123")]);
        assert!(matches!(a.wedge(&c), Err(FormError::DegreeOverflow { .. })));
    }

    #[test]
    fn wedge_matches_permutation_expansion() {
        for n in [3usize, 4, 7] {
            for ka in 0..=n {
                for kb in 0..=n - ka {
                    for &ma in basis(n, ka) {
                        for &mb in basis(n, kb) {
                            let a = F::basis_element(n, &mask_indices(ma));
                            let b = F::basis_element(n, &mask_indices(mb));
                            let mut idx = mask_indices(ma);
                            idx.extend(mask_indices(mb));
                            let expected = F::basis_element(n, &idx);
                            assert_eq!(a.wedge(&b).unwrap(), expected);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hodge_orthonormal_basis() {
        let s = ModelSpace::<Rational>::euclidean(7);
        let e123 = F::from_terms(7, &[(1, "123")]);
        assert_eq!(s.hodge(&e123).unwrap(), F::from_terms(7, &[(1, "4567")]));
        let s4 = ModelSpace::<Rational>::euclidean(4);
        assert_eq!(s4.hodge(&F::from_terms(4, &[(1, "134")])).unwrap(), F::from_terms(4, &[(1, "2")]));
    }

    #[test]
    fn hodge_twice_and_wedge_rule_exact() {
        let metric = Mat::from_rows(&[
            vec![q(2, 1), q(1, 1), q(0, 1), q(0, 1)],
            vec![q(1, 1), q(2, 1), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(3, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)],
        ]);
        let s = ModelSpace::new(metric, -1).unwrap();
        let n = 4;
        for k in 0..=n {
            for &ma in basis(n, k) {
                let a = F::basis_element(n, &mask_indices(ma));
                let ss = s.hodge(&s.hodge(&a).unwrap()).unwrap();
                let sign = if (k * (n - k)) % 2 == 0 { q(1, 1) } else { q(-1, 1) };
                assert_eq!(ss, a.scale(&sign));
                for &mb in basis(n, k) {
                    let b = F::basis_element(n, &mask_indices(mb));
                    let lhs = a.wedge(&s.hodge(&b).unwrap()).unwrap();
                    let rhs = s.volume().scale(&s.inner(&a, &b).unwrap());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn exact_metric_needs_square_determinant() {
        let m = Mat::diagonal(&[q(2, 1), q(1, 1), q(1, 1)]);
        assert!(matches!(ModelSpace::new(m, 1), Err(FormError::InvalidMetric(_))));
    }

    #[test]
    fn interior_basis_and_antiderivation() {
        let e12 = F::from_terms(3, &[(1, "12")]);
        let v = vec![q(1, 1), q(0, 1), q(0, 1)];
        assert_eq!(e12.interior(&v).unwrap(), F::from_terms(3, &[(1, "2")]));
        assert!(matches!(F::scalar(3, q(1, 1)).interior(&v), Err(FormError::DegreeZero)));
        let a = F::from_terms(3, &[(2, "1"), (-1, "3")]);
        let b = F::from_terms(3, &[(1, "2"), (5, "3")]);
        let u = vec![q(1, 2), q(-3, 1), q(2, 7)];
        let lhs = a.wedge(&b).unwrap().interior(&u).unwrap();
        let rhs = &b.scale(&a.interior(&u).unwrap().coeffs()[0]) - &a.scale(&b.interior(&u).unwrap().coeffs()[0]);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn pullback_is_determinant_on_top_degree() {
        let a = Mat::from_rows(&[vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(4, 1)]]);
        let vol = F::from_terms(2, &[(1, "12")]);
        assert_eq!(vol.pullback(&a).unwrap(), vol.scale(&q(-2, 1)));
    }

    #[test]
    fn embed_relabels_with_sign() {
        let a = F::from_terms(2, &[(1, "12")]);
        assert_eq!(a.embed(4, &[3, 1]), F::from_terms(4, &[(-1, "24")]));
    }

    #[test]
    fn fd_constant_and_linear() {
        let c = |_: &[f64]| KForm::<f64>::from_terms(3, &[(2, "12"), (1, "23")]);
        let d = fd_exterior_derivative(&c, &[0.1, 0.2, 0.3], 1e-3).unwrap();
        assert!(d.max_abs() < 1e-12);
        let lin = |x: &[f64]| KForm::<f64>::term(3, x[0], &[1]);
        let d = fd_exterior_derivative(&lin, &[0.3, -0.2, 0.5], 1e-2).unwrap();
        assert!(d.max_abs_diff(&KForm::from_terms(3, &[(1, "12")])) < 1e-10);
    }

    #[test]
    fn fd_reports_non_finite() {
        let bad = |x: &[f64]| KForm::<f64>::term(2, 1.0 / x[0], &[1]);
        assert!(matches!(fd_exterior_derivative(&bad, &[0.0, 0.0], 1e-3), Err(FormError::NonFinite(_))));
    }

    #[test]
    fn fd_second_order_convergence() {
        let field = |x: &[f64]| {
            &KForm::<f64>::term(3, x[0].powi(3) * x[1], &[2]) + &KForm::<f64>::term(3, (x[2] * x[0]).sin(), &[1])
        };
        let p = [0.7, -0.4, 1.1];
        let exact = {
            let (x, y, z) = (p[0], p[1], p[2]);
            &(&KForm::<f64>::term(3, 3.0 * x * x * y, &[0, 2]) + &KForm::<f64>::term(3, x.powi(3), &[1, 2]))
                + &(&KForm::<f64>::term(3, z * (x * z).cos(), &[0, 1])
                    + &KForm::<f64>::term(3, x * (x * z).cos(), &[2, 1]))
        };
        let hs = [0.1, 0.05, 0.025];
        let errs: Vec<f64> =
            hs.iter().map(|&h| fd_exterior_derivative(&field, &p, h).unwrap().max_abs_diff(&exact)).collect();
        assert!(loglog_slope(&hs, &errs) >= 1.9);
        let errs4: Vec<f64> = hs
            .iter()
            .map(|&h| fd_exterior_derivative_with(&field, &p, h, Stencil::Central4).unwrap().max_abs_diff(&exact))
            .collect();
        assert!(loglog_slope(&hs, &errs4) >= 3.8);
    }
}
