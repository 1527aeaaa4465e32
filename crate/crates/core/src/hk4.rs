//! HyperKähler linear algebra on ℝ⁴, product G2-structures on ℝ³ × ℝ⁴ and the
//! closed-form projection and linearisation formulas for them.
//!
//! Coordinates on the product: indices 0..3 carry the horizontal coframe
//! `e1, e2, e3`, indices 3..7 the vertical `y1..y4`.

use crate::forms::{
    basis, fd_codifferential, fd_exterior_derivative_with, mask_indices, FormError, KForm, ModelSpace, Stencil,
};
use crate::g2::{G2Error, G2Structure};
use crate::linalg::{same_column_span, Mat};
use crate::scalar::Scalar;
use thiserror::Error;

pub const HORIZONTAL: [usize; 3] = [0, 1, 2];
pub const VERTICAL: [usize; 4] = [3, 4, 5, 6];

/// Cyclic pairs `(i, j)` attached to index `k`, so that `e_i∧e_j` is dual to `e_k`.
pub const CYCLIC: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HkError {
    #[error("form of type ({vertical},{horizontal}) is not supported here")]
    UnsupportedType { vertical: usize, horizontal: usize },
    #[error("form mixes several bidegrees")]
    MixedType,
    #[error("scale t must be positive")]
    BadScale,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    G2(#[from] G2Error),
}

/// Standard hyperKähler triple on ℝ⁴ with the Euclidean metric.
pub fn standard_omegas<S: Scalar>() -> [KForm<S>; 3] {
    [
        KForm::from_terms(4, &[(1, "12"), (1, "34")]),
        KForm::from_terms(4, &[(1, "13"), (1, "42")]),
        KForm::from_terms(4, &[(1, "14"), (1, "23")]),
    ]
}

#[derive(Clone, Debug)]
pub struct QuaternionicFrame<S> {
    space: ModelSpace<S>,
    omegas: [KForm<S>; 3],
    /// Complex structures acting on vectors, defined by ω_k(u,v) = h(J_k u, v).
    j_vec: [Mat<S>; 3],
}

impl<S: Scalar> QuaternionicFrame<S> {
    pub fn new(metric: Mat<S>, omegas: [KForm<S>; 3]) -> Result<Self, HkError> {
        let space = ModelSpace::new(metric, 1)?;
        let hinv = space.metric().inverse().ok_or_else(|| FormError::InvalidMetric("singular".into()))?;
        let j_vec = omegas.clone().map(|w| {
            let wm = Mat::from_fn(4, 4, |a, b| w.coeff(&[a, b]));
            hinv.mul(&wm).scale(&-S::one())
        });
        Ok(QuaternionicFrame { space, omegas, j_vec })
    }

    pub fn standard() -> Self {
        Self::new(Mat::identity(4), standard_omegas()).expect("standard frame")
    }

    /// Rotates (ω₂, ω₃) by the angle with the given cosine and sine.
    pub fn rotated(cos: S, sin: S) -> Result<Self, HkError> {
        let [w1, w2, w3] = standard_omegas::<S>();
        let r2 = &w2.scale(&cos) + &w3.scale(&sin);
        let r3 = &w3.scale(&cos) - &w2.scale(&sin);
        Self::new(Mat::identity(4), [w1, r2, r3])
    }

    pub fn space(&self) -> &ModelSpace<S> {
        &self.space
    }

    pub fn omega(&self, k: usize) -> &KForm<S> {
        &self.omegas[k]
    }

    pub fn omegas(&self) -> &[KForm<S>; 3] {
        &self.omegas
    }

    pub fn j_vector(&self, k: usize) -> &Mat<S> {
        &self.j_vec[k]
    }

    /// Matrix of J_k on 1-form coefficient vectors: (J_kα) = α ∘ J_k.
    pub fn j_covector(&self, k: usize) -> Mat<S> {
        self.j_vec[k].transpose()
    }

    /// J_k on forms of any degree, as pullback by the vector action.
    pub fn apply_j(&self, k: usize, a: &KForm<S>) -> Result<KForm<S>, HkError> {
        Ok(a.pullback(&self.j_vec[k])?)
    }

    pub fn hodge(&self, a: &KForm<S>) -> Result<KForm<S>, HkError> {
        Ok(self.space.hodge(a)?)
    }

    pub fn volume(&self) -> KForm<S> {
        self.space.volume()
    }
}

/// Outcome of [`check_frame`]: one entry per failed identity.
#[derive(Clone, Debug, Default)]
pub struct FrameReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl FrameReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Verifies the quaternion relations on vectors and covectors, self-duality,
/// compatibility with the metric, ½ω∧ω = vol and ∗(α∧ω_k) = −J_kα.
pub fn check_frame<S: Scalar>(frame: &QuaternionicFrame<S>) -> Result<FrameReport, HkError> {
    let mut rep = FrameReport::default();
    let id = Mat::<S>::identity(4);
    let minus_id = id.scale(&-S::one());
    let names = ["J1", "J2", "J3"];
    for k in 0..3 {
        let (i, j) = CYCLIC[k];
        let jv = frame.j_vector(k);
        rep.record(jv.mul(jv) == minus_id, || format!("{}^2 != -1 on vectors", names[k]));
        rep.record(
            frame.j_vector(i).mul(frame.j_vector(j)) == *jv,
            || format!("{}{} != {} on vectors", names[i], names[j], names[k]),
        );
        let jf = frame.j_covector(k);
        rep.record(jf.mul(&jf) == minus_id, || format!("{}^2 != -1 on 1-forms", names[k]));
        rep.record(
            frame.j_covector(i).mul(&frame.j_covector(j)) == jf.scale(&-S::one()),
            || format!("{}{} != -{} on 1-forms", names[i], names[j], names[k]),
        );
        let w = frame.omega(k);
        rep.record(frame.hodge(w)? == *w, || format!("omega{} is not self-dual", k + 1));
        let half_sq = w.wedge(w)?.scale(&S::ratio(1, 2));
        rep.record(half_sq == frame.volume(), || format!("omega{}^2/2 != vol", k + 1));
        let h = frame.space().metric();
        let compat = h.mul(jv).transpose();
        let wm = Mat::from_fn(4, 4, |a, b| w.coeff(&[a, b]));
        rep.record(compat == wm, || format!("omega{} != h(J u, v)", k + 1));
        for a in 0..4 {
            let alpha = KForm::basis_element(4, &[a]);
            let lhs = frame.hodge(&alpha.wedge(w)?)?;
            let rhs = -frame.apply_j(k, &alpha)?;
            rep.record(lhs == rhs, || format!("*(dy{}^omega{}) != -J{} dy{}", a + 1, k + 1, k + 1, a + 1));
        }
    }
    Ok(rep)
}

/// Bidegree decomposition of a 3-form on the product.
#[derive(Clone, Debug, PartialEq)]
pub enum Bigraded<S> {
    /// A vertical 3-form η, type (3,0).
    Vertical(KForm<S>),
    /// ζ₁∧e₂₃ + ζ₂∧e₃₁ + ζ₃∧e₁₂ with vertical 1-forms ζ_k, type (1,2).
    Mixed([KForm<S>; 3]),
}

/// The product structure φ_t = e₁₂₃ − t²Σω_k∧e_k with metric e² + t²h.
#[derive(Clone, Debug)]
pub struct ProductPoint<S> {
    frame: QuaternionicFrame<S>,
    t: S,
    space: ModelSpace<S>,
    phi: KForm<S>,
    psi: KForm<S>,
    e3: ModelSpace<S>,
}

impl<S: Scalar> ProductPoint<S> {
    pub fn new(frame: QuaternionicFrame<S>, t: S) -> Result<Self, HkError> {
        if t <= S::zero() {
            return Err(HkError::BadScale);
        }
        let t2 = t.clone() * t.clone();
        let h = frame.space().metric();
        let metric = Mat::from_fn(7, 7, |i, j| match (i < 3, j < 3) {
            (true, true) => {
                if i == j {
                    S::one()
                } else {
                    S::zero()
                }
            }
            (false, false) => h[(i - 3, j - 3)].clone() * t2.clone(),
            _ => S::zero(),
        });
        let space = ModelSpace::new(metric, 1)?;
        let e3 = ModelSpace::euclidean(3);
        let mut pt = ProductPoint { frame, t, space, phi: KForm::zero(7, 3), psi: KForm::zero(7, 4), e3 };
        let e123 = pt.horizontal(&KForm::from_terms(3, &[(1, "123")]));
        let mut phi = e123;
        let mut psi = pt.vertical(&pt.frame.volume()).scale(&(t2.clone() * t2.clone()));
        for k in 0..3 {
            let wk = pt.vertical(pt.frame.omega(k));
            phi = &phi - &wk.wedge(&pt.e(k))?.scale(&t2);
            let (i, j) = CYCLIC[k];
            psi = &psi - &wk.wedge(&pt.e(i))?.wedge(&pt.e(j))?.scale(&t2);
        }
        pt.phi = phi;
        pt.psi = psi;
        Ok(pt)
    }

    pub fn standard(t: S) -> Result<Self, HkError> {
        Self::new(QuaternionicFrame::standard(), t)
    }

    pub fn t(&self) -> &S {
        &self.t
    }

    pub fn frame(&self) -> &QuaternionicFrame<S> {
        &self.frame
    }

    pub fn phi(&self) -> &KForm<S> {
        &self.phi
    }

    pub fn psi(&self) -> &KForm<S> {
        &self.psi
    }

    pub fn space(&self) -> &ModelSpace<S> {
        &self.space
    }

    pub fn metric(&self) -> &Mat<S> {
        self.space.metric()
    }

    /// Horizontal coframe element `e_{k+1}`.
    pub fn e(&self, k: usize) -> KForm<S> {
        KForm::basis_element(7, &[HORIZONTAL[k]])
    }

    pub fn vertical(&self, a: &KForm<S>) -> KForm<S> {
        a.embed(7, &VERTICAL)
    }

    pub fn horizontal(&self, b: &KForm<S>) -> KForm<S> {
        b.embed(7, &HORIZONTAL)
    }

    /// ζ₁∧e₂₃ + ζ₂∧e₃₁ + ζ₃∧e₁₂ from vertical 1-forms on ℝ⁴.
    pub fn mixed(&self, z: &[KForm<S>; 3]) -> Result<KForm<S>, HkError> {
        let mut acc = KForm::zero(7, 3);
        for k in 0..3 {
            let (i, j) = CYCLIC[k];
            acc = &acc + &self.vertical(&z[k]).wedge(&self.e(i))?.wedge(&self.e(j))?;
        }
        Ok(acc)
    }

    /// Splits a 3-form into the (3,0) or (1,2) pieces; other bidegrees are rejected.
    pub fn classify(&self, gamma: &KForm<S>) -> Result<Bigraded<S>, HkError> {
        if gamma.dim() != 7 || gamma.deg() != 3 {
            return Err(FormError::SpaceMismatch { left: 7, right: gamma.dim() }.into());
        }
        let mut eta = KForm::<S>::zero(4, 3);
        let mut z: [KForm<S>; 3] = std::array::from_fn(|_| KForm::zero(4, 1));
        let mut seen = [false; 4];
        for (idx, c) in gamma.terms() {
            let vert: Vec<usize> = idx.iter().filter(|&&i| i >= 3).map(|&i| i - 3).collect();
            let hor: Vec<usize> = idx.iter().copied().filter(|&i| i < 3).collect();
            seen[vert.len()] = true;
            match (vert.len(), hor.as_slice()) {
                (3, _) => eta = &eta + &KForm::term(4, c.clone(), &vert),
                (1, &[h1, h2]) => {
                    // e_{h1}∧e_{h2}∧y = y∧e_{h1}∧e_{h2}
                    let (k, sign) = match (h1, h2) {
                        (1, 2) => (0, S::one()),
                        (0, 2) => (1, -S::one()),
                        _ => (2, S::one()),
                    };
                    z[k] = &z[k] + &KForm::term(4, c.clone() * sign, &vert);
                }
                (v, _) => return Err(HkError::UnsupportedType { vertical: v, horizontal: 3 - v }),
            }
        }
        match (seen[3], seen[1]) {
            (true, true) => Err(HkError::MixedType),
            (false, true) => Ok(Bigraded::Mixed(z)),
            _ => Ok(Bigraded::Vertical(eta)),
        }
    }

    /// π₇ = −¼ ∗(φ∧∗(φ∧γ)), computed in the product metric.
    pub fn pi7_bruteforce(&self, gamma: &KForm<S>) -> Result<KForm<S>, HkError> {
        let s = &self.space;
        let inner = s.hodge(&self.phi.wedge(gamma)?)?;
        Ok(s.hodge(&self.phi.wedge(&inner)?)?.scale(&S::ratio(-1, 4)))
    }

    fn jz(&self, k: usize, z: &KForm<S>) -> Result<KForm<S>, HkError> {
        self.frame.apply_j(k, z)
    }

    /// Closed-form π₇ on forms of type (3,0) and (1,2).
    pub fn pi7_formula(&self, gamma: &KForm<S>) -> Result<KForm<S>, HkError> {
        let quarter = S::ratio(1, 4);
        let t2 = self.t.clone() * self.t.clone();
        match self.classify(gamma)? {
            Bigraded::Vertical(eta) => {
                let star = self.frame.hodge(&eta)?;
                let mut z: [KForm<S>; 3] = std::array::from_fn(|_| KForm::zero(4, 1));
                for (k, zk) in z.iter_mut().enumerate() {
                    *zk = self.jz(k, &star)?;
                }
                let tail = self.mixed(&z)?.scale(&(quarter.clone() / t2));
                Ok(&self.vertical(&eta).scale(&quarter) - &tail)
            }
            Bigraded::Mixed(z) => {
                let mut head = KForm::zero(4, 3);
                for (k, zk) in z.iter().enumerate() {
                    head = &head + &self.frame.hodge(&self.jz(k, zk)?)?;
                }
                let head = self.vertical(&head).scale(&(-(t2 * quarter.clone())));
                let (j1, j2, j3) = (
                    |f: &KForm<S>| self.jz(0, f),
                    |f: &KForm<S>| self.jz(1, f),
                    |f: &KForm<S>| self.jz(2, f),
                );
                let w = [
                    &(&z[0] + &j3(&z[1])?) - &j2(&z[2])?,
                    &(&-&j3(&z[0])? + &z[1]) + &j1(&z[2])?,
                    &(&j2(&z[0])? - &j1(&z[1])?) + &z[2],
                ];
                Ok(&head + &self.mixed(&w)?.scale(&quarter))
            }
        }
    }

    /// Closed-form D_φΘ on forms of type (3,0) and (1,2).
    pub fn dtheta_formula(&self, gamma: &KForm<S>) -> Result<KForm<S>, HkError> {
        let half = S::ratio(1, 2);
        let t2 = self.t.clone() * self.t.clone();
        let e123 = self.horizontal(&KForm::from_terms(3, &[(1, "123")]));
        match self.classify(gamma)? {
            Bigraded::Vertical(eta) => {
                let star = self.vertical(&self.frame.hodge(&eta)?);
                let mut acc = star.wedge(&e123)?.scale(&(-(half.clone() / t2)));
                for k in 0..3 {
                    let jk = self.vertical(&self.jz(k, &eta)?);
                    acc = &acc + &jk.wedge(&self.e(k))?.scale(&half);
                }
                Ok(acc)
            }
            Bigraded::Mixed(z) => {
                let mut sum = KForm::zero(4, 1);
                for (k, zk) in z.iter().enumerate() {
                    sum = &sum + &self.jz(k, zk)?;
                }
                let mut acc = self.vertical(&sum).wedge(&e123)?.scale(&half);
                let (j1, j2, j3) = (
                    |f: &KForm<S>| self.jz(0, f),
                    |f: &KForm<S>| self.jz(1, f),
                    |f: &KForm<S>| self.jz(2, f),
                );
                let w = [
                    &(&-&z[0] + &j3(&z[1])?) - &j2(&z[2])?,
                    &(&-&j3(&z[0])? - &z[1]) + &j1(&z[2])?,
                    &(&j2(&z[0])? - &j1(&z[1])?) - &z[2],
                ];
                let coef = t2 * half;
                for (k, wk) in w.iter().enumerate() {
                    let s = self.vertical(&self.frame.hodge(wk)?);
                    acc = &acc + &s.wedge(&self.e(k))?.scale(&coef);
                }
                Ok(acc)
            }
        }
    }

    /// The product-route oracle 2∗π₇ − ∗ for D_φΘ on types (3,0) and (1,2).
    pub fn dtheta_bruteforce(&self, gamma: &KForm<S>) -> Result<KForm<S>, HkError> {
        let s = &self.space;
        let p7 = self.pi7_bruteforce(gamma)?;
        Ok(&s.hodge(&p7)?.scale(&S::from_i64(2)) - &s.hodge(gamma)?)
    }

    /// ∗_t(α∧β) against (−1)^{kl} t^{4−2k}(∗_Xα)∧(∗β) for one pair.
    pub fn star_splitting_holds(&self, alpha: &KForm<S>, beta: &KForm<S>) -> Result<bool, HkError> {
        let (k, l) = (alpha.deg(), beta.deg());
        let lhs = self.space.hodge(&self.vertical(alpha).wedge(&self.horizontal(beta))?)?;
        let sign = if (k * l) % 2 == 0 { S::one() } else { -S::one() };
        let factor = sign * self.t.powi(4 - 2 * k as i32);
        let rhs = self
            .vertical(&self.frame.hodge(alpha)?)
            .wedge(&self.horizontal(&self.e3.hodge(beta)?))?
            .scale(&factor);
        Ok(lhs == rhs || (!S::EXACT && lhs.max_abs_diff(&rhs) < 1e-12))
    }
}

/// Counts failures of the Hodge splitting over all vertical/horizontal basis pairs.
pub fn star_splitting_failures<S: Scalar>(pt: &ProductPoint<S>) -> Result<(usize, usize), HkError> {
    let mut total = 0;
    let mut failed = 0;
    for k in 0..=4 {
        for &ma in basis(4, k) {
            let a = KForm::basis_element(4, &mask_indices(ma));
            for l in 0..=3 {
                for &mb in basis(3, l) {
                    let b = KForm::basis_element(3, &mask_indices(mb));
                    total += 1;
                    if !pt.star_splitting_holds(&a, &b)? {
                        failed += 1;
                    }
                }
            }
        }
    }
    Ok((total, failed))
}

/// A spanning set of type-(3,0) and type-(1,2) inputs: all basis elements of each type.
pub fn bigraded_spanning_set<S: Scalar>(pt: &ProductPoint<S>) -> Result<Vec<KForm<S>>, HkError> {
    let mut out = Vec::new();
    for &m in basis(4, 3) {
        out.push(pt.vertical(&KForm::basis_element(4, &mask_indices(m))));
    }
    for k in 0..3 {
        for a in 0..4 {
            let mut z: [KForm<S>; 3] = std::array::from_fn(|_| KForm::zero(4, 1));
            z[k] = KForm::basis_element(4, &[a]);
            out.push(pt.mixed(&z)?);
        }
    }
    Ok(out)
}

/// Per-input comparison of the closed forms with both oracles.
#[derive(Clone, Debug, Default)]
pub struct FormulaReport {
    pub inputs: usize,
    pub pi7_mismatches: usize,
    pub dtheta_mismatches: usize,
    pub linearization_mismatches: usize,
}

impl FormulaReport {
    pub fn passed(&self) -> bool {
        self.inputs > 0 && self.pi7_mismatches + self.dtheta_mismatches + self.linearization_mismatches == 0
    }
}

/// Runs the π₇ and D_φΘ closed forms against the projection and linearisation oracles.
pub fn compare_formulas<S: Scalar>(pt: &ProductPoint<S>) -> Result<FormulaReport, HkError> {
    let st = G2Structure::new(pt.phi().clone())?;
    let mut rep = FormulaReport::default();
    let same = |a: &KForm<S>, b: &KForm<S>| a == b || (!S::EXACT && a.max_abs_diff(b) < 1e-10);
    for gamma in bigraded_spanning_set(pt)? {
        rep.inputs += 1;
        let p7 = pt.pi7_formula(&gamma)?;
        let proj = st.component(&gamma, crate::g2::TypeLabel::Seven)?;
        if !same(&p7, &pt.pi7_bruteforce(&gamma)?) || !same(&p7, &proj) {
            rep.pi7_mismatches += 1;
        }
        let dt = pt.dtheta_formula(&gamma)?;
        if !same(&dt, &pt.dtheta_bruteforce(&gamma)?) {
            rep.dtheta_mismatches += 1;
        }
        if !same(&dt, &st.linearize_theta(&gamma)?) {
            rep.linearization_mismatches += 1;
        }
    }
    Ok(rep)
}

type Field<'a> = &'a dyn Fn(&[f64]) -> KForm<f64>;

fn eval_j<'a>(frame: &'a QuaternionicFrame<f64>, k: usize, f: Field<'a>) -> impl Fn(&[f64]) -> KForm<f64> + 'a {
    move |x: &[f64]| frame.apply_j(k, &f(x)).expect("4-dimensional form")
}

/// Residuals of the flat-fibre identities relating ω_i∧∗dα, ∗dγ and d*(J_k df).
#[derive(Clone, Debug)]
pub struct FibreIdentityResiduals {
    pub omega: [f64; 3],
    pub three_form: f64,
    pub exact_harmonic: [f64; 3],
}

impl FibreIdentityResiduals {
    pub fn max(&self) -> f64 {
        self.omega.iter().chain(self.exact_harmonic.iter()).fold(self.three_form, |a, &b| a.max(b))
    }
}

pub fn flat_fibre_identities(
    frame: &QuaternionicFrame<f64>,
    alpha: Field<'_>,
    gamma: Field<'_>,
    f: &dyn Fn(&[f64]) -> f64,
    p: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<FibreIdentityResiduals, HkError> {
    let space = frame.space();
    let vol = frame.volume();
    let star_da = frame.hodge(&fd_exterior_derivative_with(&alpha, p, h, stencil)?)?;
    let mut omega = [0.0; 3];
    for (k, slot) in omega.iter_mut().enumerate() {
        let ja = eval_j(frame, k, alpha);
        let cod = fd_codifferential(space, &ja, p, h, stencil)?;
        let lhs = frame.omega(k).wedge(&star_da)?;
        *slot = (&lhs + &vol.scale(&cod.coeffs()[0])).max_abs();
    }
    let lhs = frame.hodge(&fd_exterior_derivative_with(&gamma, p, h, stencil)?)?;
    let star_g = |x: &[f64]| frame.hodge(&gamma(x)).expect("4-dimensional form");
    let rhs = fd_codifferential(space, &star_g, p, h, stencil)?;
    let three_form = lhs.max_abs_diff(&rhs);
    let df = |x: &[f64]| {
        let g = |y: &[f64]| KForm::scalar(4, f(y));
        fd_exterior_derivative_with(&g, x, h, stencil).unwrap_or_else(|_| KForm::zero(4, 1))
    };
    let mut exact_harmonic = [0.0; 3];
    for (k, slot) in exact_harmonic.iter_mut().enumerate() {
        let jdf = eval_j(frame, k, &df);
        *slot = fd_codifferential(space, &jdf, p, h, stencil)?.max_abs();
    }
    Ok(FibreIdentityResiduals { omega, three_form, exact_harmonic })
}

/// Flat Hodge Laplacian dd* + d*d by nested finite differences.
pub fn flat_laplacian(
    space: &ModelSpace<f64>,
    field: Field<'_>,
    p: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<KForm<f64>, HkError> {
    let n = space.dim();
    let k = field(p).deg();
    let mut acc = KForm::zero(n, k);
    if k < n {
        let d = |x: &[f64]| fd_exterior_derivative_with(&field, x, h, stencil).unwrap_or_else(|_| KForm::zero(n, k + 1));
        acc = &acc + &fd_codifferential(space, &d, p, h, stencil)?;
    }
    if k > 0 {
        let ds = |x: &[f64]| fd_codifferential(space, &field, x, h, stencil).unwrap_or_else(|_| KForm::zero(n, k - 1));
        acc = &acc + &fd_exterior_derivative_with(&ds, p, h, stencil)?;
    }
    Ok(acc)
}

/// |Δ(f ω_k) − (Δf) ω_k| at `p` on the flat fibre.
pub fn parallel_laplacian_residual(
    frame: &QuaternionicFrame<f64>,
    f: &dyn Fn(&[f64]) -> f64,
    k: usize,
    p: &[f64],
    h: f64,
) -> Result<f64, HkError> {
    let w = frame.omega(k).clone();
    let fw = |x: &[f64]| w.scale(&f(x));
    let scalar = |x: &[f64]| KForm::scalar(4, f(x));
    let lhs = flat_laplacian(frame.space(), &fw, p, h, Stencil::Central2)?;
    let lap_f = flat_laplacian(frame.space(), &scalar, p, h, Stencil::Central2)?.coeffs()[0];
    Ok(lhs.max_abs_diff(&w.scale(&lap_f)))
}

/// Synthetic fibre data: vertical 1-forms ξ_k, χ and vertical 3-forms θ_k.
pub struct TorsionData<'a> {
    pub xi: [Field<'a>; 3],
    pub chi: Field<'a>,
    pub theta: [Field<'a>; 3],
}

/// Compares the `t⁴` type-(4,2) part of φ∧∗dφ − ψ∧∗dψ with the three relation residuals.
#[derive(Clone, Debug)]
pub struct RelationSplit {
    /// Coefficient of vol_X∧e_i∧e_j (cyclic to k) in the (4,2) part, divided by t⁴.
    pub coefficients: [f64; 3],
    /// d*(∗θ_k) + d*(J_kχ) − d*(J_iξ_j) + d*(J_jξ_i).
    pub residuals: [f64; 3],
}

impl RelationSplit {
    pub fn mismatch(&self) -> f64 {
        (0..3).map(|k| (self.coefficients[k] - self.residuals[k]).abs()).fold(0.0, f64::max)
    }
}

/// Builds dφ = −t²Σ(d_Xξ_k)∧e_ij and dψ = −t²(d_Xχ)∧e₁₂₃ − t⁴Σ(d_Xθ_k)∧e_k at `p`
/// and splits the fundamental relation into its three fibre equations.
pub fn relation_split(
    pt: &ProductPoint<f64>,
    data: &TorsionData<'_>,
    p: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<RelationSplit, HkError> {
    let frame = pt.frame();
    let t = *pt.t();
    let (t2, t4) = (t * t, t.powi(4));
    let d = |f: Field<'_>| fd_exterior_derivative_with(&f, p, h, stencil);
    let e123 = pt.horizontal(&KForm::from_terms(3, &[(1, "123")]));
    let mut dphi = KForm::zero(7, 4);
    let mut dpsi = pt.vertical(&d(data.chi)?).wedge(&e123)?.scale(&-t2);
    for k in 0..3 {
        let (i, j) = CYCLIC[k];
        let eij = pt.e(i).wedge(&pt.e(j))?;
        dphi = &dphi - &pt.vertical(&d(data.xi[k])?).wedge(&eij)?.scale(&t2);
        dpsi = &dpsi - &pt.vertical(&d(data.theta[k])?).wedge(&pt.e(k))?.scale(&t4);
    }
    let s = pt.space();
    let six = &pt.phi().wedge(&s.hodge(&dphi)?)? - &pt.psi().wedge(&s.hodge(&dpsi)?)?;
    let mut coefficients = [0.0; 3];
    for (k, c) in coefficients.iter_mut().enumerate() {
        let (i, j) = CYCLIC[k];
        let mut idx = vec![i, j];
        idx.extend(VERTICAL);
        *c = six.coeff(&idx) / t4;
    }
    let space = frame.space();
    let cod = |f: &dyn Fn(&[f64]) -> KForm<f64>| -> Result<f64, HkError> {
        Ok(fd_codifferential(space, &f, p, h, stencil)?.coeffs()[0])
    };
    let mut residuals = [0.0; 3];
    for (k, r) in residuals.iter_mut().enumerate() {
        let (i, j) = CYCLIC[k];
        let th = data.theta[k];
        let star_theta = |x: &[f64]| frame.hodge(&th(x)).expect("4-dimensional form");
        *r = cod(&star_theta)? + cod(&eval_j(frame, k, data.chi))? - cod(&eval_j(frame, i, data.xi[j]))?
            + cod(&eval_j(frame, j, data.xi[i]))?;
    }
    Ok(RelationSplit { coefficients, residuals })
}

/// Linear maps of the hyperKähler package and their rank data.
#[derive(Clone, Debug)]
pub struct HyperkahlerMaps<S> {
    /// V*⊗Λ³V* → Λ⁴V*, 1 × 16.
    pub a: Mat<S>,
    /// S²V*⊗ℝ³ → V*⊗Λ³V*, 16 × 30.
    pub b: Mat<S>,
    /// V⊗V*⊗ℝ³ → V*⊗V*⊗Λ²ℝ³, 48 × 48.
    pub c: Mat<S>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub kernel_a: usize,
    pub rank_b: usize,
    pub image_b_is_kernel_a: bool,
    pub rank_c: usize,
}

fn sym_basis() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for p in 0..4 {
        for q in p..4 {
            v.push((p, q));
        }
    }
    v
}

/// Image under B of the symmetric tensor `h` (4×4, symmetric) tensored with e_k.
pub fn apply_b<S: Scalar>(frame: &QuaternionicFrame<S>, h: &Mat<S>, k: usize) -> Result<Vec<S>, HkError> {
    let mut out = vec![S::zero(); 16];
    for p in 0..4 {
        for q in 0..4 {
            if h[(p, q)].is_zero() {
                continue;
            }
            for (a, b) in [(p, q), (q, p)] {
                let three = KForm::basis_element(4, &[b]).wedge(frame.omega(k))?;
                for (m, c) in three.coeffs().iter().enumerate() {
                    out[a * 4 + m] = out[a * 4 + m].clone() + h[(p, q)].clone() * c.clone();
                }
            }
        }
    }
    Ok(out)
}

pub fn hyperkahler_maps<S: Scalar>(frame: &QuaternionicFrame<S>) -> Result<HyperkahlerMaps<S>, HkError> {
    let threes = basis(4, 3);
    let mut a: Mat<S> = Mat::zeros(1, 16);
    for p in 0..4 {
        for (m, &mask) in threes.iter().enumerate() {
            let top = KForm::<S>::basis_element(4, &[p]).wedge(&KForm::basis_element(4, &mask_indices(mask)))?;
            a[(0, p * 4 + m)] = top.coeffs()[0].clone();
        }
    }

    let mut bcols = Vec::new();
    for k in 0..3 {
        for (p, q) in sym_basis() {
            let mut h = Mat::zeros(4, 4);
            h[(p, q)] = S::one();
            h[(q, p)] = S::one();
            bcols.push(apply_b(frame, &h, k)?);
        }
    }
    let b = Mat::from_columns(16, &bcols);

    // Λ²ℝ³ basis order: e12, e13, e23.
    let pair_index = |i: usize, j: usize| -> (usize, S) {
        let (lo, hi, s) = if i < j { (i, j, S::one()) } else { (j, i, -S::one()) };
        let idx = match (lo, hi) {
            (0, 1) => 0,
            (0, 2) => 1,
            _ => 2,
        };
        (idx, s)
    };
    let mut c: Mat<S> = Mat::zeros(48, 48);
    for p in 0..4 {
        let mut v = vec![S::zero(); 4];
        v[p] = S::one();
        for q in 0..4 {
            for k in 0..3 {
                let col = (p * 4 + q) * 3 + k;
                for j in 0..3 {
                    if j == k {
                        continue;
                    }
                    let contracted = frame.omega(j).interior(&v)?;
                    let (pi, s) = pair_index(k, j);
                    for (r, x) in contracted.coeffs().iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        let row = (r * 4 + q) * 3 + pi;
                        c[(row, col)] = c[(row, col)].clone() + x.clone() * s.clone();
                    }
                }
            }
        }
    }
    Ok(HyperkahlerMaps { a, b, c })
}

pub fn hyperkahler_ranks<S: Scalar>(maps: &HyperkahlerMaps<S>) -> RankReport {
    let kernel = maps.a.nullspace();
    let kernel_a = kernel.len();
    let kmat = Mat::from_columns(16, &kernel);
    let zero_ab = maps.a.mul(&maps.b).max_abs() == 0.0;
    RankReport {
        kernel_a,
        rank_b: maps.b.rank(),
        image_b_is_kernel_a: zero_ab && same_column_span(&maps.b, &kmat),
        rank_c: maps.c.rank(),
    }
}
