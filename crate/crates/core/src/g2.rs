//! Pointwise G2 algebra on ℝ⁷: positivity, the induced metric, the map
//! φ ↦ Θ(φ) = ∗_φφ, type projectors, the linearisation of Θ and its remainder.

use crate::forms::{basis, fd_exterior_derivative_with, mask_indices, FormError, KForm, ModelSpace, Stencil};
use crate::linalg::{symmetric_eigenvalues, Mat};
use crate::scalar::Scalar;
use rand::Rng;
use thiserror::Error;

/// Operational bound on |ξ| for the remainder of Θ.
pub const REMAINDER_BOUND: f64 = 0.1;

/// Float positivity threshold on the smallest eigenvalue of the normalised metric.
pub const POSITIVITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum G2Error {
    #[error("3-form is not positive")]
    NotPositive,
    #[error("exact metric requires a rational ninth root of {0}")]
    NoExactRoot(String),
    #[error("unsupported degree {0} for type decomposition")]
    UnsupportedDegree(usize),
    #[error("perturbation norm {0} exceeds the operational bound")]
    PerturbationTooLarge(f64),
    #[error("positivity lost on the finite-difference stencil")]
    PositivityLost,
    #[error(transparent)]
    Form(#[from] FormError),
}

/// The model 3-form on ℝ⁷.
pub fn phi0<S: Scalar>() -> KForm<S> {
    KForm::from_terms(7, &[(1, "123"), (-1, "145"), (-1, "167"), (-1, "246"), (1, "257"), (-1, "347"), (-1, "356")])
}

/// The Hodge dual of [`phi0`] under the Euclidean metric.
pub fn psi0<S: Scalar>() -> KForm<S> {
    KForm::from_terms(
        7,
        &[(1, "4567"), (-1, "2367"), (-1, "2345"), (-1, "1357"), (1, "1346"), (-1, "1256"), (-1, "1247")],
    )
}

fn unit<S: Scalar>(n: usize, i: usize) -> Vec<S> {
    (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect()
}

/// `B(u,v) = (1/6)(u⌟φ)∧(v⌟φ)∧φ` read off against e1∧…∧e7.
pub fn bilinear<S: Scalar>(phi: &KForm<S>) -> Result<Mat<S>, G2Error> {
    if phi.dim() != 7 || phi.deg() != 3 {
        return Err(FormError::SpaceMismatch { left: 7, right: phi.dim() }.into());
    }
    let contractions: Vec<KForm<S>> =
        (0..7).map(|i| phi.interior(&unit(7, i))).collect::<Result<_, _>>()?;
    let sixth = S::ratio(1, 6);
    let mut b = Mat::zeros(7, 7);
    for i in 0..7 {
        for j in i..7 {
            let top = contractions[i].wedge(&contractions[j])?.wedge(phi)?;
            let v = top.coeffs()[0].clone() * sixth.clone();
            b[(i, j)] = v.clone();
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Sign of `B` at the model form, fixed so that the model form induces the identity.
fn reference_sign() -> i32 {
    if bilinear::<f64>(&phi0()).expect("model form")[(0, 0)] > 0.0 {
        1
    } else {
        -1
    }
}

fn definite_part<S: Scalar>(phi: &KForm<S>) -> Result<(Mat<S>, i8), G2Error> {
    let m = bilinear(phi)?;
    let m = if reference_sign() > 0 { m } else { m.scale(&-S::one()) };
    if S::EXACT {
        if m.is_positive_definite_exact() {
            return Ok((m, 1));
        }
        let neg = m.scale(&-S::one());
        if neg.is_positive_definite_exact() {
            return Ok((neg, -1));
        }
        Err(G2Error::NotPositive)
    } else {
        let ev = symmetric_eigenvalues(&m.to_f64());
        if ev[0] > 0.0 {
            Ok((m, 1))
        } else if ev[6] < 0.0 {
            Ok((m.scale(&-S::one()), -1))
        } else {
            Err(G2Error::NotPositive)
        }
    }
}

/// Metric and orientation induced by a positive 3-form.
pub fn metric_from_phi<S: Scalar>(phi: &KForm<S>) -> Result<(Mat<S>, i8), G2Error> {
    let (m, orientation) = definite_part(phi)?;
    let det = m.det();
    let root = det
        .nth_root_checked(9)
        .ok_or_else(|| G2Error::NoExactRoot(format!("{:?}", det)))?;
    let g = m.scale(&(S::one() / root));
    if !S::EXACT && symmetric_eigenvalues(&g.to_f64())[0] <= POSITIVITY_EPS {
        return Err(G2Error::NotPositive);
    }
    Ok((g, orientation))
}

pub fn is_positive<S: Scalar>(phi: &KForm<S>) -> bool {
    if S::EXACT {
        definite_part(phi).is_ok()
    } else {
        metric_from_phi(phi).is_ok()
    }
}

/// Θ(φ) = ∗_φφ.
pub fn theta<S: Scalar>(phi: &KForm<S>) -> Result<KForm<S>, G2Error> {
    let (g, o) = metric_from_phi(phi)?;
    Ok(ModelSpace::new(g, o)?.hodge(phi)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeLabel {
    One,
    Seven,
    Fourteen,
    TwentySeven,
}

impl TypeLabel {
    pub fn dim(self) -> usize {
        match self {
            TypeLabel::One => 1,
            TypeLabel::Seven => 7,
            TypeLabel::Fourteen => 14,
            TypeLabel::TwentySeven => 27,
        }
    }
}

/// Orthogonal projectors onto the irreducible summands of Λ² or Λ³.
#[derive(Clone, Debug)]
pub struct TypeProjector<S> {
    pub degree: usize,
    pub components: Vec<(TypeLabel, Mat<S>)>,
}

impl<S: Scalar> TypeProjector<S> {
    pub fn matrix(&self, label: TypeLabel) -> Option<&Mat<S>> {
        self.components.iter().find(|(l, _)| *l == label).map(|(_, m)| m)
    }
}

/// Projector onto the span of `cols` that is orthogonal for `gram`.
fn orthogonal_projector<S: Scalar>(cols: &[Vec<S>], gram: &Mat<S>) -> Mat<S> {
    let a = Mat::from_columns(gram.rows(), cols);
    let at_g = a.transpose().mul(gram);
    let small = at_g.mul(&a).inverse().expect("independent spanning columns");
    a.mul(&small).mul(&at_g)
}

#[derive(Clone, Debug)]
pub struct G2Structure<S> {
    phi: KForm<S>,
    psi: KForm<S>,
    metric: Mat<S>,
    orientation: i8,
    space: ModelSpace<S>,
    proj2: TypeProjector<S>,
    proj3: TypeProjector<S>,
}

impl<S: Scalar> G2Structure<S> {
    pub fn new(phi: KForm<S>) -> Result<Self, G2Error> {
        let (metric, orientation) = metric_from_phi(&phi)?;
        let space = ModelSpace::new(metric.clone(), orientation)?;
        let psi = space.hodge(&phi)?;
        let ones: Vec<KForm<S>> = (0..7).map(|i| KForm::basis_element(7, &[i])).collect();

        let seven2: Vec<Vec<S>> = ones
            .iter()
            .map(|a| Ok(space.hodge(&a.wedge(&psi)?)?.coeffs().to_vec()))
            .collect::<Result<_, G2Error>>()?;
        let p7 = orthogonal_projector(&seven2, space.gram(2));
        let p14 = Mat::identity(21).sub(&p7);
        let proj2 = TypeProjector {
            degree: 2,
            components: vec![(TypeLabel::Seven, p7), (TypeLabel::Fourteen, p14)],
        };

        let seven3: Vec<Vec<S>> = ones
            .iter()
            .map(|a| Ok(space.hodge(&a.wedge(&phi)?)?.coeffs().to_vec()))
            .collect::<Result<_, G2Error>>()?;
        let p1 = orthogonal_projector(&[phi.coeffs().to_vec()], space.gram(3));
        let p7 = orthogonal_projector(&seven3, space.gram(3));
        let p27 = Mat::identity(35).sub(&p1).sub(&p7);
        let proj3 = TypeProjector {
            degree: 3,
            components: vec![(TypeLabel::One, p1), (TypeLabel::Seven, p7), (TypeLabel::TwentySeven, p27)],
        };
        Ok(G2Structure { phi, psi, metric, orientation, space, proj2, proj3 })
    }

    pub fn standard() -> Self {
        Self::new(phi0()).expect("model form is positive")
    }

    pub fn phi(&self) -> &KForm<S> {
        &self.phi
    }

    pub fn psi(&self) -> &KForm<S> {
        &self.psi
    }

    pub fn metric(&self) -> &Mat<S> {
        &self.metric
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn space(&self) -> &ModelSpace<S> {
        &self.space
    }

    pub fn volume(&self) -> KForm<S> {
        self.space.volume()
    }

    pub fn projector(&self, degree: usize) -> Result<&TypeProjector<S>, G2Error> {
        match degree {
            2 => Ok(&self.proj2),
            3 => Ok(&self.proj3),
            d => Err(G2Error::UnsupportedDegree(d)),
        }
    }

    /// Type components of a 2-, 3-, 4- or 5-form. Degrees 4 and 5 go through ∗.
    pub fn project(&self, xi: &KForm<S>) -> Result<Vec<(TypeLabel, KForm<S>)>, G2Error> {
        let d = xi.deg();
        let (src, dual) = match d {
            2 | 3 => (xi.clone(), false),
            4 | 5 => (self.space.hodge(xi)?, true),
            _ => return Err(G2Error::UnsupportedDegree(d)),
        };
        let proj = self.projector(src.deg())?;
        proj.components
            .iter()
            .map(|(label, m)| {
                let part = KForm::from_coeffs(7, src.deg(), m.mul_vec(src.coeffs()))?;
                let part = if dual { self.space.hodge(&part)? } else { part };
                Ok((*label, part))
            })
            .collect()
    }

    pub fn component(&self, xi: &KForm<S>, label: TypeLabel) -> Result<KForm<S>, G2Error> {
        self.project(xi)?
            .into_iter()
            .find(|(l, _)| *l == label)
            .map(|(_, f)| f)
            .ok_or(G2Error::UnsupportedDegree(xi.deg()))
    }

    /// D_φΘ(ξ) = ∗(4/3 π₁ξ + π₇ξ − π₂₇ξ).
    pub fn linearize_theta(&self, xi: &KForm<S>) -> Result<KForm<S>, G2Error> {
        if xi.deg() != 3 {
            return Err(G2Error::UnsupportedDegree(xi.deg()));
        }
        let mut acc = KForm::zero(7, 3);
        for (label, part) in self.project(xi)? {
            let w = match label {
                TypeLabel::One => S::ratio(4, 3),
                TypeLabel::Seven => S::one(),
                _ => -S::one(),
            };
            acc = &acc + &part.scale(&w);
        }
        Ok(self.space.hodge(&acc)?)
    }

    /// F(ξ) = Θ(φ+ξ) − Θ(φ) − D_φΘ(ξ).
    pub fn remainder(&self, xi: &KForm<S>) -> Result<KForm<S>, G2Error> {
        let n = self.space.norm(xi)?;
        if n > REMAINDER_BOUND {
            return Err(G2Error::PerturbationTooLarge(n));
        }
        let moved = self.phi.try_add(xi)?;
        if !is_positive(&moved) {
            return Err(G2Error::NotPositive);
        }
        let th = theta(&moved)?;
        Ok(&(&th - &self.psi) - &self.linearize_theta(xi)?)
    }

    /// Matrix of D_φΘ on the coordinate basis of Λ³ (columns are images).
    pub fn linearization_matrix(&self) -> Result<Mat<S>, G2Error> {
        let cols: Vec<Vec<S>> = basis(7, 3)
            .iter()
            .map(|&m| Ok(self.linearize_theta(&KForm::basis_element(7, &mask_indices(m)))?.coeffs().to_vec()))
            .collect::<Result<_, G2Error>>()?;
        Ok(Mat::from_columns(35, &cols))
    }
}

/// Central-difference Jacobian of Θ at φ, one column per basis 3-form.
pub fn fd_theta_jacobian(phi: &KForm<f64>, eps: f64) -> Result<Mat<f64>, G2Error> {
    let cols: Vec<Vec<f64>> = basis(7, 3)
        .iter()
        .map(|&m| {
            let dir = KForm::basis_element(7, &mask_indices(m)).scale(&eps);
            let plus = theta(&(phi + &dir))?;
            let minus = theta(&(phi - &dir))?;
            Ok((&plus - &minus).scale(&(0.5 / eps)).coeffs().to_vec())
        })
        .collect::<Result<_, G2Error>>()?;
    Ok(Mat::from_columns(35, &cols))
}

/// A random element of GL(7) close to the identity, `I + amplitude·U(−1,1)`.
pub fn random_frame<R: Rng>(rng: &mut R, amplitude: f64) -> Mat<f64> {
    Mat::from_fn(7, 7, |i, j| (if i == j { 1.0 } else { 0.0 }) + amplitude * rng.gen_range(-1.0..1.0))
}

/// The pullback of the model form by `a`, positive whenever `a` is invertible.
pub fn pulled_back_phi0<S: Scalar>(a: &Mat<S>) -> Result<KForm<S>, G2Error> {
    Ok(phi0::<S>().pullback(a)?)
}

/// A random 3-form with unit coefficient norm.
pub fn random_direction<R: Rng>(rng: &mut R) -> KForm<f64> {
    let c: Vec<f64> = (0..35).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = KForm::from_coeffs(7, 3, c).expect("35 coefficients");
    let n = f.coeff_norm();
    f.scale(&(1.0 / n))
}

/// |φ∧∗dφ − ψ∧∗dψ| at `p` with ψ = Θ(φ), derivatives by finite differences and ∗ taken at `p`.
pub fn fundamental_relation_residual<F>(phi_field: &F, p: &[f64], h: f64, stencil: Stencil) -> Result<f64, G2Error>
where
    F: Fn(&[f64]) -> KForm<f64>,
{
    let psi_field = |x: &[f64]| match theta(&phi_field(x)) {
        Ok(psi) => psi,
        Err(_) => KForm::from_coeffs(7, 4, vec![f64::NAN; 35]).expect("35 coefficients"),
    };
    let phi = phi_field(p);
    let structure = G2Structure::new(phi.clone())?;
    let dphi = fd_exterior_derivative_with(phi_field, p, h, stencil)?;
    let dpsi = fd_exterior_derivative_with(&psi_field, p, h, stencil).map_err(|e| match e {
        FormError::NonFinite(_) => G2Error::PositivityLost,
        other => G2Error::Form(other),
    })?;
    let star = structure.space();
    let lhs = phi.wedge(&star.hodge(&dphi)?)?;
    let rhs = structure.psi().wedge(&star.hodge(&dpsi)?)?;
    Ok(star.norm(&(&lhs - &rhs))?)
}

/// ∗(φ∧∗(φ∧α)) for a 1-form α, computed with the structure's own star.
pub fn double_contraction<S: Scalar>(st: &G2Structure<S>, alpha: &KForm<S>) -> Result<KForm<S>, G2Error> {
    let s = st.space();
    Ok(s.hodge(&st.phi().wedge(&s.hodge(&st.phi().wedge(alpha)?)?)?)?)
}
