//! Gluing schedule on the resolution: radial regions, the cutoff profile, pointwise
//! power-law torsion bounds and the exact exponent calculus for C⁰, L² and L¹⁴ norms.
//!
//! Exponents are exact rationals, affine in the small decay offset γ.

use crate::scalar::{format_rational, q, Rational};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlueError {
    #[error("region boundaries are not strictly increasing for t = {0}, R = {1}")]
    Unordered(f64, f64),
    #[error("radius {0} lies outside the tube and the outer region was not requested")]
    OutsideTube(f64),
    #[error("logarithmic case: b + 4/p vanishes for b = {0}, p = {1}")]
    Logarithmic(String, u32),
    #[error("unsupported exponent p = {0}")]
    BadExponent(u32),
}

/// c + g·γ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub c: Rational,
    pub g: Rational,
}

impl Affine {
    pub fn new(c: Rational, g: Rational) -> Self {
        Affine { c, g }
    }

    pub fn constant(c: Rational) -> Self {
        Affine { c, g: Rational::zero() }
    }

    pub fn zero() -> Self {
        Affine::constant(Rational::zero())
    }

    pub fn add(&self, o: &Affine) -> Affine {
        Affine::new(&self.c + &o.c, &self.g + &o.g)
    }

    pub fn sub(&self, o: &Affine) -> Affine {
        Affine::new(&self.c - &o.c, &self.g - &o.g)
    }

    pub fn scale(&self, s: &Rational) -> Affine {
        Affine::new(&self.c * s, &self.g * s)
    }

    pub fn at(&self, gamma: &Rational) -> Rational {
        &self.c + &self.g * gamma
    }

    pub fn at_f64(&self, gamma: f64) -> f64 {
        crate::scalar::Scalar::to_f64(&self.c) + crate::scalar::Scalar::to_f64(&self.g) * gamma
    }

    /// Order as γ → 0⁺: constant terms first, then the γ coefficient.
    pub fn cmp_small_gamma(&self, o: &Affine) -> Ordering {
        self.c.cmp(&o.c).then_with(|| self.g.cmp(&o.g))
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.g.is_zero() {
            return write!(f, "{}", format_rational(&self.c));
        }
        let mag = self.g.abs();
        let gam = if mag.is_one() {
            "γ".to_string()
        } else if mag.denom().is_one() {
            format!("{}γ", mag.numer())
        } else if mag.numer().is_one() {
            format!("γ/{}", mag.denom())
        } else {
            format!("{}γ/{}", mag.numer(), mag.denom())
        };
        let sign = if self.g.is_negative() { '-' } else { '+' };
        if self.c.is_zero() && sign == '+' {
            write!(f, "{gam}")
        } else if self.c.is_zero() {
            write!(f, "-{gam}")
        } else {
            write!(f, "{} {sign} {gam}", format_rational(&self.c))
        }
    }
}

/// Quintic smoothstep: 0 on [0,1], 1 on [2,∞), C² at the joins.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cutoff;

impl Cutoff {
    pub const COEFFS: [i64; 3] = [10, -15, 6];

    pub fn value(&self, x: f64) -> f64 {
        let s = (x - 1.0).clamp(0.0, 1.0);
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let s = x - 1.0;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let s = x - 1.0;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    }

    /// Exact value at a rational point.
    pub fn value_exact(&self, x: &Rational) -> Rational {
        let one = Rational::one();
        let s = x - &one;
        if s <= Rational::zero() {
            return Rational::zero();
        }
        if s >= one {
            return one;
        }
        let s3 = &s * &s * &s;
        s3 * (q(10, 1) + &s * (q(-15, 1) + &s * q(6, 1)))
    }
}

/// Radial regions, labelled 1..=7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Core = 1,
    Inner = 2,
    InnerCutoff = 3,
    Middle = 4,
    OuterCutoff = 5,
    Tube = 6,
    Outside = 7,
}

impl Region {
    pub const TABLE: [Region; 6] = [
        Region::Core,
        Region::Inner,
        Region::InnerCutoff,
        Region::Middle,
        Region::OuterCutoff,
        Region::Tube,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Boundary exponents (e_lo, e_hi): the region is c·t^{e_lo} ≤ ř ≤ c′·t^{e_hi}.
    /// `None` for the core, whose volume is O(t⁴).
    pub fn endpoint_exponents(self) -> Option<(Rational, Rational)> {
        match self {
            Region::Core => None,
            Region::Inner => Some((q(0, 1), q(-1, 9))),
            Region::InnerCutoff => Some((q(-1, 9), q(-1, 9))),
            Region::Middle => Some((q(-1, 9), q(-4, 5))),
            Region::OuterCutoff => Some((q(-4, 5), q(-4, 5))),
            Region::Tube => Some((q(-4, 5), q(-1, 1))),
            Region::Outside => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Core => "r <= 1",
            Region::Inner => "1 <= r <= t^(-1/9)",
            Region::InnerCutoff => "t^(-1/9) <= r <= 2t^(-1/9)",
            Region::Middle => "2t^(-1/9) <= r <= t^(-4/5)",
            Region::OuterCutoff => "t^(-4/5) <= r <= 2t^(-4/5)",
            Region::Tube => "r >= 2t^(-4/5)",
            Region::Outside => "outside tube",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSchedule {
    t: f64,
    tube_radius: f64,
}

impl RegionSchedule {
    pub fn new(t: f64, tube_radius: f64) -> Result<Self, GlueError> {
        let s = RegionSchedule { t, tube_radius };
        let b = s.boundaries();
        if !(t > 0.0 && t < 1.0 && b.windows(2).all(|w| w[0] < w[1])) {
            return Err(GlueError::Unordered(t, tube_radius));
        }
        Ok(s)
    }

    /// [1, t^{−1/9}, 2t^{−1/9}, t^{−4/5}, 2t^{−4/5}, R/t].
    pub fn boundaries(&self) -> [f64; 6] {
        let t = self.t;
        let a = t.powf(-1.0 / 9.0);
        let b = t.powf(-0.8);
        [1.0, a, 2.0 * a, b, 2.0 * b, self.tube_radius / t]
    }

    /// Region containing ř; boundary points go to the lower-indexed region.
    pub fn region_of(&self, rcheck: f64, allow_outside: bool) -> Result<Region, GlueError> {
        let b = self.boundaries();
        if rcheck >= b[5] {
            return if allow_outside {
                Ok(Region::Outside)
            } else {
                Err(GlueError::OutsideTube(rcheck))
            };
        }
        let idx = b[..5].iter().position(|&edge| rcheck <= edge).unwrap_or(5);
        Ok(Region::TABLE[idx])
    }
}

/// O(t^a ř^b) on a region, for the k-th derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawBound {
    pub name: &'static str,
    pub region: Region,
    pub k: u8,
    /// `None` encodes an identically vanishing quantity.
    pub exps: Option<(Affine, Affine)>,
}

fn bound(name: &'static str, region: Region, k: u8, a: Affine, b: Affine) -> PowerLawBound {
    PowerLawBound {
        name,
        region,
        k,
        exps: Some((a, b)),
    }
}

fn vanishing(name: &'static str, region: Region, k: u8) -> PowerLawBound {
    PowerLawBound {
        name,
        region,
        k,
        exps: None,
    }
}

pub const TORSION: &str = "Theta(phi)-psi";
pub const TORSION_DERIVATIVE: &str = "d(Theta(phi)-psi)";

/// Pointwise bounds on the torsion and its derivative in each region.
pub fn pointwise_bounds() -> Vec<PowerLawBound> {
    let c = |n, d| Affine::constant(q(n, d));
    let with_gamma = |n, d| Affine::new(q(n, d), q(1, 1));
    use Region::*;
    vec![
        bound(TORSION, Core, 0, c(2, 1), c(0, 1)),
        bound(TORSION, Inner, 0, c(2, 1), c(2, 1)),
        bound(TORSION, InnerCutoff, 0, c(16, 9), c(0, 1)),
        bound(TORSION, Middle, 0, c(2, 1), with_gamma(-2, 1)),
        bound(TORSION, OuterCutoff, 0, c(16, 5), c(0, 1)),
        vanishing(TORSION, Tube, 0),
        bound(TORSION_DERIVATIVE, Core, 1, c(1, 1), c(0, 1)),
        bound(TORSION_DERIVATIVE, Inner, 1, c(1, 1), c(1, 1)),
        bound(TORSION_DERIVATIVE, InnerCutoff, 1, c(8, 9), c(0, 1)),
        bound(TORSION_DERIVATIVE, Middle, 1, c(1, 1), with_gamma(-3, 1)),
        bound(TORSION_DERIVATIVE, OuterCutoff, 1, c(3, 1), c(0, 1)),
        vanishing(TORSION_DERIVATIVE, Tube, 1),
    ]
}

/// Smallest of several exponents as γ → 0⁺ (the dominant term for small t).
pub fn min_small_gamma<'a>(xs: impl IntoIterator<Item = &'a Affine>) -> Option<Affine> {
    xs.into_iter().min_by(|a, b| a.cmp_small_gamma(b)).cloned()
}

/// t-exponent of the sup of t^a ř^b over ř ∈ [t^{e_lo}, t^{e_hi}].
pub fn sup_exponent(a: &Affine, b: &Affine, ends: &(Rational, Rational)) -> Affine {
    let at = |e: &Rational| a.add(&b.scale(e));
    min_small_gamma([&at(&ends.0), &at(&ends.1)]).expect("two endpoints")
}

/// t-exponent of the Lᵖ norm of O(t^a ř^b) over ř ∈ [t^{e_lo}, t^{e_hi}],
/// with volume element t⁴ s³ ds, or t⁴ in total on the core.
pub fn lp_exponent(a: &Affine, b: &Affine, p: u32, ends: Option<&(Rational, Rational)>) -> Result<Affine, GlueError> {
    if p == 0 {
        return Err(GlueError::BadExponent(p));
    }
    let four_p = q(4, p as i64);
    let base = a.add(&Affine::constant(four_p.clone()));
    let Some(ends) = ends else {
        return Ok(base);
    };
    let shift = b.add(&Affine::constant(four_p));
    if shift.c.is_zero() && shift.g.is_zero() {
        return Err(GlueError::Logarithmic(b.to_string(), p));
    }
    let at = |e: &Rational| base.add(&shift.scale(e));
    Ok(min_small_gamma([&at(&ends.0), &at(&ends.1)]).expect("two endpoints"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormColumn {
    C0,
    L2,
    L14,
}

impl NormColumn {
    pub const ALL: [NormColumn; 3] = [NormColumn::C0, NormColumn::L2, NormColumn::L14];

    pub fn label(self) -> &'static str {
        match self {
            NormColumn::C0 => "C0",
            NormColumn::L2 => "L2",
            NormColumn::L14 => "L14",
        }
    }
}

/// One cell: `None` is an identically vanishing contribution.
#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub region: Region,
    pub column: NormColumn,
    pub exponent: Option<Affine>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionTable {
    pub cells: Vec<TableCell>,
}

impl TorsionTable {
    pub fn cell(&self, region: Region, column: NormColumn) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.region == region && c.column == column)
    }

    /// Dominant exponent per column as γ → 0⁺.
    pub fn aggregate(&self) -> [Affine; 3] {
        NormColumn::ALL.map(|col| {
            min_small_gamma(self.cells.iter().filter(|c| c.column == col).filter_map(|c| c.exponent.as_ref()))
                .expect("non-empty column")
        })
    }

    /// Supremum of γ for which every column keeps its γ → 0⁺ aggregate.
    pub fn aggregate_validity(&self) -> Option<Rational> {
        let agg = self.aggregate();
        let mut best: Option<Rational> = None;
        for (col, lead) in NormColumn::ALL.iter().zip(&agg) {
            for cell in self.cells.iter().filter(|c| c.column == *col) {
                let Some(e) = &cell.exponent else { continue };
                let gap = e.sub(lead);
                if gap.g.is_negative() && gap.c.is_positive() {
                    let cross = &gap.c / -&gap.g;
                    best = Some(best.map_or(cross.clone(), |b| b.min(cross)));
                }
            }
        }
        best
    }
}

/// Contributions of each region to the C⁰, L² and L¹⁴ norms.
pub fn torsion_table() -> Result<TorsionTable, GlueError> {
    let bounds = pointwise_bounds();
    let mut cells = Vec::new();
    for region in Region::TABLE {
        let of = |k: u8| bounds.iter().find(|b| b.region == region && b.k == k).expect("bound for region");
        let ends = region.endpoint_exponents();
        for column in NormColumn::ALL {
            let (record, p) = match column {
                NormColumn::C0 => (of(0), 0),
                NormColumn::L2 => (of(0), 2),
                NormColumn::L14 => (of(1), 14),
            };
            let exponent = match &record.exps {
                None => None,
                Some((a, b)) if p == 0 => Some(match &ends {
                    None => a.clone(),
                    Some(e) => sup_exponent(a, b, e),
                }),
                Some((a, b)) => Some(lp_exponent(a, b, p, ends.as_ref())?),
            };
            cells.push(TableCell {
                region,
                column,
                exponent,
            });
        }
    }
    Ok(TorsionTable { cells })
}

/// Reference values for the table, as (constant, γ-coefficient) strings per region and column.
pub const REFERENCE_TABLE: [[Option<(&str, &str)>; 3]; 6] = [
    [Some(("2", "0")), Some(("4", "0")), Some(("9/7", "0"))],
    [Some(("16/9", "0")), Some(("32/9", "0")), Some(("8/7", "0"))],
    [Some(("16/9", "0")), Some(("32/9", "0")), Some(("8/7", "0"))],
    [Some(("20/9", "-1/9")), Some(("4", "-4/5")), Some(("100/63", "-1/9"))],
    [Some(("16/5", "0")), Some(("18/5", "0")), Some(("107/35", "0"))],
    [None, None, None],
];

pub const REFERENCE_AGGREGATE: [&str; 3] = ["16/9", "32/9", "8/7"];

pub fn reference_cell(region: Region, column: NormColumn) -> Option<Affine> {
    let row = Region::TABLE.iter().position(|r| *r == region)?;
    let col = NormColumn::ALL.iter().position(|c| *c == column)?;
    REFERENCE_TABLE[row][col].map(|(c, g)| {
        Affine::new(
            crate::scalar::parse_rational(c).expect("valid literal"),
            crate::scalar::parse_rational(g).expect("valid literal"),
        )
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaWindow {
    /// sup of admissible α; non-positive means the window is empty.
    pub sup: Rational,
    pub empty: bool,
}

/// sup{α > 0 : α < c0, 7/2 + α < l2, −1/2 + α < l14}.
pub fn alpha_window_from(c0: &Rational, l2: &Rational, l14: &Rational) -> AlphaWindow {
    let sup = c0.clone().min(l2 - q(7, 2)).min(l14 + q(1, 2));
    let empty = !sup.is_positive();
    AlphaWindow {
        sup: if empty { Rational::zero() } else { sup },
        empty,
    }
}

pub fn alpha_window() -> Result<AlphaWindow, GlueError> {
    let [c0, l2, l14] = torsion_table()?.aggregate();
    Ok(alpha_window_from(&c0.c, &l2.c, &l14.c))
}

/// Exponent at the shared edge of two adjacent regions, from each side.
pub fn edge_orders(k: u8) -> Vec<(Region, Region, Affine, Affine)> {
    let bounds = pointwise_bounds();
    let mut out = Vec::new();
    for w in Region::TABLE.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let get = |r: Region| bounds.iter().find(|b| b.region == r && b.k == k).expect("bound");
        let (Some((a0, b0)), Some((a1, b1))) = (&get(lo).exps, &get(hi).exps) else {
            continue;
        };
        let edge = hi.endpoint_exponents().expect("bounded region").0;
        let left = match lo.endpoint_exponents() {
            None => a0.clone(),
            Some(_) => a0.add(&b0.scale(&edge)),
        };
        out.push((lo, hi, left, a1.add(&b1.scale(&edge))));
    }
    out
}

/// (∫_A^B (t^a s^b)^p t⁴ s³ ds)^{1/p} by Simpson quadrature in log s, A = t^{e_lo}, B = t^{e_hi}.
pub fn lp_quadrature(a: f64, b: f64, p: f64, e_lo: f64, e_hi: f64, t: f64, panels: usize) -> f64 {
    let (lo, hi) = (t.powf(e_lo), t.powf(e_hi));
    let (x0, x1) = (lo.ln(), hi.ln());
    let n = panels + panels % 2;
    let h = (x1 - x0) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let s = (x0 + h * i as f64).exp();
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (t.powf(a) * s.powf(b)).powf(p) * t.powi(4) * s.powi(4);
    }
    (acc * h / 3.0).powf(1.0 / p)
}
