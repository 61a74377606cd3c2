//! Moebius maps `x ↦ (n0 + n1·x)/(d0 + d1·x)` with exact coefficients.
//!
//! The matrix of a map is `[[n1, n0], [d1, d0]]`, acting on `(x, 1)ᵀ`. With
//! this convention the transpose of a linear map `(a + b x)/c` is
//! `b y/(c + a y)`, which fixes `0`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::exactnum::{parse_rational, rational_sqrt, Polynomial, Rational, RationalFunction};
use crate::{Error, Result};

/// A point of the projective line over `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProjPoint {
    Finite(Rational),
    Infinity,
}

impl ProjPoint {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ProjPoint::Finite(r) => Some(r),
            ProjPoint::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ProjPoint::Infinity)
    }
}

impl From<Rational> for ProjPoint {
    fn from(r: Rational) -> Self {
        ProjPoint::Finite(r)
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjPoint::Finite(r) => write!(f, "{r}"),
            ProjPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Canonical Moebius map: coprime integer coefficients, `d0 > 0`, or
/// `d0 = 0` and `d1 > 0`; determinant `n1·d0 − n0·d1` nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MoebiusMap {
    n0: BigInt,
    n1: BigInt,
    d0: BigInt,
    d1: BigInt,
}

/// Unnormalized rational coefficient quadruple; used where the scaling of a
/// formula matters (determinants as polynomials in a parameter).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalQuad {
    pub n0: Rational,
    pub n1: Rational,
    pub d0: Rational,
    pub d1: Rational,
}

impl RationalQuad {
    pub fn new(n0: Rational, n1: Rational, d0: Rational, d1: Rational) -> Self {
        Self { n0, n1, d0, d1 }
    }

    pub fn determinant(&self) -> Rational {
        &self.n1 * &self.d0 - &self.n0 * &self.d1
    }

    /// Plain matrix product, `self ∘ inner`, no rescaling.
    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            n1: &self.n1 * &inner.n1 + &self.n0 * &inner.d1,
            n0: &self.n1 * &inner.n0 + &self.n0 * &inner.d0,
            d1: &self.d1 * &inner.n1 + &self.d0 * &inner.d1,
            d0: &self.d1 * &inner.n0 + &self.d0 * &inner.d0,
        }
    }

    pub fn to_map(&self) -> Result<MoebiusMap> {
        make_map(&self.n0, &self.n1, &self.d0, &self.d1)
    }
}

/// Canonical primitive-integer form of `(n0 + n1 x)/(d0 + d1 x)`.
pub fn make_map(n0: &Rational, n1: &Rational, d0: &Rational, d1: &Rational) -> Result<MoebiusMap> {
    if (n1 * d0 - n0 * d1).is_zero() {
        return Err(Error::DegenerateMap);
    }
    let lcm = [n0, n1, d0, d1]
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let l = Rational::from_integer(lcm);
    let ints = [n0, n1, d0, d1].map(|c| (c * &l).to_integer());
    Ok(MoebiusMap::canonical(ints))
}

impl MoebiusMap {
    fn canonical([mut n0, mut n1, mut d0, mut d1]: [BigInt; 4]) -> Self {
        let mut g = n0.gcd(&n1).gcd(&d0).gcd(&d1);
        if d0.is_negative() || (d0.is_zero() && d1.is_negative()) {
            g = -g;
        }
        n0 /= &g;
        n1 /= &g;
        d0 /= &g;
        d1 /= &g;
        Self { n0, n1, d0, d1 }
    }

    pub fn from_ints(n0: i64, n1: i64, d0: i64, d1: i64) -> Result<Self> {
        Self::from_bigints([n0.into(), n1.into(), d0.into(), d1.into()])
    }

    pub fn from_bigints(c: [BigInt; 4]) -> Result<Self> {
        let [n0, n1, d0, d1] = &c;
        if (n1 * d0 - n0 * d1).is_zero() {
            return Err(Error::DegenerateMap);
        }
        Ok(Self::canonical(c))
    }

    pub fn identity() -> Self {
        Self::canonical([0.into(), 1.into(), 1.into(), 0.into()])
    }

    /// `ψ(x) = 1 − x`.
    pub fn reflection() -> Self {
        Self::canonical([1.into(), (-1).into(), 1.into(), 0.into()])
    }

    pub fn n0(&self) -> &BigInt {
        &self.n0
    }
    pub fn n1(&self) -> &BigInt {
        &self.n1
    }
    pub fn d0(&self) -> &BigInt {
        &self.d0
    }
    pub fn d1(&self) -> &BigInt {
        &self.d1
    }

    pub fn rational_coeffs(&self) -> [Rational; 4] {
        [&self.n0, &self.n1, &self.d0, &self.d1].map(|c| Rational::from_integer(c.clone()))
    }

    pub fn to_quad(&self) -> RationalQuad {
        let [n0, n1, d0, d1] = self.rational_coeffs();
        RationalQuad { n0, n1, d0, d1 }
    }

    pub fn determinant(&self) -> BigInt {
        &self.n1 * &self.d0 - &self.n0 * &self.d1
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn is_linear(&self) -> bool {
        self.d1.is_zero()
    }

    pub fn is_increasing(&self) -> bool {
        self.determinant().is_positive()
    }

    /// The pole `−d0/d1`, infinity for linear maps.
    pub fn pole(&self) -> ProjPoint {
        if self.d1.is_zero() {
            ProjPoint::Infinity
        } else {
            ProjPoint::Finite(Rational::new(-self.d0.clone(), self.d1.clone()))
        }
    }

    pub fn evaluate(&self, x: &ProjPoint) -> ProjPoint {
        let (num, den) = match x {
            ProjPoint::Finite(x) => {
                let [n0, n1, d0, d1] = self.rational_coeffs();
                (n0 + n1 * x, d0 + d1 * x)
            }
            ProjPoint::Infinity => (
                Rational::from_integer(self.n1.clone()),
                Rational::from_integer(self.d1.clone()),
            ),
        };
        if den.is_zero() {
            ProjPoint::Infinity
        } else {
            ProjPoint::Finite(num / den)
        }
    }

    /// Evaluation at a finite rational; `None` at the pole.
    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        self.evaluate(&ProjPoint::Finite(x.clone()))
            .finite()
            .cloned()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let [n0, n1, d0, d1] = self.f64_coeffs();
        (n0 + n1 * x) / (d0 + d1 * x)
    }

    pub fn f64_coeffs(&self) -> [f64; 4] {
        self.rational_coeffs().map(|c| crate::exactnum::to_f64(&c))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let q = self.to_quad().compose(&inner.to_quad());
        q.to_map()
            .expect("product of invertible matrices is invertible")
    }

    pub fn invert(&self) -> Self {
        Self::canonical([
            -self.n0.clone(),
            self.d0.clone(),
            self.n1.clone(),
            -self.d1.clone(),
        ])
    }

    /// The map of the transposed matrix: `(n0, n1, d0, d1) ↦ (d1, n1, d0, n0)`.
    pub fn transpose_dual(&self) -> Self {
        Self::canonical([
            self.d1.clone(),
            self.n1.clone(),
            self.d0.clone(),
            self.n0.clone(),
        ])
    }

    /// `|n1·d0 − n0·d1| / (d0 + d1 x)²`.
    pub fn jacobian(&self) -> RationalFunction {
        let det = Rational::from_integer(self.determinant().abs());
        let den = Polynomial::linear(
            Rational::from_integer(self.d0.clone()),
            Rational::from_integer(self.d1.clone()),
        );
        RationalFunction::new(Polynomial::constant(det), den.pow(2)).expect("nonzero denominator")
    }

    /// `ψ ∘ self ∘ ψ` with `ψ(x) = 1 − x`.
    pub fn conjugate_reflect(&self) -> Self {
        let psi = Self::reflection();
        psi.compose(&self.compose(&psi))
    }

    /// Roots of `d1·x² + (d0 − n1)·x − n0`, plus infinity for maps fixing it.
    pub fn fixed_points(&self) -> Result<FixedPoints> {
        if self.is_identity() {
            return Err(Error::AllPointsFixed);
        }
        let a = Rational::from_integer(self.d1.clone());
        let b = Rational::from_integer(&self.d0 - &self.n1);
        let c = Rational::from_integer(-self.n0.clone());
        if a.is_zero() {
            // Linear map: infinity is fixed; translations fix it twice.
            if b.is_zero() {
                return Ok(FixedPoints::Points(vec![(ProjPoint::Infinity, 2)]));
            }
            return Ok(FixedPoints::Points(vec![
                (ProjPoint::Finite(-c / b), 1),
                (ProjPoint::Infinity, 1),
            ]));
        }
        let disc = &b * &b - Rational::from_integer(4.into()) * &a * &c;
        let two_a = &a + &a;
        if disc.is_zero() {
            return Ok(FixedPoints::Points(vec![(
                ProjPoint::Finite(-&b / &two_a),
                2,
            )]));
        }
        match rational_sqrt(&disc) {
            Some(s) => {
                let mut r = [(-&b - &s) / &two_a, (-&b + &s) / &two_a];
                r.sort();
                let [lo, hi] = r;
                Ok(FixedPoints::Points(vec![
                    (ProjPoint::Finite(lo), 1),
                    (ProjPoint::Finite(hi), 1),
                ]))
            }
            None => Ok(FixedPoints::Quadratic {
                a,
                b,
                c,
                real: disc.is_positive(),
            }),
        }
    }
}

/// Fixed-point set of a non-identity Moebius map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedPoints {
    /// Rational or infinite points with multiplicity; finite points ascending.
    Points(Vec<(ProjPoint, u32)>),
    /// Roots of `a x² + b x + c` outside `Q`; `real` tells whether they are real.
    Quadratic {
        a: Rational,
        b: Rational,
        c: Rational,
        real: bool,
    },
}

impl FixedPoints {
    pub fn contains(&self, p: &ProjPoint) -> bool {
        match self {
            FixedPoints::Points(v) => v.iter().any(|(q, _)| q == p),
            FixedPoints::Quadratic { .. } => false,
        }
    }
}

/// Total order on the extended line used for interval endpoints, where the
/// caller decides whether `Infinity` means `−∞` (`inf_low`) or `+∞`.
pub(crate) fn cmp_ext(a: &ProjPoint, a_low: bool, b: &ProjPoint, b_low: bool) -> Ordering {
    match (a, b) {
        (ProjPoint::Finite(x), ProjPoint::Finite(y)) => x.cmp(y),
        (ProjPoint::Infinity, ProjPoint::Infinity) => b_low.cmp(&a_low),
        (ProjPoint::Infinity, _) => {
            if a_low {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        (_, ProjPoint::Infinity) => {
            if b_low {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [n0, n1, d0, d1] = self.rational_coeffs();
        let num = Polynomial::linear(n0, n1);
        let den = Polynomial::linear(d0, d1);
        let terms = |p: &Polynomial| p.coeffs().iter().filter(|c| !c.is_zero()).count();
        let wrap = |p: &Polynomial| {
            if terms(p) > 1 {
                format!("({p})")
            } else {
                p.to_string()
            }
        };
        if den == Polynomial::one() {
            write!(f, "{num}")
        } else {
            write!(f, "{}/{}", wrap(&num), wrap(&den))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    n0: String,
    n1: String,
    d0: String,
    d1: String,
}

impl Serialize for MoebiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapJson {
            n0: self.n0.to_string(),
            n1: self.n1.to_string(),
            d0: self.d0.to_string(),
            d1: self.d1.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapJson::deserialize(d)?;
        let p = |s: &str| parse_rational(s).map_err(D::Error::custom);
        make_map(&p(&j.n0)?, &p(&j.n1)?, &p(&j.d0)?, &p(&j.d1)?).map_err(D::Error::custom)
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProjPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim_start_matches(['-', '+']) {
            "inf" => Ok(ProjPoint::Infinity),
            _ => parse_rational(&s)
                .map(ProjPoint::Finite)
                .map_err(D::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{int, rat};

    fn m(n0: i64, n1: i64, d0: i64, d1: i64) -> MoebiusMap {
        MoebiusMap::from_ints(n0, n1, d0, d1).unwrap()
    }

    fn fin(r: Rational) -> ProjPoint {
        ProjPoint::Finite(r)
    }

    #[test]
    fn canonical_construction() {
        let f = make_map(&rat(1, 2), &int(1), &rat(3, 2), &int(0)).unwrap();
        assert_eq!(
            [f.n0(), f.n1(), f.d0(), f.d1()].map(|c| c.clone()),
            [1, 2, 3, 0].map(BigInt::from)
        );
        assert!(make_map(&int(0), &int(1), &int(1), &int(0))
            .unwrap()
            .is_identity());
        assert_eq!(
            make_map(&int(2), &int(0), &int(6), &int(0)),
            Err(Error::DegenerateMap)
        );
        // sign normalization
        assert_eq!(m(-1, -5, -3, -6), m(1, 5, 3, 6));
        assert_eq!(m(1, 0, 0, -1), m(-1, 0, 0, 1));
    }

    #[test]
    fn evaluation() {
        let f = m(1, 5, 3, 6);
        assert_eq!(f.evaluate(&fin(int(0))), fin(rat(1, 3)));
        assert_eq!(f.evaluate(&fin(int(1))), fin(rat(2, 3)));
        assert_eq!(
            MoebiusMap::identity().evaluate(&fin(rat(7, 3))),
            fin(rat(7, 3))
        );
        assert_eq!(f.evaluate(&fin(rat(-1, 2))), ProjPoint::Infinity);
        assert_eq!(f.evaluate(&ProjPoint::Infinity), fin(rat(5, 6)));
        assert_eq!(
            m(1, 3, 3, 0).evaluate(&ProjPoint::Infinity),
            ProjPoint::Infinity
        );
    }

    #[test]
    fn composition_reproduces_jump_branches() {
        let v_alpha = m(-1, 3, 3, 0);
        let v_gamma = m(1, 3, 3, 0);
        let v_beta = m(1, 5, 3, 6);
        assert_eq!(v_alpha.compose(&v_beta), m(0, 1, 1, 2));
        assert_eq!(v_gamma.compose(&v_beta), m(2, 7, 3, 6));
        assert_eq!(v_beta.compose(&MoebiusMap::identity()), v_beta);
    }

    #[test]
    fn inversion() {
        assert_eq!(m(0, 1, 1, 2).invert(), m(0, 1, 1, -2));
        assert!(MoebiusMap::identity().invert().is_identity());
        assert_eq!(m(-1, 3, 3, 0).invert(), m(1, 3, 3, 0));
        let f = m(1, 5, 3, 6);
        assert!(f.compose(&f.invert()).is_identity());
    }

    #[test]
    fn transpose() {
        assert_eq!(m(1, 2, 3, 0).transpose_dual(), m(0, 2, 3, 1));
        assert!(MoebiusMap::identity().transpose_dual().is_identity());
        assert_eq!(m(1, 3, 3, 3).transpose_dual(), m(3, 3, 3, 1));
        let f = m(1, 5, 3, 6);
        assert_eq!(f.transpose_dual().transpose_dual(), f);
    }

    #[test]
    fn jacobians() {
        let j = m(1, 5, 3, 6).jacobian();
        let expect = RationalFunction::new(
            Polynomial::from_ints(&[9]),
            Polynomial::from_ints(&[9, 36, 36]),
        )
        .unwrap();
        assert_eq!(j, expect);
        assert_eq!(MoebiusMap::identity().jacobian(), RationalFunction::one());
        assert_eq!(m(-1, 3, 3, 0).jacobian(), RationalFunction::one());
    }

    #[test]
    fn fixed_point_sets() {
        assert_eq!(
            m(0, 1, 1, 2).fixed_points().unwrap(),
            FixedPoints::Points(vec![(fin(int(0)), 2)])
        );
        // V*y = b y/(c + a y), b ≠ c, fixes 0
        let dual = m(1, 2, 3, 0).transpose_dual();
        assert!(dual.fixed_points().unwrap().contains(&fin(int(0))));
        assert_eq!(
            m(1, 3, 3, 0).fixed_points().unwrap(),
            FixedPoints::Points(vec![(ProjPoint::Infinity, 2)])
        );
        assert_eq!(
            MoebiusMap::identity().fixed_points(),
            Err(Error::AllPointsFixed)
        );
        // x ↦ 1/(1+x) fixes (-1 ± √5)/2
        assert!(matches!(
            m(1, 0, 1, 1).fixed_points().unwrap(),
            FixedPoints::Quadratic { real: true, .. }
        ));
    }

    #[test]
    fn reflection_conjugates() {
        assert_eq!(m(1, 3, 3, 0).conjugate_reflect(), m(-1, 3, 3, 0));
        let psi = MoebiusMap::reflection();
        assert_eq!(psi.conjugate_reflect(), psi);
        // 2/(3+3x) ↦ 1 − 2/(3 + 3(1−x)) = (4−3x)/(6−3x)
        assert_eq!(m(2, 0, 3, 3).conjugate_reflect(), m(4, -3, 6, -3));
    }

    #[test]
    fn display() {
        assert_eq!(m(1, 5, 3, 6).to_string(), "(1+5x)/(3+6x)");
        assert_eq!(m(0, 1, 1, 2).to_string(), "x/(1+2x)");
        assert_eq!(m(2, 0, 3, 3).to_string(), "2/(3+3x)");
        assert_eq!(m(-1, 3, 3, 0).to_string(), "(-1+3x)/3");
        assert_eq!(m(1, -1, 3, 3).to_string(), "(1-x)/(3+3x)");
        assert_eq!(MoebiusMap::identity().to_string(), "x");
    }
}
