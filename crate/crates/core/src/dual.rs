//! Natural duals of the jump system.
//!
//! A natural dual is a symmetric matrix `M = [[D, B], [B, A]]`, i.e. the map
//! `x ↦ (B + D x)/(A + B x)`, with `M·V = Vᵀ·M` for every inverse branch `V`.
//! Since `M` is symmetric this says `M·V` is symmetric, one linear equation
//! in `(A, B, D)` per branch. Three branches give a 3×3 homogeneous system;
//! a dual can exist only when its determinant vanishes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::density::RationalDensity;
use crate::exactnum::{
    parse_rational, poly_interpolate, rat, serde_rational, Polynomial, Rational, RationalFunction,
};
use crate::moebius::{cmp_ext, make_map, FixedPoints, MoebiusMap, ProjPoint, RationalQuad};
use crate::systems::{build_jump, JumpSystem, SystemSpec, TypeVector, ValidationReport};
use crate::{Error, Result};

/// `cA·A + cB·B + cD·D = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryRow {
    #[serde(rename = "A", with = "serde_rational")]
    pub c_a: Rational,
    #[serde(rename = "B", with = "serde_rational")]
    pub c_b: Rational,
    #[serde(rename = "D", with = "serde_rational")]
    pub c_d: Rational,
}

impl SymmetryRow {
    /// `(d1, n1 − d0, −n0)`: the off-diagonal condition on `M·V`.
    pub fn from_quad(q: &RationalQuad) -> Self {
        Self {
            c_a: q.d1.clone(),
            c_b: &q.n1 - &q.d0,
            c_d: -q.n0.clone(),
        }
    }

    pub fn as_array(&self) -> [Rational; 3] {
        [self.c_a.clone(), self.c_b.clone(), self.c_d.clone()]
    }

    pub fn apply(&self, abd: &[Rational; 3]) -> Rational {
        &self.c_a * &abd[0] + &self.c_b * &abd[1] + &self.c_d * &abd[2]
    }
}

pub fn symmetry_row(v: &MoebiusMap) -> SymmetryRow {
    SymmetryRow::from_quad(&v.to_quad())
}

fn det3(r: &[[Rational; 3]; 3]) -> Rational {
    &r[0][0] * (&r[1][1] * &r[2][2] - &r[1][2] * &r[2][1])
        - &r[0][1] * (&r[1][0] * &r[2][2] - &r[1][2] * &r[2][0])
        + &r[0][2] * (&r[1][0] * &r[2][1] - &r[1][1] * &r[2][0])
}

fn cross(u: &[Rational; 3], v: &[Rational; 3]) -> [Rational; 3] {
    [
        &u[1] * &v[2] - &u[2] * &v[1],
        &u[2] * &v[0] - &u[0] * &v[2],
        &u[0] * &v[1] - &u[1] * &v[0],
    ]
}

/// Symmetry rows of the jump branches in order `αβ, β, γβ`, canonical scaling.
pub fn symmetry_rows(js: &JumpSystem) -> [SymmetryRow; 3] {
    js.branches().map(symmetry_row)
}

/// Determinant of the symmetry rows with every branch in canonical form.
pub fn det_system(js: &JumpSystem) -> Rational {
    det3(&symmetry_rows(js).map(|r| r.as_array()))
}

/// Determinant with the branches in formula scaling (see
/// [`JumpSystem::formula`]); a polynomial of degree ≤ 3 in β.
pub fn det_system_formula(js: &JumpSystem) -> Rational {
    det3(
        &js.formula()
            .each_ref()
            .map(|q| SymmetryRow::from_quad(q).as_array()),
    )
}

const DET_NODES: [(i64, i64); 7] = [(1, 2), (1, 1), (3, 2), (2, 1), (-1, 2), (1, 3), (5, 4)];
const DET_CHECK_NODES: [(i64, i64); 3] = [(-1, 3), (2, 3), (7, 4)];

/// DET as an exact polynomial in β, from seven samples of the
/// formula-scaled determinant and re-checked at three fresh nodes.
pub fn det_polynomial(p1: &Rational, p2: &Rational, ty: TypeVector) -> Result<Polynomial> {
    let det_at = |b: &Rational| -> Result<Rational> {
        let spec = SystemSpec::unchecked(p1.clone(), p2.clone(), b.clone(), ty).with_override();
        Ok(det_system_formula(&build_jump(&spec)?))
    };
    let pts = DET_NODES
        .iter()
        .map(|&(n, d)| {
            let b = rat(n, d);
            det_at(&b).map(|v| (b, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let poly = poly_interpolate(&pts)?;
    for &(n, d) in &DET_CHECK_NODES {
        let b = rat(n, d);
        if poly.eval(&b) != det_at(&b)? {
            return Err(Error::Internal(format!(
                "DET interpolant fails at beta = {b}"
            )));
        }
    }
    Ok(poly)
}

/// A closed interval of the extended line: `lo` may be `−∞` and `hi` `+∞`,
/// both written [`ProjPoint::Infinity`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjInterval {
    pub lo: ProjPoint,
    pub hi: ProjPoint,
}

impl ProjInterval {
    pub fn bounded(lo: Rational, hi: Rational) -> Self {
        Self {
            lo: ProjPoint::Finite(lo),
            hi: ProjPoint::Finite(hi),
        }
    }

    pub fn unit() -> Self {
        Self::bounded(Rational::zero(), Rational::one())
    }

    pub fn is_ray(&self) -> bool {
        self.lo.is_infinite() || self.hi.is_infinite()
    }

    pub fn has_interior(&self) -> bool {
        cmp_ext(&self.lo, true, &self.hi, false).is_lt()
    }

    /// `1 + x·y > 0` for all `x ∈ [0,1]` and `y` in the interval.
    pub fn kernel_positive(&self) -> bool {
        match &self.lo {
            ProjPoint::Finite(lo) => *lo > -Rational::one(),
            ProjPoint::Infinity => false,
        }
    }

    fn contains_in_interior(&self, p: &Rational) -> bool {
        let p = ProjPoint::Finite(p.clone());
        cmp_ext(&self.lo, true, &p, false).is_lt() && cmp_ext(&p, false, &self.hi, false).is_lt()
    }

    fn interior_point(&self) -> Result<Rational> {
        match (&self.lo, &self.hi) {
            (ProjPoint::Finite(a), ProjPoint::Finite(b)) => Ok((a + b) / rat(2, 1)),
            (ProjPoint::Finite(a), ProjPoint::Infinity) => Ok(a + Rational::one()),
            (ProjPoint::Infinity, ProjPoint::Finite(b)) => Ok(b - Rational::one()),
            _ => Err(Error::DegenerateInterval),
        }
    }

    fn contains_interval(&self, other: &Self) -> bool {
        cmp_ext(&self.lo, true, &other.lo, true).is_le()
            && cmp_ext(&other.hi, false, &self.hi, false).is_le()
    }
}

impl std::fmt::Display for ProjInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lo = match &self.lo {
            ProjPoint::Infinity => "-inf".to_string(),
            p => p.to_string(),
        };
        write!(f, "[{lo}, {}]", self.hi)
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalJson {
    lo: String,
    hi: String,
}

impl Serialize for ProjInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let lo = match &self.lo {
            ProjPoint::Infinity => "-inf".to_string(),
            p => p.to_string(),
        };
        IntervalJson {
            lo,
            hi: self.hi.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = IntervalJson::deserialize(d)?;
        let p = |s: &str| -> std::result::Result<ProjPoint, D::Error> {
            match s.trim_start_matches(['-', '+']) {
                "inf" => Ok(ProjPoint::Infinity),
                _ => parse_rational(s)
                    .map(ProjPoint::Finite)
                    .map_err(D::Error::custom),
            }
        };
        Ok(ProjInterval {
            lo: p(&j.lo)?,
            hi: p(&j.hi)?,
        })
    }
}

/// Image of an interval under a Moebius map whose pole avoids its interior.
pub fn image_of_interval(w: &MoebiusMap, iv: &ProjInterval) -> Result<ProjInterval> {
    if let ProjPoint::Finite(p) = w.pole() {
        if iv.contains_in_interior(&p) {
            return Err(Error::NotAnInterval);
        }
    }
    let a = w.evaluate(&iv.lo);
    let b = w.evaluate(&iv.hi);
    let mid = w.eval(&iv.interior_point()?).ok_or(Error::NotAnInterval)?;
    match (a, b) {
        (ProjPoint::Finite(a), ProjPoint::Finite(b)) => {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if lo == hi {
                return Err(Error::DegenerateInterval);
            }
            Ok(ProjInterval::bounded(lo, hi))
        }
        (ProjPoint::Infinity, ProjPoint::Finite(f))
        | (ProjPoint::Finite(f), ProjPoint::Infinity) => {
            if mid > f {
                Ok(ProjInterval {
                    lo: ProjPoint::Finite(f),
                    hi: ProjPoint::Infinity,
                })
            } else {
                Ok(ProjInterval {
                    lo: ProjPoint::Infinity,
                    hi: ProjPoint::Finite(f),
                })
            }
        }
        (ProjPoint::Infinity, ProjPoint::Infinity) => Err(Error::NotAnInterval),
    }
}

/// `B* = M([0,1])`, a bounded interval or a ray.
pub fn dual_interval(m: &MoebiusMap) -> Result<ProjInterval> {
    image_of_interval(m, &ProjInterval::unit())
}

/// Solution `(A, B, D)` of the symmetry system with the map `M` and `B*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCandidate {
    #[serde(rename = "A", with = "serde_rational")]
    pub a: Rational,
    #[serde(rename = "B", with = "serde_rational")]
    pub b: Rational,
    #[serde(rename = "D", with = "serde_rational")]
    pub d: Rational,
    /// `x ↦ (B + D x)/(A + B x)`; absent when `A·D = B²`.
    #[serde(rename = "M")]
    pub m: Option<MoebiusMap>,
    pub interval: Option<ProjInterval>,
    pub degenerate: bool,
}

impl DualCandidate {
    /// Scales `(A, B, D)` to coprime integers with the first nonzero entry
    /// positive, then builds `M` and `B*` when possible.
    pub fn from_abd(abd: [Rational; 3]) -> Result<Self> {
        if abd.iter().all(|c| c.is_zero()) {
            return Err(Error::Underdetermined);
        }
        let lcm = abd.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let l = Rational::from_integer(lcm);
        let ints = abd.map(|c| (c * &l).to_integer());
        let mut g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if ints
            .iter()
            .find(|c| !c.is_zero())
            .is_some_and(|c| c.is_negative())
        {
            g = -g;
        }
        let [a, b, d] = ints.map(|c| Rational::from_integer(c / &g));
        let degenerate = (&a * &d - &b * &b).is_zero();
        let (m, interval) = if degenerate {
            (None, None)
        } else {
            let m = make_map(&b, &d, &a, &b)?;
            let iv = dual_interval(&m).ok();
            (Some(m), iv)
        };
        Ok(Self {
            a,
            b,
            d,
            m,
            interval,
            degenerate,
        })
    }

    pub fn abd(&self) -> [Rational; 3] {
        [self.a.clone(), self.b.clone(), self.d.clone()]
    }
}

/// Nullspace of the symmetry system when DET vanishes; `None` when it does not.
pub fn solve_dual(js: &JumpSystem) -> Result<Option<DualCandidate>> {
    let rows = symmetry_rows(js).map(|r| r.as_array());
    if !det3(&rows).is_zero() {
        return Ok(None);
    }
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let v = pairs
        .iter()
        .map(|&(i, j)| cross(&rows[i], &rows[j]))
        .find(|v| v.iter().any(|c| !c.is_zero()))
        .ok_or(Error::Underdetermined)?;
    DualCandidate::from_abd(v).map(Some)
}

/// Images of `B*` under the transposed branches, in branch order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualValidation {
    pub report: ValidationReport,
    pub images: Vec<Option<ProjInterval>>,
}

/// Checks that the transposed branches map `B*` into itself and tile it,
/// and that `M ∘ V = Vᵀ ∘ M` for each branch.
pub fn validate_dual(js: &JumpSystem, cand: &DualCandidate) -> DualValidation {
    let mut report = ValidationReport {
        passed: true,
        checks: Vec::new(),
    };
    let mut images = Vec::new();
    let rows = symmetry_rows(js);
    let abd = cand.abd();
    for (name, row) in ["ab", "b", "gb"].iter().zip(&rows) {
        let r = row.apply(&abd);
        report.push(format!("row {name}"), r.is_zero(), format!("residual {r}"));
    }
    let (m, iv) = match (&cand.m, &cand.interval) {
        (Some(m), Some(iv)) => (m, iv),
        (None, _) => {
            report.push("nondegenerate M", false, "A·D − B² = 0");
            return DualValidation { report, images };
        }
        (Some(_), None) => {
            report.push("dual interval", false, "M has a pole inside (0,1)");
            return DualValidation { report, images };
        }
    };
    report.push("nondegenerate M", true, format!("M = {m}"));
    report.push("kernel 1+xy", iv.kernel_positive(), format!("B* = {iv}"));
    for (name, v) in ["ab", "b", "gb"].iter().zip(js.branches()) {
        let vt = v.transpose_dual();
        let ok = m.compose(v) == vt.compose(m);
        report.push(format!("conjugacy {name}"), ok, format!("V* = {vt}"));
        match image_of_interval(&vt, iv) {
            Ok(img) => {
                let inside = iv.contains_interval(&img);
                report.push(format!("image {name}"), inside, format!("{img}"));
                images.push(Some(img));
            }
            Err(e) => {
                report.push(format!("image {name}"), false, e.to_string());
                images.push(None);
            }
        }
    }
    let mut imgs: Vec<&ProjInterval> = images.iter().flatten().collect();
    let tiled = imgs.len() == 3 && {
        imgs.sort_by(|x, y| cmp_ext(&x.lo, true, &y.lo, true));
        cmp_ext(&imgs[0].lo, true, &iv.lo, true).is_eq()
            && cmp_ext(&imgs[2].hi, false, &iv.hi, false).is_eq()
            && imgs
                .windows(2)
                .all(|w| cmp_ext(&w[0].hi, false, &w[1].lo, true).is_eq())
    };
    report.push("tiling", tiled, "images cover B* with disjoint interiors");
    DualValidation { report, images }
}

/// The smallest point fixed by all three maps, if any.
pub fn common_fixed_point(duals: [&MoebiusMap; 3]) -> Result<Option<ProjPoint>> {
    let sets = duals
        .iter()
        .map(|f| f.fixed_points())
        .collect::<Result<Vec<_>>>()?;
    let mut cands: Vec<ProjPoint> = sets
        .iter()
        .filter_map(|s| match s {
            FixedPoints::Points(v) => Some(v.iter().map(|(p, _)| p.clone())),
            FixedPoints::Quadratic { .. } => None,
        })
        .flatten()
        .collect();
    cands.sort_by(|a, b| cmp_ext(a, false, b, false));
    cands.dedup();
    Ok(cands
        .into_iter()
        .find(|p| duals.iter().all(|f| f.evaluate(p) == *p)))
}

/// `∫_{B*} dy/(1+xy)²` in closed form: `(σ−ρ)/((1+ρx)(1+σx))` on `[ρ,σ]`,
/// `1/(x(1+ρx))` on `[ρ,∞)`.
pub fn density_from_interval(iv: &ProjInterval) -> Result<RationalDensity> {
    if !iv.has_interior() {
        return Err(Error::DegenerateInterval);
    }
    if !iv.kernel_positive() {
        return Err(Error::KernelVanishes);
    }
    let rho = iv.lo.finite().expect("kernel_positive implies finite lo");
    let one = Rational::one();
    let rf = match &iv.hi {
        ProjPoint::Finite(sigma) => RationalFunction::new(
            Polynomial::constant(sigma - rho),
            &Polynomial::linear(one.clone(), rho.clone()) * &Polynomial::linear(one, sigma.clone()),
        )?,
        ProjPoint::Infinity => RationalFunction::new(
            Polynomial::one(),
            &Polynomial::x() * &Polynomial::linear(one, rho.clone()),
        )?,
    };
    RationalDensity::new(rf)
}

/// `1/(1+τx)²`.
pub fn fixed_point_density(tau: &Rational) -> Result<RationalDensity> {
    if *tau <= -Rational::one() {
        return Err(Error::PoleInUnitInterval);
    }
    let den = Polynomial::linear(Rational::one(), tau.clone()).pow(2);
    RationalDensity::new(RationalFunction::new(Polynomial::one(), den)?)
}

/// `p1² + p2² − p1·p2 − p1`.
pub fn conic_residual(p1: &Rational, p2: &Rational) -> Rational {
    p1 * p1 + p2 * p2 - p1 * p2 - p1
}

/// Rational point `(1, t)/(t² − t + 1)` of the conic, valid for `t > 1`.
pub fn conic_point(t: &Rational) -> Result<(Rational, Rational)> {
    if *t <= Rational::one() {
        return Err(Error::ParameterRange(format!("t = {t} must exceed 1")));
    }
    let q = t * t - t + Rational::one();
    Ok((q.recip(), t / &q))
}
