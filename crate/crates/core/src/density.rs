//! Invariant densities as exact rational functions.
//!
//! The transfer operator of a system with inverse branches `V_i` is
//! `(L h)(x) = Σ h(V_i x)·|V_i′(x)|`; `h` is invariant iff `L h = h`, which is
//! decided here as a rational-function identity. Densities of `S` lift to
//! densities of `T`:
//!
//! ```text
//! g = h                                    on [0,p1] and [p2,1]
//! g = h + h(V_α x)·ω_α(x) + h(V_γ x)·ω_γ(x)  on [p1,p2]
//! ```
//!
//! (`V_α`, `V_γ` take values in the outer cells, where `g = h`, so using `h`
//! in all three terms is the same as mixing `g` and `h`.)
//!
//! Integrals are computed from partial fractions in floating point and
//! cross-checked by adaptive quadrature.

use num_traits::{One, Signed, Zero};

use crate::exactnum::{rf_compose_moebius, to_f64, Polynomial, Rational, RationalFunction};
use crate::moebius::MoebiusMap;
use crate::quad;
use crate::systems::{build_branches, build_jump, JumpSystem, Orientation, SystemSpec, TypeVector};
use crate::{Error, Result};

/// Agreement required between closed-form and quadrature integrals.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// `true` if `rf` has no zero or pole in `(a, b)` and is positive there.
fn positive_on(rf: &RationalFunction, a: &Rational, b: &Rational) -> bool {
    if rf.is_zero() {
        return false;
    }
    if rf.num().count_real_roots_open(a, b) > 0 || rf.den().count_real_roots_open(a, b) > 0 {
        return false;
    }
    let mid = (a + b) / Rational::from_integer(2.into());
    rf.eval(&mid).is_some_and(|v| v.is_positive())
}

/// A density on `[0,1]`: positive on `(0,1)`, poles only at the endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalDensity {
    rf: RationalFunction,
}

impl RationalDensity {
    pub fn new(rf: RationalFunction) -> Result<Self> {
        if !positive_on(&rf, &Rational::zero(), &Rational::one()) {
            return Err(Error::NotPositive("(0,1)".into()));
        }
        Ok(Self { rf })
    }

    pub fn constant_one() -> Self {
        Self {
            rf: RationalFunction::one(),
        }
    }

    pub fn rf(&self) -> &RationalFunction {
        &self.rf
    }

    pub fn into_rf(self) -> RationalFunction {
        self.rf
    }
}

/// A density on `[0,1]` given by one rational function per cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseDensity {
    pub p1: Rational,
    pub p2: Rational,
    pub pieces: [RationalFunction; 3],
}

impl PiecewiseDensity {
    pub fn new(p1: Rational, p2: Rational, pieces: [RationalFunction; 3]) -> Result<Self> {
        let cells = [
            (Rational::zero(), p1.clone()),
            (p1.clone(), p2.clone()),
            (p2.clone(), Rational::one()),
        ];
        for ((a, b), rf) in cells.iter().zip(&pieces) {
            if !positive_on(rf, a, b) {
                return Err(Error::NotPositive(format!("({a},{b})")));
            }
        }
        Ok(Self { p1, p2, pieces })
    }

    pub fn cells(&self) -> [(Rational, Rational); 3] {
        [
            (Rational::zero(), self.p1.clone()),
            (self.p1.clone(), self.p2.clone()),
            (self.p2.clone(), Rational::one()),
        ]
    }

    /// Value at a point of `[0,1]`, right-closed at `p1` and `p2`.
    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let i = if *x < self.p1 {
            0
        } else if *x < self.p2 {
            1
        } else {
            2
        };
        self.pieces[i].eval(x)
    }

    /// Piecewise exact equality.
    pub fn same_as(&self, other: &Self) -> bool {
        self.p1 == other.p1
            && self.p2 == other.p2
            && self
                .pieces
                .iter()
                .zip(&other.pieces)
                .all(|(a, b)| crate::exactnum::rf_equal(a, b))
    }
}

/// Anything that can be integrated cell by cell over `[0,1]`.
pub trait Density {
    /// `(a, b, f)` with `f` the density on `[a, b]`; cells cover `[0,1]`.
    fn segments(&self) -> Vec<(Rational, Rational, &RationalFunction)>;
}

impl Density for RationalDensity {
    fn segments(&self) -> Vec<(Rational, Rational, &RationalFunction)> {
        vec![(Rational::zero(), Rational::one(), &self.rf)]
    }
}

impl Density for PiecewiseDensity {
    fn segments(&self) -> Vec<(Rational, Rational, &RationalFunction)> {
        self.cells()
            .into_iter()
            .zip(&self.pieces)
            .map(|((a, b), f)| (a, b, f))
            .collect()
    }
}

fn transfer_term(h: &RationalFunction, v: &MoebiusMap) -> Result<RationalFunction> {
    Ok(&rf_compose_moebius(h, v)? * &v.jacobian())
}

/// `Σ h(V_i x)·ω_i(x)` over the three branches of `S`.
pub fn transfer_jump(h: &RationalDensity, js: &JumpSystem) -> Result<RationalDensity> {
    let mut acc = RationalFunction::zero();
    for v in js.branches() {
        acc = &acc + &transfer_term(h.rf(), v)?;
    }
    RationalDensity::new(acc)
}

/// `L_S h − h`; zero exactly when `h` is `S`-invariant.
pub fn invariance_residual(h: &RationalDensity, js: &JumpSystem) -> Result<RationalFunction> {
    Ok(&transfer_jump(h, js)?.rf - h.rf())
}

/// Closed-form densities for types `[1,1,1]` and `[1,−1,1]` at `p = (1/3, 2/3)`:
/// `1/((2−β+3βx)(2+3βx))` and `1/((4+β+3βx)(4+3βx))`.
pub fn closed_form_density(ty: TypeVector, beta: &Rational) -> Result<RationalDensity> {
    if !crate::systems::beta_admissible(beta) {
        return Err(Error::InvalidSpec(format!("beta = {beta} outside (-1, 2]")));
    }
    if !ty.has_outer_increasing() {
        return Err(Error::NoNaturalDual(ty.to_string()));
    }
    let c = |n: i64| Rational::from_integer(n.into());
    let three_b = &c(3) * beta;
    let (f1, f2) = match ty.beta {
        Orientation::Increasing => (
            Polynomial::linear(c(2) - beta, three_b.clone()),
            Polynomial::linear(c(2), three_b),
        ),
        Orientation::Decreasing => (
            Polynomial::linear(c(4) + beta, three_b.clone()),
            Polynomial::linear(c(4), three_b),
        ),
    };
    RationalDensity::new(RationalFunction::new(Polynomial::one(), &f1 * &f2)?)
}

/// The `T`-invariant density obtained from an `S`-invariant `h`.
pub fn lift_density(h: &RationalDensity, spec: &SystemSpec) -> Result<PiecewiseDensity> {
    let js = build_jump(spec)?;
    if !invariance_residual(h, &js)?.is_zero() {
        return Err(Error::NotInvariant);
    }
    let bs = build_branches(spec)?;
    let hf = h.rf();
    let middle = &(hf + &transfer_term(hf, &bs.inv_alpha)?) + &transfer_term(hf, &bs.inv_gamma)?;
    PiecewiseDensity::new(
        spec.p1.clone(),
        spec.p2.clone(),
        [hf.clone(), middle, hf.clone()],
    )
}

/// Transfer operator of `T` applied cell by cell.
pub fn transfer_base(g: &PiecewiseDensity, spec: &SystemSpec) -> Result<PiecewiseDensity> {
    let bs = build_branches(spec)?;
    let [left, mid, right] = &g.pieces;
    let via_beta = transfer_term(mid, &bs.inv_beta)?;
    let middle =
        &(&via_beta + &transfer_term(left, &bs.inv_alpha)?) + &transfer_term(right, &bs.inv_gamma)?;
    PiecewiseDensity::new(
        spec.p1.clone(),
        spec.p2.clone(),
        [via_beta.clone(), middle, via_beta],
    )
}

/// Partial-fraction antiderivative of a rational function whose
/// denominator splits over `Q`.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    poly: Vec<f64>,
    /// `(root, power, coefficient)` for `c/(x − r)^j`.
    terms: Vec<(f64, u32, f64)>,
    exact_terms: Vec<(Rational, u32, Rational)>,
}

impl ClosedForm {
    pub fn new(rf: &RationalFunction) -> Option<Self> {
        let den = rf.den();
        let roots = den.rational_roots();
        let split: usize = roots.iter().map(|(_, m)| m).sum();
        if Some(split) != den.degree() {
            return None;
        }
        let (q, r) = rf.num().div_rem(den);
        let mut exact_terms = Vec::new();
        for (root, mult) in &roots {
            let lin = Polynomial::linear(-root.clone(), Rational::one());
            let (cof, rem) = den.div_rem(&lin.pow(*mult as u32));
            debug_assert!(rem.is_zero());
            let mut f = RationalFunction::new(r.clone(), cof).ok()?;
            let mut fact = Rational::one();
            for k in 0..*mult {
                if k > 0 {
                    fact *= Rational::from_integer(k.into());
                }
                let c = f.eval(root)? / &fact;
                if !c.is_zero() {
                    exact_terms.push((root.clone(), (*mult - k) as u32, c));
                }
                f = f.derivative();
            }
        }
        Some(Self {
            poly: q.integral().coeffs().iter().map(to_f64).collect(),
            terms: exact_terms
                .iter()
                .map(|(r, j, c)| (to_f64(r), *j, to_f64(c)))
                .collect(),
            exact_terms,
        })
    }

    /// Partial-fraction terms `c/(x − r)^j` as `(r, j, c)`.
    pub fn terms(&self) -> &[(Rational, u32, Rational)] {
        &self.exact_terms
    }

    /// `∫_a^b`, assuming no root lies in `[a, b]`.
    pub fn definite(&self, a: f64, b: f64) -> f64 {
        let p = |x: f64| self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let mut v = p(b) - p(a);
        for &(r, j, c) in &self.terms {
            if j == 1 {
                v += c * ((b - r).abs() / (a - r).abs()).ln();
            } else {
                let e = 1 - j as i32;
                v += c / e as f64 * ((b - r).powi(e) - (a - r).powi(e));
            }
        }
        v
    }
}

#[derive(Clone, Debug)]
enum Integrator {
    Closed(ClosedForm),
    Numeric(RationalFunction),
}

impl Integrator {
    fn new(rf: &RationalFunction) -> Self {
        match ClosedForm::new(rf) {
            Some(c) => Integrator::Closed(c),
            None => Integrator::Numeric(rf.clone()),
        }
    }

    fn definite(&self, a: f64, b: f64) -> f64 {
        match self {
            Integrator::Closed(c) => c.definite(a, b),
            Integrator::Numeric(rf) => quad::integrate(|x| rf.eval_f64(x), a, b, 1e-14),
        }
    }
}

/// `∫_a^b f`, `None` when the integral diverges at an endpoint pole.
pub fn integrate_exact(rf: &RationalFunction, a: &Rational, b: &Rational) -> Result<Option<f64>> {
    if a >= b {
        return Ok(Some(0.0));
    }
    if rf.den().count_real_roots_open(a, b) > 0 {
        let at = rf
            .den()
            .rational_roots()
            .into_iter()
            .map(|(r, _)| r)
            .find(|r| r > a && r < b)
            .map_or_else(|| "an irrational point".to_string(), |r| r.to_string());
        return Err(Error::PoleInterior(at));
    }
    if rf.den().eval(a).is_zero() || rf.den().eval(b).is_zero() {
        return Ok(None);
    }
    let (af, bf) = (to_f64(a), to_f64(b));
    let closed = Integrator::new(rf).definite(af, bf);
    let numeric = quad::integrate(|x| rf.eval_f64(x), af, bf, 1e-13);
    if (closed - numeric).abs() > QUADRATURE_TOLERANCE * closed.abs().max(1.0) {
        return Err(Error::QuadratureMismatch { closed, numeric });
    }
    Ok(Some(closed))
}

/// Total mass of `d` on `[lo, hi] ⊆ [0,1]`; `None` for a σ-finite density.
pub fn normalize<D: Density + ?Sized>(d: &D, lo: &Rational, hi: &Rational) -> Result<Option<f64>> {
    let mut total = 0.0;
    for (a, b, f) in d.segments() {
        let a = a.max(lo.clone());
        let b = b.min(hi.clone());
        if a >= b {
            continue;
        }
        match integrate_exact(f, &a, &b)? {
            Some(v) => total += v,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

/// Normalized CDF of a density on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct DensityCdf {
    lo: f64,
    hi: f64,
    total: f64,
    /// `(a, b, mass of earlier segments, integrator)`
    segments: Vec<(f64, f64, f64, Integrator)>,
}

impl DensityCdf {
    pub fn new<D: Density + ?Sized>(d: &D, lo: &Rational, hi: &Rational) -> Result<Self> {
        let total = normalize(d, lo, hi)?.ok_or(Error::NotNormalizable)?;
        let mut segments = Vec::new();
        let mut before = 0.0;
        for (a, b, f) in d.segments() {
            let a = a.max(lo.clone());
            let b = b.min(hi.clone());
            if a >= b {
                continue;
            }
            let (af, bf) = (to_f64(&a), to_f64(&b));
            let it = Integrator::new(f);
            let mass = it.definite(af, bf);
            segments.push((af, bf, before, it));
            before += mass;
        }
        Ok(Self {
            lo: to_f64(lo),
            hi: to_f64(hi),
            total,
            segments,
        })
    }

    pub fn norm(&self) -> f64 {
        self.total
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let seg = self
            .segments
            .iter()
            .find(|s| x <= s.1)
            .unwrap_or_else(|| self.segments.last().expect("nonempty domain"));
        let (a, _, before, it) = seg;
        ((before + it.definite(*a, x)) / self.total).clamp(0.0, 1.0)
    }
}

/// `F(x) = ∫_lo^x d / ∫_lo^hi d`.
pub fn cdf_eval(cdf: &DensityCdf, x: f64) -> f64 {
    cdf.eval(x)
}
