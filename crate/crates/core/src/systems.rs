//! The three-branch map `T` and its jump transformation `S`.
//!
//! `T` has cells `[0,p1]`, `[p1,p2]`, `[p2,1]`. The outer branches are
//! linear and map onto the middle cell; the middle branch is fractional
//! linear with parameter `β` and maps onto `[0,1]`. Everything is stored as
//! inverse branches. `S` equals `T` on the middle cell and `T∘T` on the
//! outer cells, so its inverse branches are `V_α∘V_β`, `V_β`, `V_γ∘V_β`.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exactnum::{serde_rational, to_f64, Rational};
use crate::moebius::{MoebiusMap, RationalQuad};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Increasing => 1,
            Orientation::Decreasing => -1,
        }
    }

    fn symbol(self) -> char {
        match self {
            Orientation::Increasing => '+',
            Orientation::Decreasing => '-',
        }
    }
}

/// Orientation of the three branches of `T`, written `"+-+"` etc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TypeVector {
    pub alpha: Orientation,
    pub beta: Orientation,
    pub gamma: Orientation,
}

impl TypeVector {
    pub fn new(alpha: Orientation, beta: Orientation, gamma: Orientation) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Build from signs `±1`.
    pub fn from_signs(a: i8, b: i8, g: i8) -> Self {
        let o = |s: i8| {
            if s >= 0 {
                Orientation::Increasing
            } else {
                Orientation::Decreasing
            }
        };
        Self::new(o(a), o(b), o(g))
    }

    pub fn all() -> [TypeVector; 8] {
        let mut out = [Self::from_signs(1, 1, 1); 8];
        for (i, t) in out.iter_mut().enumerate() {
            let s = |bit: usize| if i & (1 << bit) == 0 { 1 } else { -1 };
            *t = Self::from_signs(s(2), s(1), s(0));
        }
        out
    }

    pub fn reversed(self) -> Self {
        Self::new(self.gamma, self.beta, self.alpha)
    }

    pub fn signs(self) -> [i8; 3] {
        [self.alpha.sign(), self.beta.sign(), self.gamma.sign()]
    }

    /// `[1,1,1]` and `[1,-1,1]`: the two types whose jump system has a natural dual.
    pub fn has_outer_increasing(self) -> bool {
        self.alpha == Orientation::Increasing && self.gamma == Orientation::Increasing
    }
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.alpha.symbol(),
            self.beta.symbol(),
            self.gamma.symbol()
        )
    }
}

impl FromStr for TypeVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 3 {
            return Err(Error::Parse(format!(
                "type must be 3 sign characters, got {s:?}"
            )));
        }
        let o = |c: char| match c {
            '+' => Ok(Orientation::Increasing),
            '-' => Ok(Orientation::Decreasing),
            _ => Err(Error::Parse(format!("bad sign {c:?} in type {s:?}"))),
        };
        Ok(Self::new(o(chars[0])?, o(chars[1])?, o(chars[2])?))
    }
}

impl Serialize for TypeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TypeVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Full parameterization of `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(with = "serde_rational")]
    pub p1: Rational,
    #[serde(with = "serde_rational")]
    pub p2: Rational,
    #[serde(with = "serde_rational")]
    pub beta: Rational,
    #[serde(rename = "type")]
    pub type_vector: TypeVector,
    /// Admit β outside `(-1, 2]`.
    #[serde(
        default,
        rename = "override",
        skip_serializing_if = "std::ops::Not::not"
    )]
    pub allow_out_of_range: bool,
}

impl SystemSpec {
    /// Builds and checks a spec with the default β gate.
    pub fn new(
        p1: Rational,
        p2: Rational,
        beta: Rational,
        type_vector: TypeVector,
    ) -> Result<Self> {
        let s = Self::unchecked(p1, p2, beta, type_vector);
        s.check()?;
        Ok(s)
    }

    pub fn unchecked(p1: Rational, p2: Rational, beta: Rational, type_vector: TypeVector) -> Self {
        Self {
            p1,
            p2,
            beta,
            type_vector,
            allow_out_of_range: false,
        }
    }

    /// The partition `(1/3, 2/3)` used throughout the worked examples.
    pub fn thirds(beta: Rational, type_vector: TypeVector) -> Result<Self> {
        Self::new(
            Rational::new(1.into(), 3.into()),
            Rational::new(2.into(), 3.into()),
            beta,
            type_vector,
        )
    }

    pub fn with_override(mut self) -> Self {
        self.allow_out_of_range = true;
        self
    }

    pub fn partition_valid(&self) -> bool {
        self.p1.is_positive() && self.p1 < self.p2 && self.p2 < Rational::one()
    }

    pub fn beta_in_range(&self) -> bool {
        beta_admissible(&self.beta)
    }

    pub fn check(&self) -> Result<()> {
        if !self.partition_valid() {
            return Err(Error::InvalidSpec(format!(
                "partition: need 0 < p1 < p2 < 1, got p1 = {}, p2 = {}",
                self.p1, self.p2
            )));
        }
        if self.beta <= -Rational::one() {
            return Err(Error::InvalidSpec(format!(
                "denominator vanishes at x=1 or inside [0,1] for beta = {}",
                self.beta
            )));
        }
        if !self.allow_out_of_range && !self.beta_in_range() {
            return Err(Error::InvalidSpec(format!(
                "beta = {} outside (-1, 2] (use the override flag to explore)",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> [(Rational, Rational); 3] {
        [
            (Rational::zero(), self.p1.clone()),
            (self.p1.clone(), self.p2.clone()),
            (self.p2.clone(), Rational::one()),
        ]
    }
}

pub fn beta_admissible(beta: &Rational) -> bool {
    *beta > -Rational::one() && *beta <= Rational::from_integer(2.into())
}

/// Inverse branches of `T` in their literal formula scaling.
fn formula_branches(spec: &SystemSpec) -> [RationalQuad; 3] {
    let (p1, p2, b) = (&spec.p1, &spec.p2, &spec.beta);
    let one = Rational::one();
    let zero = Rational::zero();
    let width = p2 - p1;
    let alpha = match spec.type_vector.alpha {
        Orientation::Increasing => {
            RationalQuad::new(-(p1 * p1), p1.clone(), width.clone(), zero.clone())
        }
        Orientation::Decreasing => {
            RationalQuad::new(p1 * p2, -p1.clone(), width.clone(), zero.clone())
        }
    };
    let beta = match spec.type_vector.beta {
        Orientation::Increasing => {
            RationalQuad::new(p1.clone(), &width + p2 * b, one.clone(), b.clone())
        }
        Orientation::Decreasing => {
            RationalQuad::new(p2.clone(), -&width + p1 * b, one.clone(), b.clone())
        }
    };
    let gamma = match spec.type_vector.gamma {
        Orientation::Increasing => RationalQuad::new(p2 * p2 - p1, &one - p2, width.clone(), zero),
        Orientation::Decreasing => RationalQuad::new(p2 * (&one - p1), p2 - &one, width, zero),
    };
    [alpha, beta, gamma]
}

/// Inverse branches of `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchSet {
    pub spec: SystemSpec,
    /// `[p1,p2] → [0,p1]`
    pub inv_alpha: MoebiusMap,
    /// `[0,1] → [p1,p2]`
    pub inv_beta: MoebiusMap,
    /// `[p1,p2] → [p2,1]`
    pub inv_gamma: MoebiusMap,
    formula: [RationalQuad; 3],
}

impl BranchSet {
    pub fn cells(&self) -> [(Rational, Rational); 3] {
        self.spec.cells()
    }

    /// Domain of each inverse branch (the image cell of the forward branch).
    pub fn ranges(&self) -> [(Rational, Rational); 3] {
        let mid = (self.spec.p1.clone(), self.spec.p2.clone());
        [mid.clone(), (Rational::zero(), Rational::one()), mid]
    }

    pub fn inverse_branches(&self) -> [&MoebiusMap; 3] {
        [&self.inv_alpha, &self.inv_beta, &self.inv_gamma]
    }

    pub fn formula(&self) -> &[RationalQuad; 3] {
        &self.formula
    }
}

pub fn build_branches(spec: &SystemSpec) -> Result<BranchSet> {
    spec.check()?;
    let formula = formula_branches(spec);
    let [a, b, g] = [0, 1, 2].map(|i| formula[i].to_map());
    Ok(BranchSet {
        spec: spec.clone(),
        inv_alpha: a?,
        inv_beta: b?,
        inv_gamma: g?,
        formula,
    })
}

/// Inverse branches of the jump transformation `S`; each maps `[0,1]` onto a cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpSystem {
    pub spec: SystemSpec,
    pub inv_ab: MoebiusMap,
    pub inv_b: MoebiusMap,
    pub inv_gb: MoebiusMap,
    formula: [RationalQuad; 3],
}

impl JumpSystem {
    pub fn branches(&self) -> [&MoebiusMap; 3] {
        [&self.inv_ab, &self.inv_b, &self.inv_gb]
    }

    /// Branches as plain products of the formula matrices of `T`; entries
    /// are affine in β with β-independent scaling.
    pub fn formula(&self) -> &[RationalQuad; 3] {
        &self.formula
    }

    pub fn cells(&self) -> [(Rational, Rational); 3] {
        self.spec.cells()
    }
}

pub fn build_jump(spec: &SystemSpec) -> Result<JumpSystem> {
    let bs = build_branches(spec)?;
    let [fa, fb, fg] = &bs.formula;
    Ok(JumpSystem {
        spec: spec.clone(),
        inv_ab: bs.inv_alpha.compose(&bs.inv_beta),
        inv_b: bs.inv_beta.clone(),
        inv_gb: bs.inv_gamma.compose(&bs.inv_beta),
        formula: [fa.compose(fb), fb.clone(), fg.compose(fb)],
    })
}

/// One line of a validation report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub(crate) fn push(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn quad_eval(q: &RationalQuad, x: &Rational) -> Option<Rational> {
    let den = &q.d0 + &q.d1 * x;
    if den.is_zero() {
        None
    } else {
        Some((&q.n0 + &q.n1 * x) / den)
    }
}

/// Checks the standing assumptions on `spec`: partition, β gate, and for
/// each inverse branch its endpoint images, orientation and denominator sign.
pub fn validate_system(spec: &SystemSpec) -> ValidationReport {
    let mut rep = ValidationReport {
        passed: true,
        checks: Vec::new(),
    };
    if !spec.partition_valid() {
        rep.push(
            "partition",
            false,
            format!(
                "need 0 < p1 < p2 < 1, got p1 = {}, p2 = {}",
                spec.p1, spec.p2
            ),
        );
        return rep;
    }
    rep.push(
        "partition",
        true,
        format!("0 < {} < {} < 1", spec.p1, spec.p2),
    );
    let gate = spec.beta_in_range();
    rep.push(
        "beta range",
        gate || (spec.allow_out_of_range && spec.beta > -Rational::one()),
        if gate {
            format!("beta = {} in (-1, 2]", spec.beta)
        } else {
            format!("beta = {} outside (-1, 2]", spec.beta)
        },
    );

    let formula = formula_branches(spec);
    let names = ["inv_alpha", "inv_beta", "inv_gamma"];
    let mid = (spec.p1.clone(), spec.p2.clone());
    let unit = (Rational::zero(), Rational::one());
    let domains = [mid.clone(), unit, mid];
    let cells = spec.cells();
    let signs = spec.type_vector.signs();
    for i in 0..3 {
        let q = &formula[i];
        let (lo, hi) = &domains[i];
        let name = names[i];
        // Denominator is affine, so its sign on [lo,hi] is decided at the ends.
        let den_lo = &q.d0 + &q.d1 * lo;
        let den_hi = &q.d0 + &q.d1 * hi;
        let den_ok = den_lo.is_positive() && den_hi.is_positive();
        let den_detail = if den_ok {
            format!("denominator positive on [{lo},{hi}]")
        } else if den_hi.is_zero() {
            format!("denominator vanishes at x={hi}")
        } else if den_lo.is_zero() {
            format!("denominator vanishes at x={lo}")
        } else {
            format!("denominator changes sign on [{lo},{hi}]")
        };
        rep.push(format!("{name} denominator"), den_ok, den_detail);
        if !den_ok {
            continue;
        }
        let det = q.determinant();
        let sign_ok = if signs[i] > 0 {
            det.is_positive()
        } else {
            det.is_negative()
        };
        rep.push(
            format!("{name} orientation"),
            sign_ok,
            format!(
                "declared {}, determinant {}",
                if signs[i] > 0 { "+" } else { "-" },
                det
            ),
        );
        let (a, b) = (quad_eval(q, lo), quad_eval(q, hi));
        let (c0, c1) = &cells[i];
        let expected = if signs[i] > 0 { (c0, c1) } else { (c1, c0) };
        let ends_ok = a.as_ref() == Some(expected.0) && b.as_ref() == Some(expected.1);
        let show = |v: &Option<Rational>| v.as_ref().map_or("inf".to_string(), |r| r.to_string());
        rep.push(
            format!("{name} endpoints"),
            ends_ok,
            format!("{lo}↦{}, {hi}↦{}", show(&a), show(&b)),
        );
    }
    rep
}

/// The `ψ`-conjugate of a spec and whether its β left the admissible range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reflected {
    pub spec: SystemSpec,
    pub out_of_range: bool,
}

/// Conjugation by `ψ(x) = 1 − x`: partition `(1−p2, 1−p1)`, type reversed,
/// `β′ = −β/(1+β)`.
pub fn reflect_system(spec: &SystemSpec) -> Result<Reflected> {
    let one = Rational::one();
    let denom = &one + &spec.beta;
    if denom.is_zero() {
        return Err(Error::InvalidSpec("beta = -1 has no reflection".into()));
    }
    let beta = -&spec.beta / denom;
    let out_of_range = !beta_admissible(&beta);
    let reflected = SystemSpec {
        p1: &one - &spec.p2,
        p2: &one - &spec.p1,
        beta,
        type_vector: spec.type_vector.reversed(),
        allow_out_of_range: spec.allow_out_of_range || out_of_range,
    };
    Ok(Reflected {
        spec: reflected,
        out_of_range,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    T,
    S,
}

impl FromStr for MapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(MapKind::T),
            "S" | "s" => Ok(MapKind::S),
            _ => Err(Error::Parse(format!("map must be T or S, got {s:?}"))),
        }
    }
}

/// Index of the cell containing `x`: `x = p1` is middle, `x = p2` is right.
fn cell_of<T: PartialOrd>(x: &T, p1: &T, p2: &T) -> usize {
    if x < p1 {
        0
    } else if x < p2 {
        1
    } else {
        2
    }
}

/// Forward branches of `T`, ready for exact evaluation.
#[derive(Clone, Debug)]
pub struct ForwardMaps {
    spec: SystemSpec,
    forward: [MoebiusMap; 3],
}

impl ForwardMaps {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        let bs = build_branches(spec)?;
        Ok(Self {
            spec: spec.clone(),
            forward: bs.inverse_branches().map(|v| v.invert()),
        })
    }

    pub fn t(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() || *x > Rational::one() {
            return Err(Error::Domain(x.to_string()));
        }
        let i = cell_of(x, &self.spec.p1, &self.spec.p2);
        self.forward[i]
            .eval(x)
            .ok_or_else(|| Error::Internal(format!("forward branch pole at {x}")))
    }

    pub fn s(&self, x: &Rational) -> Result<Rational> {
        let y = self.t(x)?;
        match cell_of(x, &self.spec.p1, &self.spec.p2) {
            1 => Ok(y),
            _ => self.t(&y),
        }
    }

    pub fn apply(&self, which: MapKind, x: &Rational) -> Result<Rational> {
        match which {
            MapKind::T => self.t(x),
            MapKind::S => self.s(x),
        }
    }
}

/// Exact forward evaluation of `T` or `S` at `x ∈ [0,1]`.
pub fn forward_map(spec: &SystemSpec, which: MapKind, x: &Rational) -> Result<Rational> {
    ForwardMaps::new(spec)?.apply(which, x)
}

/// Double-precision forward dynamics for orbit simulation.
#[derive(Clone, Debug)]
pub struct FloatDynamics {
    p1: f64,
    p2: f64,
    forward: [[f64; 4]; 3],
}

impl FloatDynamics {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        let fm = ForwardMaps::new(spec)?;
        Ok(Self {
            p1: to_f64(&spec.p1),
            p2: to_f64(&spec.p2),
            forward: fm.forward.clone().map(|f| f.f64_coeffs()),
        })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    #[inline]
    pub fn cell(&self, x: f64) -> usize {
        cell_of(&x, &self.p1, &self.p2)
    }

    #[inline]
    pub fn t(&self, x: f64) -> f64 {
        let [n0, n1, d0, d1] = self.forward[self.cell(x)];
        (n0 + n1 * x) / (d0 + d1 * x)
    }

    #[inline]
    pub fn s(&self, x: f64) -> f64 {
        let y = self.t(x);
        if self.cell(x) == 1 {
            y
        } else {
            self.t(y.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn apply(&self, which: MapKind, x: f64) -> f64 {
        match which {
            MapKind::T => self.t(x),
            MapKind::S => self.s(x),
        }
    }
}

/// Fixed points of `S` at `0` or `1` where the inverse branch has unit
/// derivative. Orbits linger near such points and the invariant measure is
/// typically infinite.
pub fn indifferent_fixed_points(js: &JumpSystem) -> Vec<Rational> {
    let mut out = Vec::new();
    for v in js.branches() {
        for e in [Rational::zero(), Rational::one()] {
            if v.eval(&e).as_ref() == Some(&e) {
                if let Some(slope) = v.jacobian().eval(&e) {
                    if slope >= Rational::one() && !out.contains(&e) {
                        out.push(e.clone());
                    }
                }
            }
        }
    }
    out
}
