//! Serializable reports assembled from the exact pipeline.
//!
//! Rationals are always serialized as strings such as `"-1/16"`; floats
//! appear only as normalization constants.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::density::{
    closed_form_density, integrate_exact, lift_density, normalize, transfer_base, transfer_jump,
    Density, RationalDensity,
};
use crate::dual::{
    conic_point, conic_residual, density_from_interval, det_polynomial, det_system, solve_dual,
    symmetry_rows, validate_dual, DualCandidate, SymmetryRow,
};
use crate::exactnum::{
    rat, serde_rational, serde_rational_vec, Polynomial, Rational, RationalFunction,
};
use crate::moebius::MoebiusMap;
use crate::systems::{
    beta_admissible, build_branches, build_jump, validate_system, SystemSpec, TypeVector,
    ValidationReport,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchEntry {
    pub name: String,
    pub display: String,
    pub map: MoebiusMap,
}

impl BranchEntry {
    fn new(name: &str, map: &MoebiusMap) -> Self {
        Self {
            name: name.into(),
            display: map.to_string(),
            map: map.clone(),
        }
    }
}

/// A density as `num/den` with `den` primitive integer, plus its mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEntry {
    pub display: String,
    #[serde(with = "serde_rational_vec")]
    pub num: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub den: Vec<Rational>,
    pub normalizable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
}

impl DensityEntry {
    pub fn new(rf: &RationalFunction, norm: Option<f64>) -> Self {
        let (num, den) = rf.integer_form();
        Self {
            display: rf.factored_display().unwrap_or_else(|| rf.to_string()),
            num: num.coeffs().to_vec(),
            den: den.coeffs().to_vec(),
            normalizable: norm.is_some(),
            norm,
        }
    }

    pub fn rational_function(&self) -> Result<RationalFunction> {
        RationalFunction::new(
            Polynomial::new(self.num.clone()),
            Polynomial::new(self.den.clone()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedPiece {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
    pub density: DensityEntry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualStatus {
    /// A nondegenerate `M` passing every dual check.
    Found,
    /// `M` degenerates (linear branches); Lebesgue measure is invariant.
    Degenerate,
    None,
}

impl DualStatus {
    pub fn has_density(self) -> bool {
        !matches!(self, DualStatus::None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub spec: SystemSpec,
    pub validation: ValidationReport,
    pub inverse_branches_t: Vec<BranchEntry>,
    pub inverse_branches_s: Vec<BranchEntry>,
    pub symmetry_rows: Vec<SymmetryRow>,
    #[serde(with = "serde_rational")]
    pub det: Rational,
    #[serde(with = "serde_rational_vec")]
    pub det_polynomial: Vec<Rational>,
    pub det_polynomial_display: String,
    #[serde(with = "serde_rational")]
    pub conic_residual: Rational,
    pub dual_status: DualStatus,
    pub dual: Option<DualCandidate>,
    pub dual_validation: Option<ValidationReport>,
    pub density: Option<DensityEntry>,
    /// Zero invariance residual of the reported density.
    pub density_invariant: Option<bool>,
    /// Proportional to the closed form for the two self-dual types at
    /// `p = (1/3, 2/3)`; absent elsewhere.
    pub matches_closed_form: Option<bool>,
    pub lifted: Option<Vec<LiftedPiece>>,
    pub notes: Vec<String>,
}

fn mass(d: &(impl Density + ?Sized), notes: &mut Vec<String>, what: &str) -> Option<f64> {
    match normalize(d, &Rational::zero(), &Rational::one()) {
        Ok(Some(v)) => Some(v),
        Ok(None) => {
            notes.push(format!(
                "{what} is non-normalizable (infinite mass on [0,1])"
            ));
            None
        }
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

/// `h` rescaled by a positive constant so that numerator and denominator
/// have coprime integer coefficients.
fn primitive_density(h: RationalDensity) -> Result<RationalDensity> {
    let (num, _) = h.rf().integer_form();
    let (_, k) = num.primitive_part();
    RationalDensity::new(h.rf().scale(&k.abs()))
}

fn thirds(p1: &Rational, p2: &Rational) -> bool {
    *p1 == rat(1, 3) && *p2 == rat(2, 3)
}

/// The derived density of `S` and the dual data behind it.
struct Derived {
    status: DualStatus,
    dual: Option<DualCandidate>,
    dual_validation: Option<ValidationReport>,
    density: Option<RationalDensity>,
    notes: Vec<String>,
}

fn derive(spec: &SystemSpec) -> Result<Derived> {
    let js = build_jump(spec)?;
    let mut notes = Vec::new();
    let Some(cand) = solve_dual(&js)? else {
        notes.push("DET ≠ 0: no natural dual".into());
        return Ok(Derived {
            status: DualStatus::None,
            dual: None,
            dual_validation: None,
            density: None,
            notes,
        });
    };
    if cand.degenerate {
        let one = RationalDensity::constant_one();
        let (status, density) = if transfer_jump(&one, &js)? == one {
            notes.push("M degenerates (A·D = B²); Lebesgue measure is invariant".into());
            (DualStatus::Degenerate, Some(one))
        } else {
            notes.push("M degenerates (A·D = B²)".into());
            (DualStatus::None, None)
        };
        return Ok(Derived {
            status,
            dual: Some(cand),
            dual_validation: None,
            density,
            notes,
        });
    }
    let dv = validate_dual(&js, &cand);
    let mut density = None;
    let status = if dv.report.passed {
        let iv = cand
            .interval
            .as_ref()
            .expect("validated candidate has an interval");
        match density_from_interval(iv) {
            Ok(h) => {
                density = Some(primitive_density(h)?);
                DualStatus::Found
            }
            Err(e) => {
                notes.push(format!("dual interval unusable: {e}"));
                DualStatus::None
            }
        }
    } else {
        let failed: Vec<_> = dv.report.failures().map(|c| c.name.clone()).collect();
        notes.push(format!("candidate M fails: {}", failed.join(", ")));
        DualStatus::None
    };
    Ok(Derived {
        status,
        dual: Some(cand),
        dual_validation: Some(dv.report),
        density,
        notes,
    })
}

pub fn analyze(spec: &SystemSpec) -> Result<AnalyzeReport> {
    spec.check()?;
    let validation = validate_system(spec);
    let bs = build_branches(spec)?;
    let js = build_jump(spec)?;
    let det_poly = det_polynomial(&spec.p1, &spec.p2, spec.type_vector)?;
    let Derived {
        status,
        dual,
        dual_validation,
        density,
        mut notes,
    } = derive(spec)?;
    if !validation.passed {
        let failed: Vec<_> = validation.failures().map(|c| c.name.clone()).collect();
        notes.push(format!("system checks failed: {}", failed.join(", ")));
    }
    let mut density_invariant = None;
    let mut matches_closed_form = None;
    let mut lifted = None;
    let mut entry = None;
    if let Some(h) = &density {
        density_invariant = Some(transfer_jump(h, &js)? == *h);
        if thirds(&spec.p1, &spec.p2)
            && spec.type_vector.has_outer_increasing()
            && beta_admissible(&spec.beta)
        {
            let closed = closed_form_density(spec.type_vector, &spec.beta)?;
            matches_closed_form = Some(h.rf().ratio_to(closed.rf()).is_some());
        }
        let norm = mass(h, &mut notes, "h");
        entry = Some(DensityEntry::new(h.rf(), norm));
        let g = lift_density(h, spec)?;
        lifted = Some(
            g.cells()
                .into_iter()
                .zip(&g.pieces)
                .map(|((lo, hi), f)| {
                    let norm = integrate_exact(f, &lo, &hi).ok().flatten();
                    LiftedPiece {
                        lo,
                        hi,
                        density: DensityEntry::new(f, norm),
                    }
                })
                .collect(),
        );
    }
    Ok(AnalyzeReport {
        spec: spec.clone(),
        validation,
        inverse_branches_t: ["alpha", "beta", "gamma"]
            .iter()
            .zip(bs.inverse_branches())
            .map(|(n, m)| BranchEntry::new(n, m))
            .collect(),
        inverse_branches_s: ["alpha_beta", "beta", "gamma_beta"]
            .iter()
            .zip(js.branches())
            .map(|(n, m)| BranchEntry::new(n, m))
            .collect(),
        symmetry_rows: symmetry_rows(&js).to_vec(),
        det: det_system(&js),
        det_polynomial: det_poly.coeffs().to_vec(),
        det_polynomial_display: det_poly.to_string(),
        conic_residual: conic_residual(&spec.p1, &spec.p2),
        dual_status: status,
        dual,
        dual_validation,
        density: entry,
        density_invariant,
        matches_closed_form,
        lifted,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub spec: SystemSpec,
    pub passed: bool,
    pub dual_status: DualStatus,
    pub density: Option<DensityEntry>,
    /// `L h − h`, displayed; `"0"` on success.
    pub invariance_residual: Option<String>,
    pub dual_validation: Option<ValidationReport>,
    /// `L_T g = g` for the lifted density.
    pub base_fixed: Option<bool>,
    pub notes: Vec<String>,
}

pub fn verify(spec: &SystemSpec) -> Result<VerifyReport> {
    spec.check()?;
    let js = build_jump(spec)?;
    let Derived {
        status,
        dual_validation,
        density,
        mut notes,
        ..
    } = derive(spec)?;
    let Some(h) = density else {
        notes.push("no candidate density".into());
        return Ok(VerifyReport {
            spec: spec.clone(),
            passed: false,
            dual_status: status,
            density: None,
            invariance_residual: None,
            dual_validation,
            base_fixed: None,
            notes,
        });
    };
    let residual = &transfer_jump(&h, &js)?.into_rf() - h.rf();
    let base_fixed = if residual.is_zero() {
        let g = lift_density(&h, spec)?;
        Some(transfer_base(&g, spec)?.same_as(&g))
    } else {
        None
    };
    let dual_ok = dual_validation.as_ref().is_none_or(|r| r.passed);
    let norm = mass(&h, &mut notes, "h");
    Ok(VerifyReport {
        spec: spec.clone(),
        passed: residual.is_zero() && dual_ok && base_fixed == Some(true),
        dual_status: status,
        density: Some(DensityEntry::new(h.rf(), norm)),
        invariance_residual: Some(residual.to_string()),
        dual_validation,
        base_fixed,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootEntry {
    #[serde(with = "serde_rational")]
    pub root: Rational,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetScanReport {
    #[serde(with = "serde_rational")]
    pub p1: Rational,
    #[serde(with = "serde_rational")]
    pub p2: Rational,
    #[serde(rename = "type")]
    pub type_vector: TypeVector,
    /// Coefficients in ascending powers of β.
    #[serde(with = "serde_rational_vec")]
    pub coefficients: Vec<Rational>,
    pub display: String,
    pub identically_zero: bool,
    pub roots: Vec<RootEntry>,
    /// Roots in `(−1, 0) ∪ (0, 2]`.
    pub admissible_roots: Vec<RootEntry>,
    #[serde(with = "serde_rational")]
    pub conic_residual: Rational,
}

pub fn detscan(p1: &Rational, p2: &Rational, ty: TypeVector) -> Result<DetScanReport> {
    let probe = SystemSpec::unchecked(p1.clone(), p2.clone(), Rational::one(), ty);
    if !probe.partition_valid() {
        return Err(Error::InvalidSpec(format!(
            "partition: need 0 < p1 < p2 < 1, got ({p1}, {p2})"
        )));
    }
    let poly = det_polynomial(p1, p2, ty)?;
    let roots: Vec<RootEntry> = poly
        .rational_roots()
        .into_iter()
        .map(|(root, multiplicity)| RootEntry { root, multiplicity })
        .collect();
    let admissible_roots = roots
        .iter()
        .filter(|r| !r.root.is_zero() && beta_admissible(&r.root))
        .cloned()
        .collect();
    Ok(DetScanReport {
        p1: p1.clone(),
        p2: p2.clone(),
        type_vector: ty,
        coefficients: poly.coeffs().to_vec(),
        display: poly.to_string(),
        identically_zero: poly.is_zero(),
        roots,
        admissible_roots,
        conic_residual: conic_residual(p1, p2),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConicEntry {
    #[serde(with = "serde_rational")]
    pub t: Rational,
    #[serde(with = "serde_rational")]
    pub p1: Rational,
    #[serde(with = "serde_rational")]
    pub p2: Rational,
    #[serde(with = "serde_rational")]
    pub residual: Rational,
}

/// Conic points for each `t > 1`, sorted by `t` without duplicates; the
/// rejected `t ≤ 1` are returned separately.
pub fn conic_entries(ts: &[Rational]) -> (Vec<ConicEntry>, Vec<Rational>) {
    let mut ok: Vec<Rational> = Vec::new();
    let mut skipped = Vec::new();
    for t in ts {
        if *t > Rational::one() {
            ok.push(t.clone());
        } else {
            skipped.push(t.clone());
        }
    }
    ok.sort();
    ok.dedup();
    let entries = ok
        .into_iter()
        .map(|t| {
            let (p1, p2) = conic_point(&t).expect("t > 1");
            let residual = conic_residual(&p1, &p2);
            ConicEntry {
                t,
                p1,
                p2,
                residual,
            }
        })
        .collect();
    (entries, skipped)
}

/// Upper bound on the number of `t` values enumerated from a range.
pub const MAX_T_VALUES: usize = 100_000;

/// All `t = a/q ∈ (1, t_max]` with `q ≤ max_den`, ascending.
pub fn t_values_up_to(t_max: &Rational, max_den: u64) -> Result<Vec<Rational>> {
    if max_den == 0 {
        return Err(Error::InvalidConfig(
            "denominator bound must be positive".into(),
        ));
    }
    let mut out = Vec::new();
    for q in 1..=max_den {
        let qr = Rational::from_integer(q.into());
        let hi = (t_max * &qr).floor().to_integer();
        let mut a: num_bigint::BigInt = num_bigint::BigInt::from(q) + 1;
        while a <= hi {
            out.push(Rational::new(a.clone(), q.into()));
            if out.len() > MAX_T_VALUES {
                return Err(Error::InvalidConfig(format!(
                    "more than {MAX_T_VALUES} values of t"
                )));
            }
            a += 1;
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}
