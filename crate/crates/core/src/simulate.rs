//! Floating-point orbits of `T` and `S`, histograms and KS distances.
//!
//! Agreement between an orbit histogram and a density is evidence that the
//! density is invariant *and* that the orbit is typical; it is never a proof.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::DensityCdf;
use crate::exactnum::Rational;
use crate::systems::{
    build_jump, indifferent_fixed_points, FloatDynamics, ForwardMaps, MapKind, SystemSpec,
};
use crate::{Error, Result};

/// Header of the histogram CSV.
pub const CSV_HEADER: [&str; 4] = ["bin_lo", "bin_hi", "empirical", "analytic"];

/// Number of exact iterates inspected when classifying the starting point.
const EXACT_PROBE: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConfig {
    pub spec: SystemSpec,
    pub map: MapKind,
    /// Starting point; drawn from `seed` when absent.
    pub x0: Option<f64>,
    /// Total number of iterates, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub bins: usize,
}

impl OrbitConfig {
    pub fn new(
        spec: SystemSpec,
        map: MapKind,
        iterations: usize,
        burn_in: usize,
        seed: u64,
    ) -> Self {
        Self {
            spec,
            map,
            x0: None,
            iterations,
            burn_in,
            seed,
            bins: 100,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.bins < 10 {
            return Err(Error::InvalidConfig(format!("bins = {} < 10", self.bins)));
        }
        if let Some(x) = self.x0 {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidConfig(format!("x0 = {x} not in (0,1)")));
            }
        }
        Ok(())
    }

    /// The starting point actually used.
    pub fn start(&self) -> f64 {
        self.x0.unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            loop {
                let x: f64 = rng.random();
                if x > 0.0 {
                    return x;
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub x0: f64,
    /// Iterates after burn-in.
    pub samples: Vec<f64>,
    /// Iterates that left `[0,1]` by rounding and were clamped.
    pub escapes: usize,
    /// The exact orbit of `x0` returns to `x0`.
    pub periodic: bool,
    /// The exact orbit of `x0` meets `0`, `p1`, `p2` or `1`.
    pub hits_boundary: bool,
    /// The system has an indifferent fixed point at an endpoint.
    pub slow_mixing: bool,
}

fn classify_start(spec: &SystemSpec, map: MapKind, x0: f64) -> Result<(bool, bool)> {
    let fm = ForwardMaps::new(spec)?;
    let start =
        BigRational::from_float(x0).ok_or_else(|| Error::InvalidConfig(format!("x0 = {x0}")))?;
    let boundary = [
        Rational::zero(),
        spec.p1.clone(),
        spec.p2.clone(),
        Rational::one(),
    ];
    let mut x = start.clone();
    let (mut periodic, mut hits) = (false, boundary.contains(&x));
    for _ in 0..EXACT_PROBE {
        x = fm.apply(map, &x)?;
        hits |= boundary.contains(&x);
        if x == start {
            periodic = true;
            break;
        }
    }
    Ok((periodic, hits))
}

pub fn run_orbit(cfg: &OrbitConfig) -> Result<Orbit> {
    cfg.check()?;
    let dyns = FloatDynamics::new(&cfg.spec)?;
    let x0 = cfg.start();
    let (periodic, hits_boundary) = classify_start(&cfg.spec, cfg.map, x0)?;
    let slow_mixing = !indifferent_fixed_points(&build_jump(&cfg.spec)?).is_empty();
    let mut samples = Vec::with_capacity(cfg.iterations - cfg.burn_in);
    let mut escapes = 0;
    let mut x = x0;
    for i in 0..cfg.iterations {
        let mut y = dyns.apply(cfg.map, x);
        if !(0.0..=1.0).contains(&y) {
            escapes += 1;
            y = if y.is_nan() { 0.5 } else { y.clamp(0.0, 1.0) };
        }
        x = y;
        if i >= cfg.burn_in {
            samples.push(x);
        }
    }
    Ok(Orbit {
        x0,
        samples,
        escapes,
        periodic,
        hits_boundary,
        slow_mixing,
    })
}

/// Runs independent configurations concurrently, results in input order.
pub fn run_orbits(cfgs: &[OrbitConfig]) -> Result<Vec<Orbit>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || run_orbit(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|_| Error::Internal("orbit thread panicked".into()))?
            })
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub edges: Vec<f64>,
    pub empirical: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    pub samples: usize,
    /// Samples outside a restricted comparison domain.
    pub discarded: usize,
    pub escapes: usize,
}

impl HistogramReport {
    /// Rows `bin_lo, bin_hi, empirical, analytic` in 12 significant digits.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        (0..self.empirical.len())
            .map(|i| {
                [
                    format_sig12(self.edges[i]),
                    format_sig12(self.edges[i + 1]),
                    format_sig12(self.empirical[i]),
                    self.analytic
                        .as_ref()
                        .map_or_else(String::new, |a| format_sig12(a[i])),
                ]
            })
            .collect()
    }
}

/// Equal-width histogram on the analytic domain (default `[0,1]`);
/// samples outside a restricted domain are discarded before binning.
pub fn histogram(
    samples: &[f64],
    bins: usize,
    analytic: Option<&DensityCdf>,
) -> Result<HistogramReport> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no samples".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("zero bins".into()));
    }
    let (lo, hi) = analytic.map_or((0.0, 1.0), |c| c.domain());
    let kept: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|x| (lo..=hi).contains(x))
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidConfig("no samples inside the domain".into()));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &x in &kept {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = kept.len() as f64;
    let empirical = counts.iter().map(|&c| c as f64 / n).collect();
    let analytic_mass = analytic.map(|c| {
        edges
            .windows(2)
            .map(|w| c.eval(w[1]) - c.eval(w[0]))
            .collect()
    });
    let ks = analytic.map(|c| ks_distance(&kept, |x| c.eval(x)));
    Ok(HistogramReport {
        edges,
        empirical,
        analytic: analytic_mass,
        ks,
        samples: kept.len(),
        discarded: samples.len() - kept.len(),
        escapes: 0,
    })
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`, including
/// left limits at the sample points (so step-function `F` are handled).
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d
            .max((upto - cdf(v)).abs())
            .max((below - cdf(v.next_down())).abs());
        i = j;
    }
    d
}

/// Decimal rendering with 12 significant digits, no exponent.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            x.to_string()
        };
    }
    let sci = format!("{:.11e}", x.abs());
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{digits}{}", "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}
