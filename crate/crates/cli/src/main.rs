//! `mdl`: exact analysis and simulation of three-branch Moebius interval maps.
//!
//! Exit codes: 0 dual found / check passed, 1 verification failed,
//! 2 usage or invalid input, 3 no natural dual, 4 KS distance above threshold.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use serde::Serialize;

use mdl_core::density::{DensityCdf, PiecewiseDensity};
use mdl_core::exactnum::{parse_rational, to_f64};
use mdl_core::report::{self, AnalyzeReport, DualStatus};
use mdl_core::simulate::{histogram, run_orbits, OrbitConfig, CSV_HEADER};
use mdl_core::systems::MapKind;
use mdl_core::{Error, Rational, RationalDensity, SystemSpec, TypeVector};

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NO_DUAL: u8 = 3;
const EXIT_KS_FAIL: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "mdl",
    version,
    about = "Natural duals and invariant densities of three-branch Moebius maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Branches, symmetry rows, DET, dual, density and lift for one system.
    Analyze {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        out: Format,
    },
    /// DET as a polynomial in beta, with its rational roots.
    Detscan {
        #[command(flatten)]
        part: PartitionArgs,
        #[arg(long = "type", value_parser = parse_type, allow_hyphen_values = true)]
        ty: TypeVector,
    },
    /// Rational points (p1, p2) of the conic p1² + p2² − p1·p2 − p1 = 0.
    Conic {
        /// Comma-separated rational parameters t > 1.
        #[arg(long, value_delimiter = ',', value_parser = parse_rat, conflicts_with = "t_max")]
        t_list: Option<Vec<Rational>>,
        /// Enumerate all t in (1, t-max] with denominator at most --t-den.
        #[arg(long, value_parser = parse_rat, required_unless_present = "t_list")]
        t_max: Option<Rational>,
        #[arg(long, default_value_t = 1)]
        t_den: u64,
    },
    /// Exact check of the derived density, dual and lift.
    Verify {
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Orbit histogram compared with the derived density.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long, value_parser = parse_rat, default_value = "1/3")]
    p1: Rational,
    #[arg(long, value_parser = parse_rat, default_value = "2/3")]
    p2: Rational,
}

#[derive(Args, Debug)]
struct SystemArgs {
    #[command(flatten)]
    part: PartitionArgs,
    #[arg(long, value_parser = parse_rat, allow_hyphen_values = true)]
    beta: Rational,
    #[arg(long = "type", value_parser = parse_type, allow_hyphen_values = true)]
    ty: TypeVector,
    /// Accept beta outside (-1, 2] when the branches are still well defined.
    #[arg(long = "override")]
    allow_out_of_range: bool,
}

impl SystemArgs {
    fn spec(&self) -> mdl_core::Result<SystemSpec> {
        let spec = SystemSpec::unchecked(
            self.part.p1.clone(),
            self.part.p2.clone(),
            self.beta.clone(),
            self.ty,
        );
        let spec = if self.allow_out_of_range {
            spec.with_override()
        } else {
            spec
        };
        spec.check()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long, value_parser = parse_map)]
    map: MapKind,
    /// Total iterates, burn-in included.
    #[arg(long, default_value_t = 1_000_000)]
    iters: usize,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting point; drawn from the seed when omitted.
    #[arg(long, conflicts_with = "seeds")]
    x0: Option<f64>,
    /// Run N independent orbits (seeds seed..seed+N) and pool the samples.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Histogram CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    ks_threshold: f64,
    /// Compare on [eps, 1] only, with the density renormalized there.
    #[arg(long, value_parser = parse_rat)]
    restrict_domain: Option<Rational>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn parse_rat(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_type(s: &str) -> Result<TypeVector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_map(s: &str) -> Result<MapKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_USAGE,
            err: e.into(),
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_analyze(sys: &SystemArgs, out: Format) -> Result<u8, Failure> {
    let spec = sys.spec()?;
    let r = report::analyze(&spec)?;
    debug!("det polynomial {}", r.det_polynomial_display);
    match out {
        Format::Json => print_json(&r)?,
        Format::Text => print!("{}", render_text(&r)),
    }
    Ok(match r.dual_status {
        DualStatus::Found | DualStatus::Degenerate => 0,
        DualStatus::None => EXIT_NO_DUAL,
    })
}

fn render_text(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!(
        "system: p1={} p2={} beta={} type={}",
        r.spec.p1, r.spec.p2, r.spec.beta, r.spec.type_vector
    ));
    for b in &r.inverse_branches_t {
        line(format!("  T⁻¹ {:<10} {}", b.name, b.display));
    }
    for b in &r.inverse_branches_s {
        line(format!("  S⁻¹ {:<10} {}", b.name, b.display));
    }
    for row in &r.symmetry_rows {
        line(format!("  row ({}, {}, {})", row.c_a, row.c_b, row.c_d));
    }
    line(format!("DET: {}", r.det));
    line(format!("DET(beta): {}", r.det_polynomial_display));
    line(format!("conic residual: {}", r.conic_residual));
    let status = match r.dual_status {
        DualStatus::Found => "found",
        DualStatus::Degenerate => "degenerate",
        DualStatus::None => "none",
    };
    line(format!("dual: {status}"));
    if let Some(d) = &r.dual {
        line(format!("  (A, B, D) = ({}, {}, {})", d.a, d.b, d.d));
        if let Some(m) = &d.m {
            line(format!("  M = {m}"));
        }
        if let Some(iv) = &d.interval {
            line(format!("  B* = {iv}"));
        }
    }
    if let Some(h) = &r.density {
        let mass = h.norm.map_or_else(
            || "not normalizable".to_string(),
            |n| format!("mass {n:.12}"),
        );
        line(format!("h = {} ({mass})", h.display));
    }
    if let Some(g) = &r.lifted {
        for p in g {
            line(format!(
                "  g on [{}, {}] = {}",
                p.lo, p.hi, p.density.display
            ));
        }
    }
    for n in &r.notes {
        line(format!("note: {n}"));
    }
    s
}

fn cmd_detscan(part: &PartitionArgs, ty: TypeVector) -> Result<u8, Failure> {
    let r = report::detscan(&part.p1, &part.p2, ty)?;
    print_json(&r)?;
    Ok(0)
}

fn cmd_conic(
    t_list: Option<&[Rational]>,
    t_max: Option<&Rational>,
    t_den: u64,
) -> Result<u8, Failure> {
    let ts = match (t_list, t_max) {
        (Some(ts), _) => ts.to_vec(),
        (None, Some(m)) => report::t_values_up_to(m, t_den)?,
        (None, None) => return Err(anyhow!("one of --t-list or --t-max is required").into()),
    };
    let (entries, skipped) = report::conic_entries(&ts);
    for t in skipped {
        warn!("skipping t = {t}: need t > 1");
    }
    print_json(&entries)?;
    Ok(0)
}

fn cmd_verify(sys: &SystemArgs) -> Result<u8, Failure> {
    let spec = sys.spec()?;
    let r = report::verify(&spec)?;
    print_json(&r)?;
    if !r.passed {
        let why = match &r.invariance_residual {
            Some(res) if res != "0" => format!("invariance residual {res}"),
            _ => r.notes.join("; "),
        };
        eprintln!("verify failed: {why}");
        return Ok(EXIT_VERIFY_FAIL);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SimulateSummary {
    spec: SystemSpec,
    map: MapKind,
    seeds: Vec<u64>,
    x0: Vec<f64>,
    iterations: usize,
    burn_in: usize,
    samples: usize,
    discarded: usize,
    escapes: usize,
    slow_mixing: bool,
    periodic_start: bool,
    boundary_start: bool,
    domain: (f64, f64),
    density: Option<String>,
    norm: Option<f64>,
    ks: Option<f64>,
    ks_threshold: f64,
    passed: bool,
    csv: Option<PathBuf>,
    note: String,
}

/// The analytic density for the chosen map, from the exact pipeline.
enum Analytic {
    S(RationalDensity),
    T(Box<PiecewiseDensity>),
}

fn analytic_density(spec: &SystemSpec, map: MapKind) -> anyhow::Result<Option<(Analytic, String)>> {
    let r = report::analyze(spec)?;
    let (Some(h), Some(g)) = (r.density, r.lifted) else {
        return Ok(None);
    };
    Ok(Some(match map {
        MapKind::S => {
            let d = RationalDensity::new(h.rational_function()?)?;
            (Analytic::S(d), h.display)
        }
        MapKind::T => {
            let pieces = [0, 1, 2].map(|i| g[i].density.rational_function());
            let [a, b, c] = pieces;
            let d = PiecewiseDensity::new(spec.p1.clone(), spec.p2.clone(), [a?, b?, c?])?;
            let display = g
                .iter()
                .map(|p| p.density.display.as_str())
                .collect::<Vec<_>>()
                .join(" | ");
            (Analytic::T(Box::new(d)), display)
        }
    }))
}

fn write_csv_atomic(path: &Path, rows: &[[String; 4]]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(CSV_HEADER)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<u8, Failure> {
    let spec = a.sys.spec()?;
    if a.seeds == 0 {
        return Err(anyhow!("--seeds must be at least 1").into());
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
    let cfgs: Vec<OrbitConfig> = seeds
        .iter()
        .map(|&seed| {
            let mut c = OrbitConfig::new(spec.clone(), a.map, a.iters, a.burn_in, seed);
            c.x0 = a.x0;
            c.bins = a.bins;
            c.check().map(|_| c)
        })
        .collect::<mdl_core::Result<_>>()?;

    let analytic = analytic_density(&spec, a.map)?;
    let lo = a
        .restrict_domain
        .clone()
        .unwrap_or_else(|| Rational::from_integer(0.into()));
    let hi = Rational::from_integer(1.into());
    if lo < Rational::from_integer(0.into()) || lo >= hi {
        return Err(anyhow!("--restrict-domain must lie in [0, 1)").into());
    }
    let cdf = match &analytic {
        None => {
            warn!("no invariant density derived; histogram only");
            None
        }
        Some((d, display)) => {
            let built = match d {
                Analytic::S(h) => DensityCdf::new(h, &lo, &hi),
                Analytic::T(g) => DensityCdf::new(g.as_ref(), &lo, &hi),
            };
            match built {
                Ok(c) => Some(c),
                Err(Error::NotNormalizable) => {
                    return Err(anyhow!(
                        "density {display} has infinite mass on [{lo}, 1]; \
                         pass --restrict-domain EPS to compare on [EPS, 1]"
                    )
                    .into())
                }
                Err(e) => return Err(e.into()),
            }
        }
    };

    info!("running {} orbit(s) of {} iterates", cfgs.len(), a.iters);
    let orbits = run_orbits(&cfgs)?;
    let escapes: usize = orbits.iter().map(|o| o.escapes).sum();
    let pooled: Vec<f64> = orbits
        .iter()
        .flat_map(|o| o.samples.iter().copied())
        .collect();
    let mut hist = histogram(&pooled, a.bins, cdf.as_ref())?;
    hist.escapes = escapes;
    if escapes > 0 {
        warn!("{escapes} iterate(s) left [0,1] by rounding and were clamped");
    }
    if let Some(path) = &a.out {
        write_csv_atomic(path, &hist.csv_rows())?;
        info!("histogram written to {}", path.display());
    }
    let slow_mixing = orbits.iter().any(|o| o.slow_mixing);
    let passed = hist.ks.is_none_or(|ks| ks < a.ks_threshold);
    let note = match hist.ks {
        Some(_) if passed => "orbit statistics consistent with the invariant density",
        Some(_) => "orbit statistics not consistent with the invariant density at this threshold",
        None => "no analytic comparison",
    };
    let summary = SimulateSummary {
        spec,
        map: a.map,
        seeds,
        x0: orbits.iter().map(|o| o.x0).collect(),
        iterations: a.iters,
        burn_in: a.burn_in,
        samples: hist.samples,
        discarded: hist.discarded,
        escapes,
        slow_mixing,
        periodic_start: orbits.iter().any(|o| o.periodic),
        boundary_start: orbits.iter().any(|o| o.hits_boundary),
        domain: (to_f64(&lo), 1.0),
        density: analytic.as_ref().map(|(_, s)| s.clone()),
        norm: cdf.as_ref().map(DensityCdf::norm),
        ks: hist.ks,
        ks_threshold: a.ks_threshold,
        passed,
        csv: a.out.clone(),
        note: note.into(),
    };
    print_json(&summary)?;
    if let Some(ks) = hist.ks {
        eprintln!("KS distance: {ks:.6}");
    }
    Ok(if passed { 0 } else { EXIT_KS_FAIL })
}

fn init_logging() {
    let filter = std::env::var("MDL_LOG").unwrap_or_else(|_| "error".into());
    env_logger::Builder::new()
        .parse_filters(&filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { sys, out } => cmd_analyze(sys, *out),
        Command::Detscan { part, ty } => cmd_detscan(part, *ty),
        Command::Conic {
            t_list,
            t_max,
            t_den,
        } => cmd_conic(t_list.as_deref(), t_max.as_ref(), *t_den),
        Command::Verify { sys } => cmd_verify(sys),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
