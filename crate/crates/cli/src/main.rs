use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ciscurv_core::brody::{self, DiskSearch, ExperimentFamily};
use ciscurv_core::gauss::{self, Bundle};
use ciscurv_core::germ;
use ciscurv_core::jetspace::{self, JetSpec, LocusId};
use ciscurv_core::peaks::{self, GlobalizeOptions, LineTangencyOracle, LocusOracle, TransversalityOracle};
use ciscurv_core::{Error, Germ, PolynomialMap, RunConfig, C64};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "ciscurv",
    version,
    about = "Curvature, jet-codimension and peak-section tools for complete intersections"
)]
struct Cli {
    /// JSON file with a run configuration; missing fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    zero_tol: Option<f64>,
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Codimension bounds of the bad jet loci.
    Codim(CodimArgs),
    /// Curvature values of a germ at a point.
    Curvature(CurvatureArgs),
    /// Negativity certificates and Griffiths positivity tests.
    Certify(CertifyArgs),
    /// Peak-section globalization in the flat model.
    Donaldson(DonaldsonArgs),
    /// Brody reparametrization of a disk given by a polynomial in one variable.
    Brody(BrodyArgs),
    /// Highest contact order of lines with a hypersurface at a point.
    Linescan(LinescanArgs),
    /// Derivatives of holomorphic disks in peak-section zero sets across scales.
    HyperbolicExperiment(ExperimentArgs),
}

#[derive(Args)]
struct CodimArgs {
    #[arg(long)]
    d: u32,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    l: u32,
    /// One locus by name (ricci, scalar, holsec, holbisec, inflection,
    /// exterior-cotangent, exterior-normal, line-tangency, transversality).
    #[arg(long)]
    locus: Option<String>,
    /// Every locus at its threshold order.
    #[arg(long)]
    table: bool,
    /// Print the aligned text table instead of JSON.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct MapPoint {
    #[arg(long)]
    map: PathBuf,
    /// Coordinates as `re,im;re,im;...`; the origin when absent.
    #[arg(long)]
    point: Option<String>,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    at: MapPoint,
    /// Tangent vector in frame coordinates, normalized before use.
    #[arg(long)]
    vector: Option<String>,
    /// Second tangent vector for the bisectional curvature.
    #[arg(long)]
    vector2: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ricci,
    Scalar,
    Holsec,
    Holbisec,
    Exterior,
}

#[derive(Clone, Copy, ValueEnum)]
enum BundleArg {
    Cotangent,
    Normal,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    at: MapPoint,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, value_enum, default_value_t = BundleArg::Cotangent)]
    bundle: BundleArg,
    #[arg(long)]
    restarts: Option<usize>,
    /// Finite-difference step of the Gauss map check.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Transversality,
    Linetangency,
}

#[derive(Args)]
struct DonaldsonArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    l: u32,
    /// Half-width of the evaluated box.
    #[arg(long)]
    radius: f64,
    /// Minimum distance between points of a color class.
    #[arg(long = "D")]
    big_d: f64,
    #[arg(long, value_enum)]
    oracle: OracleArg,
    #[arg(long)]
    budget: Option<usize>,
    /// Margin-vs-radius CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// The constructed PeakFamily as JSON.
    #[arg(long)]
    family_out: Option<PathBuf>,
}

#[derive(Args)]
struct BrodyArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    deg_max: usize,
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
}

#[derive(Args)]
struct LinescanArgs {
    #[command(flatten)]
    at: MapPoint,
    #[arg(long)]
    l: u32,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Random,
    Line,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "4,9,16")]
    scales: Vec<f64>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Random)]
    family: FamilyArg,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    l: u32,
    /// Zero-set seeds per scale; the configured disk budget when absent.
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failures reported on standard error as `{"error": {"kind", "message"}}`.
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DegenerateGerm(_) => "degenerate_germ",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::Parse(_) => "parse_error",
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

fn fail<T>(kind: &'static str, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        kind,
        message: message.into(),
    })
}

type Outcome = Result<Value, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        let kind = if e.kind() == std::io::ErrorKind::NotFound {
            "file_not_found"
        } else {
            "io_error"
        };
        Failure {
            kind,
            message: format!("{}: {e}", path.display()),
        }
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        kind: "io_error",
        message: format!("{}: {e}", path.display()),
    })
}

fn load_map(path: &Path) -> Result<PolynomialMap, Failure> {
    PolynomialMap::from_json(&read_file(path)?).map_err(|e| match e {
        Error::Parse(m) => Failure {
            kind: "parse_error",
            message: format!("{}: {m}", path.display()),
        },
        other => other.into(),
    })
}

/// `re,im;re,im;...`
fn parse_point(s: &str) -> Result<Vec<C64>, Failure> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            let num = |t: &str| {
                t.parse::<f64>().map_err(|_| Failure {
                    kind: "invalid_argument",
                    message: format!("bad number '{t}' in '{s}'"),
                })
            };
            match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => fail("invalid_argument", format!("bad coordinate '{pair}', expected re,im")),
            }
        })
        .collect()
}

fn unit(v: Vec<C64>) -> Result<Vec<C64>, Failure> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return fail("invalid_argument", "tangent vector must be nonzero");
    }
    Ok(v.into_iter().map(|c| c / norm).collect())
}

fn load_germ(at: &MapPoint, cfg: &RunConfig) -> Result<Germ, Failure> {
    let map = load_map(&at.map)?;
    let point = match &at.point {
        Some(p) => parse_point(p)?,
        None => vec![C64::new(0.0, 0.0); map.n()],
    };
    Ok(Germ::new(map, point, &cfg.tolerances)?)
}

fn codim(a: &CodimArgs) -> Result<(Value, Option<String>), Failure> {
    let reports = if a.table {
        jetspace::threshold_table(a.d, a.n)?
    } else {
        let spec = JetSpec::new(a.d, a.n, a.l)?;
        let loci = match &a.locus {
            Some(name) => vec![LocusId::parse(name, a.l)?],
            None => vec![
                LocusId::Transversality,
                LocusId::Inflection,
                LocusId::RicciDegenerate,
                LocusId::ScalarFlat,
                LocusId::HolSecDegenerate,
                LocusId::HolBisecDegenerate,
                LocusId::ExteriorCotangent(a.l),
                LocusId::ExteriorNormal(a.l),
                LocusId::LineTangency(a.l),
            ],
        };
        let mut out = Vec::new();
        for id in loci {
            match jetspace::locus_codim(id, spec) {
                Ok(r) => out.push(r),
                // loci that need a larger order or another shape are skipped when listing all
                Err(e) if a.locus.is_none() => drop(e),
                Err(e) => return Err(e.into()),
            }
        }
        out
    };
    let text = a.text.then(|| jetspace::render_table(&reports));
    Ok((serde_json::to_value(&reports).expect("serializable"), text))
}

fn curvature(a: &CurvatureArgs, cfg: &RunConfig) -> Outcome {
    let g = load_germ(&a.at, cfg)?;
    let mut out = json!({
        "n": g.n(),
        "d": g.d(),
        "point": g.point(),
        "submersion_margin": g.submersion_margin(),
        "sff_norm": g.sff().norm(),
        "scalar": germ::scalar(&g),
        "scalar_from_ricci": germ::scalar_from_ricci(&g),
        "ricci_sigma_min": germ::ricci_sigma_min(&g),
    });
    if let Some(v) = &a.vector {
        let v = unit(parse_point(v)?)?;
        out["vector"] = json!(v);
        out["ricci"] = json!(germ::ricci(&g, &v)?);
        out["holsec"] = json!(germ::holsec(&g, &v)?);
        if let Some(w) = &a.vector2 {
            let w = unit(parse_point(w)?)?;
            out["vector2"] = json!(w);
            out["holbisec"] = json!(germ::holbisec(&g, &v, &w)?);
        }
    }
    Ok(out)
}

fn certify(a: &CertifyArgs, cfg: &RunConfig) -> Outcome {
    let g = load_germ(&a.at, cfg)?;
    let tol = &cfg.tolerances;
    let restarts = a.restarts.unwrap_or(cfg.budgets.restarts);
    let value = |r: germ::CurvatureReport| serde_json::to_value(r).expect("serializable");
    Ok(match a.kind {
        Kind::Ricci => value(germ::certify_ricci_negative(&g, tol)),
        Kind::Scalar => value(germ::certify_scalar_negative(&g, tol)),
        Kind::Holsec => value(germ::certify_holsec_negative(&g, restarts, cfg.seed, tol)),
        Kind::Holbisec => value(germ::certify_holbisec_negative(&g, restarts, cfg.seed, tol)),
        Kind::Exterior => match a.bundle {
            BundleArg::Cotangent => {
                let profile = gauss::kernel_profile(&g, a.l, restarts, cfg.seed, tol)?;
                let check = gauss::gauss_immersion_check(&g, a.l, a.step, restarts, cfg.seed, tol)?;
                json!({
                    "bundle": Bundle::Cotangent,
                    "verdict": if profile.positive { "positive" } else { "not_positive" },
                    "max_kernel_dim": profile.max_kernel_dim,
                    "margin": profile.margin,
                    "witness": profile.witness_u,
                    "profile": profile,
                    "immersion": check,
                })
            }
            BundleArg::Normal => {
                let check = gauss::bundle_immersion_check(&g, Bundle::Normal, a.l, a.step, restarts, cfg.seed, tol)?;
                json!({
                    "bundle": Bundle::Normal,
                    "verdict": if check.immersion { "positive" } else { "not_positive" },
                    "margin": check.sigma_min,
                    "witness": check.witness_plane,
                    "immersion": check,
                })
            }
        },
    })
}

#[derive(Serialize)]
struct RadiusRow {
    radius: f64,
    points: usize,
    min_final_margin: Option<f64>,
}

fn donaldson(a: &DonaldsonArgs, cfg: &RunConfig) -> Outcome {
    if !(a.radius >= 0.0 && a.radius.is_finite()) {
        return fail("invalid_argument", "radius must be nonnegative");
    }
    let p = &cfg.peaks;
    let lattice = peaks::discretize(a.n, a.radius + p.pad)?;
    let classes = peaks::color_classes(&lattice, a.big_d);
    let opts = GlobalizeOptions {
        m: a.m,
        l: a.l,
        d: a.big_d,
        n0: p.n0,
        eps1: p.eps1,
        schedule: None,
        budget: a.budget.unwrap_or(cfg.budgets.avoid_budget),
        seed: cfg.seed,
        grid_step: p.grid_step,
        eval_radius: Some(a.radius),
    };
    let transversality = TransversalityOracle;
    let tangency = LineTangencyOracle::new(a.l);
    let oracle: &dyn LocusOracle = match a.oracle {
        OracleArg::Transversality => &transversality,
        OracleArg::Linetangency => {
            if a.m != 1 {
                return fail("invalid_argument", "the line-tangency oracle needs m = 1");
            }
            &tangency
        }
    };
    let (family, report) = peaks::globalize(&lattice, &classes, oracle, &opts)?;
    // lattice radii 0, s, 2s, ... up to the requested radius
    let step = lattice.scale;
    let rows: Vec<RadiusRow> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|r| *r <= a.radius + 1e-9)
        .map(|r| {
            let inside: Vec<f64> = report
                .points
                .iter()
                .filter(|pt| {
                    pt.point
                        .iter()
                        .all(|c| c.re.abs() <= r + 1e-9 && c.im.abs() <= r + 1e-9)
                })
                .map(|pt| pt.final_margin)
                .collect();
            RadiusRow {
                radius: r,
                points: inside.len(),
                min_final_margin: inside.into_iter().reduce(f64::min),
            }
        })
        .collect();
    if let Some(path) = &a.csv {
        let mut csv = String::from("radius,points,min_final_margin,guaranteed_margin\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.radius,
                r.points,
                opt(r.min_final_margin),
                opt(report.guaranteed_margin)
            ));
        }
        write_file(path, &csv)?;
    }
    if let Some(path) = &a.family_out {
        write_file(path, &family.to_json())?;
    }
    Ok(json!({
        "n": a.n,
        "m": a.m,
        "l": a.l,
        "radius": a.radius,
        "D": a.big_d,
        "lattice_points": lattice.len(),
        "final_margin": report.final_uniform_margin,
        "report": report,
        "margin_vs_radius": rows,
    }))
}

fn brody_cmd(a: &BrodyArgs) -> Outcome {
    let map = load_map(&a.map)?;
    let f = brody::DiskMap::from_polynomial(&map, a.deg_max)?;
    let (g, cert) = brody::brody_reparametrize(&f, a.grid_step)?;
    Ok(json!({ "certificate": cert, "g": g }))
}

fn linescan(a: &LinescanArgs, cfg: &RunConfig) -> Outcome {
    let map = load_map(&a.at.map)?;
    let point = match &a.at.point {
        Some(p) => parse_point(p)?,
        None => vec![C64::new(0.0, 0.0); map.n()],
    };
    let restarts = a.restarts.unwrap_or(cfg.budgets.restarts);
    let scan = brody::max_line_tangency(&map, &point, a.l, restarts, &cfg.tolerances)?;
    Ok(json!({ "l": a.l, "point": point, "scan": scan }))
}

fn experiment(a: &ExperimentArgs, cfg: &RunConfig) -> Outcome {
    let kind = match a.family {
        FamilyArg::Random => ExperimentFamily::Random,
        FamilyArg::Line => ExperimentFamily::Line,
    };
    let families = a
        .scales
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            Ok((
                k,
                brody::experiment_family(kind, a.n, a.l, k, cfg.seed.wrapping_add(i as u64))?,
            ))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let search = DiskSearch {
        candidates: a.candidates.unwrap_or(cfg.budgets.disk_search),
        seed: cfg.seed,
        ..DiskSearch::default()
    };
    let rows = brody::derivative_bound_experiment(&families, &search, &cfg.tolerances)?;
    if let Some(path) = &a.csv {
        write_file(path, &brody::experiment_csv(&rows))?;
    }
    Ok(json!({ "family": kind, "n": a.n, "l": a.l, "search": search, "rows": rows }))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str::<RunConfig>(&read_file(path)?).map_err(|e| Failure {
            kind: "parse_error",
            message: format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()),
        })?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.zero_tol {
        cfg.tolerances.zero_tol = t;
    }
    if let Some(t) = cli.rank_tol {
        cfg.tolerances.rank_tol = t;
    }
    if let Some(o) = &cli.output {
        cfg.output = Some(o.display().to_string());
    }
    match &cli.command {
        Command::Donaldson(DonaldsonArgs { csv: Some(p), .. })
        | Command::HyperbolicExperiment(ExperimentArgs { csv: Some(p), .. }) => {
            cfg.csv = Some(p.display().to_string());
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(var) = std::env::var("CISCURV_THREADS") else {
        return Ok(());
    };
    let threads: usize = match var.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => {
            return fail(
                "invalid_argument",
                format!("CISCURV_THREADS must be a positive integer, got '{var}'"),
            )
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure {
            kind: "io_error",
            message: e.to_string(),
        })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    let (name, result) = match &cli.command {
        Command::Codim(a) => {
            let (value, text) = codim(a)?;
            if let Some(t) = text {
                print!("{t}");
                return Ok(());
            }
            ("codim", value)
        }
        Command::Curvature(a) => ("curvature", curvature(a, &cfg)?),
        Command::Certify(a) => ("certify", certify(a, &cfg)?),
        Command::Donaldson(a) => ("donaldson", donaldson(a, &cfg)?),
        Command::Brody(a) => ("brody", brody_cmd(a)?),
        Command::Linescan(a) => ("linescan", linescan(a, &cfg)?),
        Command::HyperbolicExperiment(a) => ("hyperbolic-experiment", experiment(a, &cfg)?),
    };
    let report = json!({
        "command": name,
        "version": VERSION,
        "config": cfg,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("serializable");
    text.push('\n');
    match &cli.output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind, "message": f.message } }));
            ExitCode::from(2)
        }
    }
}
