//! Command-line front end.
//!
//! Every command writes a config header first (the fully resolved settings,
//! defaults included), then one record per row. JSON output is one object per
//! line; CSV output puts the header and any summary in `#` comment lines.
//! Worker count is not echoed because it never changes the result.

mod selftest;
mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::asymptotics;
use crate::density::{DensityModel, Family};
use crate::digraph::CccdInstance;
use crate::error::{CccdError, Result};
use crate::exact::{self, ProbabilityReport, QuadratureConfig};
use crate::montecarlo::{self, Anchors, CellSampling, Proximity, SimulationPlan};
use crate::multi::{self, AnchorConditional, CellMode, RandomAnchorOptions};
use crate::parallel;

pub use selftest::{selftest, SelftestCheck};
pub use table::{published_table, Relation, TableRow};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for a failed computation or self-test.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for unusable arguments or input.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when a `table` row misses its published value.
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cccd", version, about = "Domination number of class cover catch digraphs on the line")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = default; CCCD_THREADS caps it).
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
    /// Relative tolerance for quadrature.
    #[arg(long, default_value_t = 1e-8, global = true)]
    rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate domination numbers and compare with the exact law.
    Simulate(SimulateArgs),
    /// p_n(F) = P(gamma = 2) for one cell, by the best or a chosen method.
    Exact(ExactArgs),
    /// p_n(F) by adaptive quadrature.
    Quadrature(QuadArgs),
    /// Large-n limit of p_n(F).
    Asymptotic(AsymptoticArgs),
    /// Law of the domination number with several anchors.
    Multi(MultiArgs),
    /// Reproduce the checkable values with pass/fail annotations.
    Table(TableArgs),
    /// Fast invariant checks.
    Selftest(SelftestArgs),
    /// Domination number of one instance.
    Domination(DominationArgs),
    /// Density and p_n curves as data.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Density of the points: a family name or a JSON spec.
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fixed anchors; defaults to the support ends.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    anchors: Option<Vec<f64>>,
    /// Draw `m` anchors per replicate from this density instead.
    #[arg(long, requires = "m")]
    fy: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = SamplingArg::Independent)]
    sampling: SamplingArg,
    #[arg(long, value_enum, default_value_t = ProximityArg::Spherical)]
    proximity: ProximityArg,
    /// Per-atom acceptance threshold in standard errors.
    #[arg(long, default_value_t = montecarlo::DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Independent,
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProximityArg {
    Spherical,
    CdfTransformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    ClosedForm,
    Multinomial,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[arg(long, default_value = "uniform")]
    density: String,
    /// One or more sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct QuadArgs {
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20_000)]
    max_subdivisions: usize,
    /// Evaluate the integrand without the log-domain power.
    #[arg(long)]
    linear_domain: bool,
}

#[derive(Debug, Args)]
struct AsymptoticArgs {
    /// One or more densities.
    #[arg(long, required = true)]
    density: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Hu,
    Restricted,
}

#[derive(Debug, Args)]
struct MultiArgs {
    #[arg(long)]
    n: usize,
    /// Number of anchors; taken from `--anchors` when those are given.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "uniform")]
    fx: String,
    #[arg(long, default_value = "uniform")]
    fy: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    anchors: Option<Vec<f64>>,
    /// Monte Carlo replicates for cases without a deterministic route.
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Hu)]
    mode: ModeArg,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Include the slow n = 1000 quadrature rows.
    #[arg(long, alias = "paper")]
    published: bool,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Perturb a closed-form constant to confirm the checks notice.
    #[arg(long, hide = true)]
    mutate: bool,
}

#[derive(Debug, Args)]
struct DominationArgs {
    /// Instance file: `x <v>` / `y <v>` lines, or JSON `{"xs": [...], "ys": [...]}`.
    #[arg(long, conflicts_with_all = ["xs", "ys"])]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ys: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    Density,
    Pn,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long, value_enum, default_value_t = CurveKind::Density)]
    kind: CurveKind,
    /// Grid points for density curves.
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Largest n for p_n curves.
    #[arg(long, default_value_t = 50)]
    n_max: usize,
}

/// A command's output before formatting.
struct Report {
    config: Value,
    columns: Vec<&'static str>,
    rows: Vec<Value>,
    summary: Option<Value>,
    exit: i32,
}

impl Report {
    fn new(config: Value, columns: &[&'static str]) -> Self {
        Report {
            config,
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: None,
            exit: EXIT_OK,
        }
    }

    fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Json => {
                s.push_str(&json!({ "config": self.config }).to_string());
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.to_string());
                    s.push('\n');
                }
                if let Some(sum) = &self.summary {
                    s.push_str(&json!({ "summary": sum }).to_string());
                    s.push('\n');
                }
            }
            Format::Csv => {
                s.push_str(&format!("# config: {}\n", self.config));
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = self.columns.iter().map(|c| csv_cell(r.get(*c))).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                if let Some(sum) = &self.summary {
                    s.push_str(&format!("# summary: {sum}\n"));
                }
            }
        }
        s
    }
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn exit_code(e: &CccdError) -> i32 {
    match e {
        CccdError::InvalidParameter { .. }
        | CccdError::Spec { .. }
        | CccdError::OutOfRange { .. }
        | CccdError::Tie { .. }
        | CccdError::NonFinite(_)
        | CccdError::NoAnchors
        | CccdError::Parse { .. }
        | CccdError::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and writes to `out`
/// unless `--out` is given. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                eprint!("{e}");
                EXIT_USAGE
            };
        }
    };
    let common = cli.common.clone();
    let result = parallel::with_threads(common.threads, || dispatch(cli.command, &common));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = report.render(common.format);
    let written = match &common.out {
        Some(p) => std::fs::write(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    report.exit
}

fn quad_cfg(c: &Common) -> Result<QuadratureConfig> {
    let cfg = QuadratureConfig {
        rel_tol: c.rel_tol,
        ..QuadratureConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// A family name, or a JSON spec when the text starts with `{`.
pub fn parse_density(text: &str) -> Result<DensityModel> {
    let t = text.trim();
    if t.starts_with('{') {
        DensityModel::from_json(t)
    } else {
        DensityModel::from_json(&json!({ "family": t }).to_string())
    }
}

fn spec_value(m: &DensityModel) -> Value {
    serde_json::to_value(m.to_spec()).unwrap_or(Value::Null)
}

fn dispatch(cmd: Command, c: &Common) -> Result<Report> {
    match cmd {
        Command::Simulate(a) => simulate(a, c),
        Command::Exact(a) => exact_cmd(a, c),
        Command::Quadrature(a) => quadrature_cmd(a, c),
        Command::Asymptotic(a) => asymptotic_cmd(a),
        Command::Multi(a) => multi_cmd(a, c),
        Command::Table(a) => table_cmd(a, c),
        Command::Selftest(a) => selftest_cmd(a, c),
        Command::Domination(a) => domination_cmd(a),
        Command::Curves(a) => curves_cmd(a, c),
    }
}

fn simulate(a: SimulateArgs, c: &Common) -> Result<Report> {
    let fx = parse_density(&a.density)?;
    let s = fx.support();
    let anchors = match (&a.fy, &a.anchors) {
        (Some(_), Some(_)) => return Err(CccdError::param("anchors", "give either --anchors or --fy/--m")),
        (Some(fy), None) => Anchors::Random {
            fy: parse_density(fy)?,
            m: a.m.unwrap_or(2),
        },
        (None, Some(v)) => {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            Anchors::Fixed(v)
        }
        (None, None) => Anchors::Fixed(vec![s.lo, s.hi]),
    };
    let mut plan = SimulationPlan::new(fx, anchors.clone(), a.n, a.reps, a.seed);
    plan.parallelism = c.threads;
    plan.sampling = match a.sampling {
        SamplingArg::Independent => CellSampling::Independent,
        SamplingArg::Rescaled => CellSampling::Rescaled,
    };
    plan.proximity = match a.proximity {
        ProximityArg::Spherical => Proximity::Spherical,
        ProximityArg::CdfTransformed => Proximity::CdfTransformed,
    };
    let (anchor_cfg, fy_cfg) = match &anchors {
        Anchors::Fixed(v) => (json!(v), Value::Null),
        Anchors::Random { fy, .. } => (Value::Null, spec_value(fy)),
    };
    let config = json!({
        "command": "simulate",
        "density": spec_value(&fx),
        "n": a.n,
        "m": plan.m(),
        "reps": a.reps,
        "seed": a.seed,
        "anchors": anchor_cfg,
        "fy": fy_cfg,
        "sampling": plan.sampling,
        "proximity": plan.proximity,
        "threshold": a.threshold,
        "rel_tol": c.rel_tol,
    });
    let emp = montecarlo::run(&plan)?;
    let predicted = predict(&plan, &quad_cfg(c)?);
    let mut rep = Report::new(config, &["k", "count", "fraction", "predicted", "z"]);
    let verdict = match &predicted {
        Some(p) => Some(montecarlo::compare(&emp, p, a.threshold)?),
        None => None,
    };
    let len = emp.counts.len().max(predicted.as_ref().map_or(0, Vec::len));
    for k in 0..len {
        let count = emp.counts.get(k).copied().unwrap_or(0);
        let pred = predicted.as_ref().map(|p| p.get(k).copied().unwrap_or(0.0));
        if count == 0 && pred.unwrap_or(0.0) == 0.0 {
            continue;
        }
        let z = verdict.as_ref().and_then(|v| v.per_atom.iter().find(|x| x.k == k)).map(|x| x.z);
        rep.rows.push(json!({
            "k": k,
            "count": count,
            "fraction": emp.fraction(k),
            "predicted": pred,
            "z": z.filter(|z| z.is_finite()),
        }));
    }
    rep.summary = Some(json!({
        "reps": emp.reps,
        "mean": emp.mean(),
        "std_error": emp.std_error(),
        "boundary_hits": emp.boundary_hits,
        "bound_violations": emp.bound_violations,
        "chi_square": verdict.as_ref().map(|v| v.statistic).filter(|s| s.is_finite()),
        "total_variation": verdict.as_ref().map(|v| v.total_variation),
        "verdict": verdict.as_ref().map(|v| v.verdict),
    }));
    Ok(rep)
}

/// Exact law for the plan when one is cheap enough to compute.
fn predict(plan: &SimulationPlan, cfg: &QuadratureConfig) -> Option<Vec<f64>> {
    let n = plan.n;
    let (fx, ys) = match (&plan.anchors, plan.proximity) {
        (Anchors::Fixed(v), Proximity::Spherical) => (plan.fx, v.clone()),
        (Anchors::Fixed(v), Proximity::CdfTransformed) => {
            let u = DensityModel::new(Family::Uniform).ok()?;
            let mut t: Vec<f64> = v.iter().map(|&y| plan.fx.cdf(y)).collect();
            t.dedup();
            (u, t)
        }
        (Anchors::Random { fy, m }, Proximity::Spherical) => {
            let mode = match plan.sampling {
                CellSampling::Rescaled => CellMode::Hu,
                CellSampling::Independent => CellMode::Restricted,
            };
            let o = RandomAnchorOptions { mode, monte_carlo: None };
            return multi::pmf_random_anchors(&plan.fx, fy, n, *m, &o, cfg).ok();
        }
        _ => return None,
    };
    let s = fx.support();
    if ys.len() == 2 && ys[0] <= s.lo && ys[1] >= s.hi {
        let p = if n < 2 { 0.0 } else { exact::p_deterministic(&fx, n, cfg).ok()?.value };
        let mut out = vec![0.0; 3];
        if n == 0 {
            out[0] = 1.0;
        } else {
            out[1] = 1.0 - p;
            out[2] = p;
        }
        return Some(out);
    }
    if n + ys.len() > multi::COMPOSITION_MAX || n == 0 {
        return None;
    }
    let mode = match plan.sampling {
        CellSampling::Rescaled => CellMode::Hu,
        CellSampling::Independent => CellMode::Restricted,
    };
    let cond = AnchorConditional::new(&fx, &ys, mode, n, cfg).ok()?;
    multi::pmf_conditional(&cond, n).ok()
}

fn report_row(r: &ProbabilityReport) -> Value {
    json!({
        "n": r.n,
        "value": r.value,
        "method": r.method,
        "error_bound": r.abs_error_bound,
        "meta": r.meta,
    })
}

const P_COLUMNS: [&str; 4] = ["n", "value", "method", "error_bound"];

fn exact_cmd(a: ExactArgs, c: &Common) -> Result<Report> {
    let fx = parse_density(&a.density)?;
    let cfg = quad_cfg(c)?;
    let config = json!({
        "command": "exact",
        "density": spec_value(&fx),
        "n": a.n,
        "method": a.method.to_possible_value().map(|v| v.get_name().to_string()),
        "reps": a.reps,
        "seed": a.seed,
        "rel_tol": c.rel_tol,
    });
    let mut rep = Report::new(config, &P_COLUMNS);
    for &n in &a.n {
        let r = match a.method {
            MethodArg::Auto => exact::p_deterministic(&fx, n, &cfg)?,
            MethodArg::ClosedForm if fx.family() == Family::Uniform => exact::p_uniform(n)?,
            MethodArg::ClosedForm => exact::p_closed_form(&fx, n)?,
            MethodArg::Multinomial => {
                if fx.family() != Family::SquareCdf {
                    return Err(CccdError::Unsupported("the exact series exists for square-cdf only".into()));
                }
                exact::p_multinomial_squarecdf(n)?
            }
            MethodArg::Quadrature => exact::p_quadrature(&fx, n, &cfg)?,
            MethodArg::MonteCarlo => exact::p_monte_carlo(&fx, n, a.reps, a.seed)?,
        };
        rep.rows.push(report_row(&r));
    }
    Ok(rep)
}

fn quadrature_cmd(a: QuadArgs, c: &Common) -> Result<Report> {
    let fx = parse_density(&a.density)?;
    let cfg = QuadratureConfig {
        rel_tol: c.rel_tol,
        max_subdivisions: a.max_subdivisions,
        log_domain: !a.linear_domain,
        ..QuadratureConfig::default()
    };
    cfg.validate()?;
    let config = json!({
        "command": "quadrature",
        "density": spec_value(&fx),
        "n": a.n,
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "max_subdivisions": cfg.max_subdivisions,
        "log_domain": cfg.log_domain,
    });
    let mut rep = Report::new(config, &P_COLUMNS);
    for &n in &a.n {
        rep.rows.push(report_row(&exact::p_quadrature(&fx, n, &cfg)?));
    }
    Ok(rep)
}

fn asymptotic_cmd(a: AsymptoticArgs) -> Result<Report> {
    let models: Vec<DensityModel> = a.density.iter().map(|d| parse_density(d)).collect::<Result<_>>()?;
    let config = json!({
        "command": "asymptotic",
        "density": models.iter().map(spec_value).collect::<Vec<_>>(),
    });
    let mut rep = Report::new(config, &["family", "params", "k", "ell", "p_limit", "method"]);
    for m in &models {
        let r = asymptotics::p_limit(m)?;
        let spec = m.to_spec();
        rep.rows.push(json!({
            "family": spec.family,
            "params": csv_params(&spec.params),
            "k": r.profile.map(|p| p.k),
            "ell": r.profile.map(|p| p.ell),
            "p_limit": r.p_limit,
            "method": r.method,
        }));
    }
    Ok(rep)
}

fn csv_params(p: &std::collections::BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn multi_cmd(a: MultiArgs, c: &Common) -> Result<Report> {
    let fx = parse_density(&a.fx)?;
    let fy = parse_density(&a.fy)?;
    let cfg = quad_cfg(c)?;
    let mode = match a.mode {
        ModeArg::Hu => CellMode::Hu,
        ModeArg::Restricted => CellMode::Restricted,
    };
    let m = match (&a.anchors, a.m) {
        (Some(v), Some(m)) if v.len() != m => {
            return Err(CccdError::param("m", format!("{m} does not match {} anchors", v.len())))
        }
        (Some(v), _) => v.len(),
        (None, Some(m)) => m,
        (None, None) => return Err(CccdError::param("m", "give --m or --anchors")),
    };
    let config = json!({
        "command": "multi",
        "n": a.n,
        "m": m,
        "fx": spec_value(&fx),
        "fy": spec_value(&fy),
        "anchors": a.anchors,
        "mode": mode,
        "mc": a.mc,
        "seed": a.seed,
        "rel_tol": c.rel_tol,
    });
    let mut rep = Report::new(config, &["k", "probability"]);
    let (pmf, expectation, route) = if let Some(ys) = &a.anchors {
        let mut ys = ys.clone();
        ys.sort_by(f64::total_cmp);
        let cond = AnchorConditional::new(&fx, &ys, mode, a.n, &cfg)?;
        let pmf = multi::pmf_conditional(&cond, a.n)?;
        let e: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        (pmf, e, "conditional")
    } else {
        let o = RandomAnchorOptions {
            mode,
            monte_carlo: a.mc.map(|r| (r, a.seed)),
        };
        let pmf = multi::pmf_random_anchors(&fx, &fy, a.n, m, &o, &cfg)?;
        let e = multi::expected_gamma(&fx, &fy, a.n, m, &o, &cfg)?;
        (pmf, e, if m <= multi::QUADRATURE_MAX_M { "random-anchors" } else { "monte-carlo" })
    };
    for (k, p) in pmf.iter().enumerate() {
        rep.rows.push(json!({ "k": k, "probability": p }));
    }
    let mut sum = Map::new();
    sum.insert("expectation".into(), json!(expectation));
    sum.insert("route".into(), json!(route));
    if a.anchors.is_none() && mode == CellMode::Hu && a.n > 0 {
        let t = multi::p_table(&fx, a.n, &cfg)?;
        sum.insert("expectation_formula".into(), json!(multi::expected_gamma_hu_f64(a.n, m, &t[1..])?));
        if fx.family() == Family::Uniform && a.n + m <= 170 {
            sum.insert("expectation_exact".into(), json!(multi::expected_gamma_hu_uniform(a.n, m)?.to_string()));
        }
    }
    rep.summary = Some(Value::Object(sum));
    Ok(rep)
}

fn table_cmd(a: TableArgs, c: &Common) -> Result<Report> {
    let cfg = quad_cfg(c)?;
    let config = json!({ "command": "table", "published": a.published, "rel_tol": c.rel_tol });
    let rows = published_table(a.published, &cfg)?;
    let mut rep = Report::new(
        config,
        &["label", "published_value", "computed_value", "method", "abs_diff", "tolerance", "relation", "pass"],
    );
    let failed = rows.iter().filter(|r| !r.pass).count();
    for r in &rows {
        rep.rows.push(serde_json::to_value(r)?);
    }
    rep.summary = Some(json!({ "rows": rows.len(), "failed": failed }));
    if failed > 0 {
        rep.exit = EXIT_MISMATCH;
    }
    Ok(rep)
}

fn selftest_cmd(a: SelftestArgs, c: &Common) -> Result<Report> {
    let cfg = quad_cfg(c)?;
    let config = json!({ "command": "selftest", "seed": a.seed, "mutate": a.mutate, "rel_tol": c.rel_tol });
    let checks = selftest(a.seed, a.mutate, &cfg)?;
    let mut rep = Report::new(config, &["name", "passed", "detail"]);
    let failed = checks.iter().filter(|x| !x.passed).count();
    for x in &checks {
        rep.rows.push(serde_json::to_value(x)?);
    }
    rep.summary = Some(json!({ "checks": checks.len(), "failed": failed }));
    if failed > 0 {
        rep.exit = EXIT_FAILURE;
    }
    Ok(rep)
}

fn domination_cmd(a: DominationArgs) -> Result<Report> {
    let inst = match (&a.input, &a.xs, &a.ys) {
        (Some(p), _, _) => {
            let text = std::fs::read_to_string(p)?;
            if text.trim_start().starts_with('{') {
                CccdInstance::from_json(&text)?
            } else {
                CccdInstance::from_text(&text)?
            }
        }
        (None, Some(xs), Some(ys)) => CccdInstance::new(xs.clone(), ys.clone())?,
        _ => return Err(CccdError::param("input", "give --input or both --xs and --ys")),
    };
    let config = json!({ "command": "domination", "xs": inst.xs(), "ys": inst.ys() });
    let r = inst.domination_number_fast();
    let mut rep = Report::new(config, &["j", "count", "gamma"]);
    for cell in &r.per_interval {
        rep.rows.push(serde_json::to_value(cell)?);
    }
    let oracle = if inst.n() <= crate::digraph::ORACLE_MAX_N {
        Some(inst.domination_number_oracle()?)
    } else {
        None
    };
    let (k1, k2) = inst.upper_bound_terms();
    rep.summary = Some(json!({
        "gamma": r.total,
        "dominating_set": r.dominating_set,
        "boundary_hits": r.boundary_hits,
        "oracle": oracle,
        "bound": 2 * k1 + k2,
    }));
    if oracle.is_some_and(|o| o != r.total) {
        rep.exit = EXIT_FAILURE;
    }
    Ok(rep)
}

fn curves_cmd(a: CurvesArgs, c: &Common) -> Result<Report> {
    let fx = parse_density(&a.density)?;
    let cfg = quad_cfg(c)?;
    match a.kind {
        CurveKind::Density => {
            if a.points < 2 {
                return Err(CccdError::range("points", a.points, "points >= 2"));
            }
            let config = json!({ "command": "curves", "kind": "density", "density": spec_value(&fx), "points": a.points });
            let mut rep = Report::new(config, &["x", "pdf", "cdf"]);
            let s = fx.support();
            for i in 0..a.points {
                let x = s.lo + s.width() * i as f64 / (a.points - 1) as f64;
                rep.rows.push(json!({ "x": x, "pdf": fx.pdf(x), "cdf": fx.cdf(x) }));
            }
            Ok(rep)
        }
        CurveKind::Pn => {
            let config = json!({
                "command": "curves",
                "kind": "pn",
                "density": spec_value(&fx),
                "n_max": a.n_max,
                "rel_tol": c.rel_tol,
            });
            let mut rep = Report::new(config, &["n", "value", "method", "error_bound"]);
            let ns: Vec<usize> = (1..=a.n_max).collect();
            let vals = parallel::map(ns, |n| exact::p_deterministic(&fx, n, &cfg));
            for v in vals {
                let r = v?;
                rep.rows.push(json!({ "n": r.n, "value": r.value, "method": r.method, "error_bound": r.abs_error_bound }));
            }
            rep.summary = Some(json!({ "p_limit": asymptotics::p_limit(&fx).ok().map(|r| r.p_limit) }));
            Ok(rep)
        }
    }
}
