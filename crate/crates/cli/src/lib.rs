//! Command-line front end: loads fan, model, graph and sheaf files, runs one
//! computation and prints an exact result.
//!
//! Exit codes: 0 on success, 1 on a domain error (one diagnostic line on
//! stderr), 2 on a usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use nsi_core::chern::{self, SheafData};
use nsi_core::exact::Rat;
use nsi_core::ktheory::{self, LimitResult};
use nsi_core::resolution::{graph_from_hj, hj_expand, ExceptionalCurve, ResolutionGraph};
use nsi_core::surface::{ModelFile, NormalSurfaceModel, WeilClass};
use nsi_core::toric::{self, export_surface_model, smooth_gram, ExportedModel, Fan, FanFile, TorusDivisor};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

type CliResult<T> = Result<T, CliError>;

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "nsi", version, about = "Exact intersection numbers on normal surfaces and toric varieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a fan, surface model or resolution graph.
    Validate(Source),
    /// Minimal resolution of a rank-2 fan, or the chain of a cyclic quotient 1/n(1,q).
    Resolve(ResolveArgs),
    /// Mumford pullback of a divisor.
    Pullback(DivisorArgs),
    /// Mumford intersection number D1.D2.
    Pair(DivisorArgs),
    /// Euler characteristic of O(D) on a toric variety.
    Chi(DivisorArgs),
    /// Intersection number from the limit of Euler characteristics.
    LimitPair(LimitArgs),
    /// Second Chern character of O(D) from Frobenius multiples.
    FrobeniusCh2(FrobeniusArgs),
    /// Discrepancies of the exceptional curves.
    Discrepancy(Source),
    /// Riemann-Roch defect of O(D) on a toric surface.
    RrDefect(DivisorArgs),
    /// Range of Riemann-Roch defects over a box of divisors.
    DefectSweep(SweepArgs),
    /// Surface model of the minimal resolution of a rank-2 fan, as JSON.
    ExportModel(ExportArgs),
    /// Discriminant of sheaf data and the Bogomolov predicate.
    Bogomolov(BogomolovArgs),
}

#[derive(Args, Debug, Default)]
struct Source {
    /// Fan file (JSON: rank, rays, cones).
    #[arg(long)]
    fan: Option<PathBuf>,
    /// Surface model file, or a fan file (detected by its "rays" key).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Resolution graph file (JSON: curves, edges).
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Divisors {
    /// Divisor coefficients, comma separated, in ray or basis order.
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d2: Option<String>,
    /// Cartier twist, repeatable (rank-3 fans need one).
    #[arg(long = "l", allow_hyphen_values = true)]
    l: Vec<String>,
    /// JSON file with any of d, d1, d2, l; overrides the flags.
    #[arg(long)]
    divisors: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DivisorArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    divisors: Divisors,
}

#[derive(Args, Debug)]
struct ResolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    q: Option<i64>,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    divisors: Divisors,
    /// Force the quasi-polynomial period.
    #[arg(long)]
    period: Option<u64>,
    /// Write the convergence table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrobeniusArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    divisors: Divisors,
    #[arg(long)]
    p: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 3)]
    bound: i64,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BogomolovArgs {
    #[command(flatten)]
    source: Source,
    /// Sheaf data (JSON: rank, c1, local_c2, smooth_c2). With a fan source,
    /// c1 is read in fan-ray order.
    #[arg(long)]
    sheaf: PathBuf,
}

#[derive(Deserialize, Default)]
struct DivisorFile {
    d: Option<Vec<i64>>,
    d1: Option<Vec<i64>>,
    d2: Option<Vec<i64>>,
    #[serde(default)]
    l: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct GraphFile {
    curves: Vec<ExceptionalCurve>,
    #[serde(default)]
    edges: Vec<(usize, usize, i64)>,
}

/// Resolved divisor inputs: files win over flags.
struct DivisorInput {
    d: Option<Vec<i64>>,
    d1: Option<Vec<i64>>,
    d2: Option<Vec<i64>>,
    l: Vec<Vec<i64>>,
}

fn parse_coeffs(s: &str) -> CliResult<Vec<i64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Usage(format!("invalid coefficient list {s:?}")))
        })
        .collect()
}

impl Divisors {
    fn resolve(&self) -> CliResult<DivisorInput> {
        let file: DivisorFile = match &self.divisors {
            Some(p) => parse_json(p)?,
            None => DivisorFile::default(),
        };
        let flag = |s: &Option<String>| s.as_deref().map(parse_coeffs).transpose();
        let l = if file.l.is_empty() {
            self.l.iter().map(|s| parse_coeffs(s)).collect::<CliResult<_>>()?
        } else {
            file.l
        };
        Ok(DivisorInput {
            d: file.d.map(Ok).or_else(|| flag(&self.d).transpose()).transpose()?,
            d1: file.d1.map(Ok).or_else(|| flag(&self.d1).transpose()).transpose()?,
            d2: file.d2.map(Ok).or_else(|| flag(&self.d2).transpose()).transpose()?,
            l,
        })
    }
}

impl DivisorInput {
    fn need(v: &Option<Vec<i64>>, name: &str) -> CliResult<Vec<i64>> {
        v.clone().ok_or_else(|| CliError::Usage(format!("missing --{name}")))
    }

    /// `--d`, falling back to `--d1`.
    fn single(&self) -> CliResult<Vec<i64>> {
        match (&self.d, &self.d1) {
            (Some(d), _) | (None, Some(d)) => Ok(d.clone()),
            _ => Err(CliError::Usage("missing --d".into())),
        }
    }

    /// `(--d1, --d2)`, with `--d` accepted for the first slot.
    fn pair(&self) -> CliResult<(Vec<i64>, Vec<i64>)> {
        let first = match (&self.d1, &self.d) {
            (Some(d), _) | (None, Some(d)) => d.clone(),
            _ => return Err(CliError::Usage("missing --d1".into())),
        };
        Ok((first, Self::need(&self.d2, "d2")?))
    }

    fn twists(&self) -> Vec<TorusDivisor> {
        self.l.iter().cloned().map(TorusDivisor).collect()
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("ParseError in {}: {e}", path.display())))
}

fn load_fan(path: &Path) -> CliResult<Fan> {
    let file: FanFile = parse_json(path)?;
    Fan::from_file(file).map_err(domain)
}

/// A surface given either as a rank-2 fan (divisors in ray order) or as an
/// explicit model (divisors in basis order).
enum Surface {
    Toric { fan: Fan, exported: Box<ExportedModel> },
    Model(NormalSurfaceModel),
}

impl Surface {
    fn model(&self) -> &NormalSurfaceModel {
        match self {
            Surface::Toric { exported, .. } => &exported.model,
            Surface::Model(m) => m,
        }
    }

    fn class(&self, coeffs: &[i64]) -> CliResult<WeilClass> {
        match self {
            Surface::Toric { fan, exported } => {
                let d = TorusDivisor(coeffs.to_vec());
                fan.check_divisor(&d).map_err(domain)?;
                Ok(exported.weil_class(&d))
            }
            Surface::Model(m) => {
                if coeffs.len() != m.dim() {
                    return Err(CliError::Domain(format!(
                        "DimensionMismatch: expected {}, found {}",
                        m.dim(),
                        coeffs.len()
                    )));
                }
                Ok(WeilClass(coeffs.to_vec()))
            }
        }
    }
}

fn toric_surface(fan: Fan) -> CliResult<Surface> {
    let exported = export_surface_model(&fan).map_err(domain)?;
    Ok(Surface::Toric {
        fan,
        exported: Box::new(exported),
    })
}

fn load_surface(source: &Source) -> CliResult<Surface> {
    if let Some(path) = &source.fan {
        return toric_surface(load_fan(path)?);
    }
    let path = source
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing --model or --fan".into()))?;
    let value: serde_json::Value = parse_json(path)?;
    if value.get("rays").is_some() {
        let file: FanFile = serde_json::from_value(value).map_err(domain)?;
        return toric_surface(Fan::from_file(file).map_err(domain)?);
    }
    let file: ModelFile = serde_json::from_value(value)
        .map_err(|e| CliError::Domain(format!("ParseError in {}: {e}", path.display())))?;
    Ok(Surface::Model(NormalSurfaceModel::from_file(file).map_err(domain)?))
}

/// The fan behind `--fan`, or behind `--model` when that file is a fan.
fn load_any_fan(source: &Source) -> CliResult<Fan> {
    let path = source
        .fan
        .as_ref()
        .or(source.model.as_ref())
        .ok_or_else(|| CliError::Usage("missing --fan".into()))?;
    load_fan(path)
}

fn load_graph(path: &Path) -> CliResult<ResolutionGraph> {
    let file: GraphFile = parse_json(path)?;
    ResolutionGraph::new(file.curves, &file.edges).map_err(domain)
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(format!("SinkFailure: {e}"))
}

/// Writes the convergence table of a limit run.
pub fn emit_convergence_csv(result: &LimitResult, sink: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["m", "chi", "two_chi_over_m2"])?;
    for &(m, chi) in &result.samples {
        let ratio = Rat::from(2 * chi) / Rat::from((m * m) as i64);
        w.write_record([m.to_string(), chi.to_string(), ratio.to_decimal_string(6)])?;
    }
    w.write_record(["limit".to_string(), result.value.to_fraction_string()])?;
    w.flush()
}

fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Validate(src) => {
            if let Some(g) = &src.graph {
                load_graph(g)?.validate().map_err(domain)?;
            } else if let Some(f) = &src.fan {
                load_fan(f)?;
            } else {
                load_surface(&src)?;
            }
            writeln!(out, "ok").map_err(io_err)
        }
        Command::Resolve(args) => resolve(args, out),
        Command::Pullback(args) => {
            let surface = load_surface(&args.source)?;
            let d = args.divisors.resolve()?.single()?;
            let model = surface.model();
            let p = model.mumford_pullback(&surface.class(&d)?).map_err(domain)?;
            let mut w = csv_writer(out);
            w.write_record(["basis", "coefficient"]).map_err(io_err)?;
            for (name, c) in model.basis().iter().zip(p.iter()) {
                w.write_record([name.clone(), c.to_fraction_string()]).map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Command::Pair(args) => {
            let surface = load_surface(&args.source)?;
            let (d1, d2) = args.divisors.resolve()?.pair()?;
            let v = surface
                .model()
                .pair(&surface.class(&d1)?, &surface.class(&d2)?)
                .map_err(domain)?;
            writeln!(out, "{v}").map_err(io_err)
        }
        Command::Chi(args) => {
            let fan = load_any_fan(&args.source)?;
            let d = args.divisors.resolve()?.single()?;
            let r = toric::chi(&fan, &TorusDivisor(d)).map_err(domain)?;
            writeln!(out, "{}", r.chi).map_err(io_err)
        }
        Command::LimitPair(args) => {
            let fan = load_any_fan(&args.source)?;
            let input = args.divisors.resolve()?;
            let ls = input.twists();
            if input.d2.is_some() {
                let (d1, d2) = input.pair()?;
                let v = ktheory::pair_limit(&fan, &TorusDivisor(d1), &TorusDivisor(d2), &ls).map_err(domain)?;
                return writeln!(out, "{v}").map_err(io_err);
            }
            let d = TorusDivisor(input.single()?);
            let result = ktheory::self_pair_limit_with_period(&fan, &d, &ls, args.period).map_err(domain)?;
            match &args.output {
                Some(path) => {
                    let mut buf = Vec::new();
                    emit_convergence_csv(&result, &mut buf).map_err(io_err)?;
                    fs::write(path, buf).map_err(io_err)?;
                    writeln!(out, "{}", result.value).map_err(io_err)
                }
                None => emit_convergence_csv(&result, out).map_err(io_err),
            }
        }
        Command::FrobeniusCh2(args) => {
            let fan = load_any_fan(&args.source)?;
            let input = args.divisors.resolve()?;
            let d = TorusDivisor(input.single()?);
            let v = ktheory::frobenius_ch2_limit(&fan, &d, args.p, &input.twists()).map_err(domain)?;
            writeln!(out, "{v}").map_err(io_err)
        }
        Command::Discrepancy(src) => discrepancy(src, out),
        Command::RrDefect(args) => {
            let fan = load_any_fan(&args.source)?;
            let d = TorusDivisor(args.divisors.resolve()?.single()?);
            let report = chern::rr_defect(&fan, &d).map_err(domain)?;
            let mut w = csv_writer(out);
            w.write_record(["group", "defect"]).map_err(io_err)?;
            for (g, a) in &report.per_point {
                w.write_record([g.to_string(), a.to_fraction_string()]).map_err(io_err)?;
            }
            w.write_record(["total".to_string(), report.total_defect.to_fraction_string()])
                .map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        Command::DefectSweep(args) => {
            let fan = load_any_fan(&args.source)?;
            if args.bound < 0 {
                return Err(CliError::Usage("--bound must be non-negative".into()));
            }
            let values = chern::defect_values(&fan, args.bound).map_err(domain)?;
            let min = values.first().cloned().unwrap_or_else(Rat::zero);
            let max = values.last().cloned().unwrap_or_else(Rat::zero);
            let listed: Vec<String> = values.iter().map(Rat::to_fraction_string).collect();
            let mut w = csv_writer(out);
            w.write_record(["statistic", "value"]).map_err(io_err)?;
            w.write_record(["min".to_string(), min.to_fraction_string()]).map_err(io_err)?;
            w.write_record(["max".to_string(), max.to_fraction_string()]).map_err(io_err)?;
            w.write_record(["values".to_string(), listed.join(";")]).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        Command::ExportModel(args) => {
            let fan = load_any_fan(&args.source)?;
            let exported = export_surface_model(&fan).map_err(domain)?;
            let mut text = serde_json::to_string_pretty(&exported.model.to_file()).map_err(domain)?;
            text.push('\n');
            match &args.output {
                Some(path) => fs::write(path, text).map_err(io_err),
                None => out.write_all(text.as_bytes()).map_err(io_err),
            }
        }
        Command::Bogomolov(args) => {
            let surface = load_surface(&args.source)?;
            let mut data: SheafData = parse_json(&args.sheaf)?;
            if matches!(surface, Surface::Toric { .. }) {
                data.c1 = surface.class(&data.c1.0)?;
            }
            let model = surface.model();
            let delta = chern::delta(&data, model).map_err(domain)?;
            let ok = chern::bogomolov_check(&data, model).map_err(domain)?;
            writeln!(out, "delta,{}\nbogomolov,{ok}", delta.to_fraction_string()).map_err(io_err)
        }
    }
}

fn resolve(args: ResolveArgs, out: &mut dyn Write) -> CliResult<()> {
    if let (Some(n), Some(q)) = (args.n, args.q) {
        let bs = hj_expand(n, q).map_err(domain)?;
        let graph = graph_from_hj(n, q).map_err(domain)?;
        let det = graph.gram().determinant().map_err(domain)?;
        let list: Vec<String> = bs.iter().map(|b| (-b).to_string()).collect();
        return writeln!(out, "chain,{}\ndeterminant,{det}", list.join(";")).map_err(io_err);
    }
    if args.n.is_some() || args.q.is_some() {
        return Err(CliError::Usage("--n and --q must be given together".into()));
    }
    let fan = load_any_fan(&args.source)?;
    let res = toric::resolve_fan_2d(&fan).map_err(domain)?;
    let gram = smooth_gram(&res.fan).map_err(domain)?;
    let mut w = csv_writer(out);
    w.write_record(["index", "ray", "origin", "self_intersection"]).map_err(io_err)?;
    for j in 0..res.fan.num_rays() {
        let v = res.fan.ray(j);
        let origin = match (res.original[j], res.group_of(j)) {
            (Some(i), _) => format!("D{i}"),
            (None, Some(g)) => format!("E{g}"),
            (None, None) => unreachable!("resolved ray without origin"),
        };
        w.write_record([
            j.to_string(),
            format!("({},{})", v[0], v[1]),
            origin,
            gram[(j, j)].to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn discrepancy(src: Source, out: &mut dyn Write) -> CliResult<()> {
    let mut rows: Vec<(usize, String, Rat)> = Vec::new();
    if let Some(path) = &src.graph {
        let graph = load_graph(path)?;
        let a = graph.discrepancies().map_err(domain)?;
        for (c, v) in graph.curves().iter().zip(a.iter()) {
            rows.push((0, c.label.clone(), v.clone()));
        }
    } else {
        let surface = load_surface(&src)?;
        let model = surface.model();
        let all = model.discrepancies().map_err(domain)?;
        for (g, (group, a)) in model.exceptional_groups().iter().zip(&all).enumerate() {
            for (&j, v) in group.iter().zip(a.iter()) {
                rows.push((g, model.basis()[j].clone(), v.clone()));
            }
        }
    }
    let mut w = csv_writer(out);
    w.write_record(["group", "curve", "discrepancy"]).map_err(io_err)?;
    for (g, label, v) in rows {
        w.write_record([g.to_string(), label, v.to_fraction_string()]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn parse_and_dispatch<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
        Err(CliError::Domain(msg)) => {
            let _ = writeln!(err, "{}", msg.lines().next().unwrap_or_default());
            1
        }
    }
}
