// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use qsd_core::bounds::{self, BoundCurve, CurveKind};
use qsd_core::doob::{self, DoobChain};
use qsd_core::evolution::{self, Propagator};
use qsd_core::funineq::{self, LsiMode};
use qsd_core::montecarlo::{self, SimConfig};
use qsd_core::spectral::{self, PerronData, TimeKind};
use qsd_core::{models, parse_model, serialize_model, verify, AbsorbingChain, ProbDist, QsdError};

/// Quasi-stationary analysis of finite absorbing Markov chains.
#[derive(Parser, Debug)]
#[command(name = "qsd", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Perron data, Doob transform, functional constants and bound curves.
    Analyze(AnalyzeArgs),
    /// Exact conditioned evolution against the bound curves.
    Evolve(EvolveArgs),
    /// Monte Carlo absorption times and conditioned-law estimates.
    Simulate(SimulateArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Print a model in canonical file form, or list the builtins.
    Model(ModelArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// Model file path or `builtin:name?key=value`.
    source: Option<String>,
    /// Model file (JSON).
    #[arg(long, conflicts_with_all = ["source", "builtin"])]
    model: Option<PathBuf>,
    /// Builtin spec, with or without the `builtin:` prefix.
    #[arg(long, conflicts_with = "source")]
    builtin: Option<String>,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report total variation as max |μ(A) - ν(A)| instead of Σ|μ - ν|.
    #[arg(long)]
    probabilist_tv: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = spectral::DEFAULT_EIGEN_TOL)]
    tol_eigen: f64,
    /// Random restarts for the log-Sobolev search; 0 keeps the bracket only.
    #[arg(long, default_value_t = 50)]
    lsi_restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    output: Output,
    /// State label, `nu`, `worst`, or a JSON file with a law.
    #[arg(long, default_value = "worst")]
    init: String,
    #[arg(long)]
    tmin: Option<f64>,
    /// Defaults to the time the best bound curve reaches 1e-6.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value_t = 50)]
    tcount: usize,
    #[arg(long, value_enum, default_value_t = Scale::Log)]
    tscale: Scale,
    #[arg(long, default_value_t = spectral::DEFAULT_EIGEN_TOL)]
    tol_eigen: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    output: Output,
    /// State label, `nu`, or a JSON file with a law.
    #[arg(long, default_value = "nu")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trajectories.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Censoring time (steps for discrete chains); defaults to 20/λ₁.
    #[arg(long, alias = "tmax")]
    horizon: Option<f64>,
    /// Time of the conditioned-law estimate; defaults to min(horizon, 1/λ₁).
    #[arg(long)]
    at: Option<f64>,
    #[arg(long, default_value_t = 10)]
    tcount: usize,
    #[arg(long, default_value_t = spectral::DEFAULT_EIGEN_TOL)]
    tol_eigen: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Criterion number or tag, e.g. `3.1`.
    #[arg(long)]
    only: Option<String>,
    /// Machine-readable report.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[command(flatten)]
    source: Source,
    /// List builtin families and exit.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    /// Input file problems count as model errors.
    Model(String),
    Core(QsdError),
    /// The suite ran and something failed; the report is already written.
    Verification,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Verification => 1,
            Failure::Model(_) => 2,
            Failure::Core(e) => e.exit_code() as u8,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Model(m) => write!(f, "model: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Verification => write!(f, "verification failed"),
        }
    }
}

impl From<QsdError> for Failure {
    fn from(e: QsdError) -> Self {
        Failure::Core(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Evolve(a) => evolve(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => run_verify(&a),
        Command::Model(a) => model(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qsd: {e}");
            ExitCode::from(e.code())
        }
    }
}

struct Loaded {
    label: String,
    chain: AbsorbingChain,
    hash: String,
}

fn load(src: &Source) -> Res<Loaded> {
    let (label, chain) = match (&src.source, &src.model, &src.builtin) {
        (Some(s), None, None) if s.starts_with("builtin:") => (s.clone(), models::builtin(s)?),
        (Some(s), None, None) => (s.clone(), load_file(Path::new(s))?),
        (None, Some(p), None) => (p.display().to_string(), load_file(p)?),
        (None, None, Some(b)) => {
            let spec = if b.starts_with("builtin:") { b.clone() } else { format!("builtin:{b}") };
            (spec.clone(), models::builtin(&spec)?)
        }
        (None, None, None) => return Err(Failure::Usage("no model given; pass a file, --model or --builtin".into())),
        _ => return Err(Failure::Usage("give exactly one model source".into())),
    };
    // hash the canonical form so a builtin and its exported file agree
    let digest = Sha256::digest(serialize_model(&chain).as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { label, chain, hash })
}

fn load_file(path: &Path) -> Res<AbsorbingChain> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Model(format!("{}: {e}", path.display())))?;
    Ok(parse_model(&text)?)
}

fn check_tol(tol: f64) -> Res<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--tol-eigen must be positive, got {tol}")))
    }
}

fn meta(loaded: &Loaded, tol_eigen: f64, probabilist_tv: bool) -> Value {
    json!({
        "tool": "qsd",
        "version": env!("CARGO_PKG_VERSION"),
        "model": loaded.label,
        "model_sha256": loaded.hash,
        "tolerances": {
            "eigen": tol_eigen,
            "reversibility": spectral::REVERSIBILITY_TOL,
            "survival_floor": evolution::SURVIVAL_FLOOR,
        },
        "tv_convention": if probabilist_tv { "probabilist" } else { "analyst" },
    })
}

fn write_out(out: Option<&Path>, body: &str) -> Res<()> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// JSON documents embed the metadata; CSV tables put it in `<out>.meta.json`,
/// or on stderr when writing to stdout.
fn emit(output: &Output, meta: Value, doc: Value, table: Option<Table>) -> Res<()> {
    match (output.format, table) {
        (Format::Csv, Some(t)) => {
            write_out(output.out.as_deref(), &t.to_csv())?;
            let meta = serde_json::to_string_pretty(&meta).expect("json");
            match &output.out {
                Some(p) => {
                    let mut side = p.clone().into_os_string();
                    side.push(".meta.json");
                    write_out(Some(Path::new(&side)), &(meta + "\n"))
                }
                None => {
                    eprintln!("{meta}");
                    Ok(())
                }
            }
        }
        (Format::Csv, None) => Err(Failure::Usage("this command has no tabular output; use --format json".into())),
        (Format::Json, _) => {
            let mut obj = Map::new();
            obj.insert("meta".into(), meta);
            if let Value::Object(m) = doc {
                obj.extend(m);
            }
            write_out(output.out.as_deref(), &(serde_json::to_string_pretty(&Value::Object(obj)).expect("json") + "\n"))
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let line = |cells: &[String]| cells.iter().map(|c| evolution::csv_field(c)).collect::<Vec<_>>().join(",");
        let mut out = line(&self.header);
        out.push_str("\r\n");
        for r in &self.rows {
            out.push_str(&line(r));
            out.push_str("\r\n");
        }
        out
    }
}

/// Shortest round-trip decimal; empty for missing values.
fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

struct Analysis {
    p: PerronData,
    d: DoobChain,
    lambda2: Option<f64>,
    constants: funineq::FunctionalConstants,
    curves: Vec<BoundCurve>,
}

fn analysis(chain: &AbsorbingChain, tol: f64, lsi: Option<LsiMode>) -> Res<Analysis> {
    let p = spectral::perron_with_tol(chain, tol)?;
    let d = doob::doob(chain, &p)?;
    let lambda2 = if p.reversible { spectral::dirichlet_spectrum(chain)?.lambda2 } else { None };
    let constants = funineq::functional_constants(chain, &p, &d, lsi)?;
    let curves = bounds::applicable_curves(&p, &constants, lambda2)?;
    Ok(Analysis { p, d, lambda2, constants, curves })
}

fn vec_json(v: impl IntoIterator<Item = f64>) -> Value {
    Value::from(v.into_iter().collect::<Vec<f64>>())
}

fn law_json(states: &[String], m: &ProbDist) -> Value {
    let mut obj = Map::new();
    for (s, w) in states.iter().zip(m.weights()) {
        obj.insert(s.clone(), json!(w));
    }
    Value::Object(obj)
}

fn analyze(args: &AnalyzeArgs) -> Res<()> {
    check_tol(args.tol_eigen)?;
    let loaded = load(&args.source)?;
    let mode = if args.lsi_restarts == 0 {
        LsiMode::Bracket
    } else {
        LsiMode::Optimize { restarts: args.lsi_restarts, seed: args.seed }
    };
    let chain = &loaded.chain;
    let a = analysis(chain, args.tol_eigen, Some(mode))?;
    let p = &a.p;
    let states = chain.states().labels();
    let tvs = if args.output.probabilist_tv { 0.5 } else { 1.0 };
    let spectrum = spectral::dirichlet_spectrum(chain)?;
    let curves: Vec<Value> = a
        .curves
        .iter()
        .map(|c| {
            json!({
                "kind": c.kind.name(),
                "prefactor": c.prefactor * tvs,
                "rate": c.rate,
                "mixing_time": {
                    "1": c.mixing_time(1.0 / tvs),
                    "1e-3": c.mixing_time(1e-3 / tvs),
                    "1e-6": c.mixing_time(1e-6 / tvs),
                },
            })
        })
        .collect();
    let doc = json!({
        "states": states,
        "time": match p.kind { TimeKind::Continuous => "continuous", TimeKind::Discrete => "discrete" },
        "irreducible": chain.is_irreducible(),
        "lambda1": p.lambda1,
        "beta": p.beta,
        "lambda2": a.lambda2,
        "reversible": p.reversible,
        "dirichlet_spectrum": spectrum.eigenvalues.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        "phi": vec_json(p.phi.iter().copied()),
        "phi_star": vec_json(p.phi_star.iter().copied()),
        "phi_ratio": p.ratio,
        "nu": law_json(states, &p.nu),
        "eta": p.eta.as_ref().map(|e| law_json(states, e)),
        "doob_invariant": law_json(states, &a.d.invariant),
        "doob_spectrum_shift_defect": doob::spectrum_shift_defect(chain, p, &a.d)?,
        "gap_tilde": a.constants.gap_tilde,
        "gap_base": a.constants.gap_base,
        "gap_comparison_bound": a.constants.gap_comparison,
        "lsi": a.constants.lsi,
        "path_bound": a.constants.path,
        "curves": curves,
    });
    emit(&args.output, meta(&loaded, args.tol_eigen, args.output.probabilist_tv), doc, None)
}

enum Init {
    Law(ProbDist),
    Worst,
}

fn parse_init(text: &str, chain: &AbsorbingChain, p: &PerronData, allow_worst: bool) -> Res<Init> {
    let states = chain.states();
    match text {
        "nu" => return Ok(Init::Law(p.nu.clone())),
        "worst" if allow_worst => return Ok(Init::Worst),
        "worst" => return Err(Failure::Usage("`worst` is only meaningful for evolve".into())),
        _ => {}
    }
    if let Some(i) = states.index_of(text) {
        return Ok(Init::Law(ProbDist::dirac(states.len(), i)));
    }
    let path = Path::new(text);
    if !path.is_file() {
        return Err(Failure::Usage(format!("--init `{text}` is neither nu, worst, a state label nor a file")));
    }
    let raw = fs::read_to_string(path).map_err(|e| Failure::Model(format!("{text}: {e}")))?;
    let value: Value = serde_json::from_str(&raw).map_err(|e| Failure::Model(format!("{text}: {e}")))?;
    let weights: Vec<f64> = match value {
        Value::Array(xs) => xs
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Failure::Model(format!("{text}: non-numeric weight {x}"))))
            .collect::<Res<_>>()?,
        Value::Object(m) => {
            let mut w = vec![0.0; states.len()];
            for (k, v) in m {
                let i = states.index_of(&k).ok_or_else(|| Failure::Model(format!("{text}: unknown state `{k}`")))?;
                w[i] = v.as_f64().ok_or_else(|| Failure::Model(format!("{text}: non-numeric weight for `{k}`")))?;
            }
            w
        }
        _ => return Err(Failure::Model(format!("{text}: expected an array or an object of weights"))),
    };
    if weights.len() != states.len() {
        return Err(QsdError::DimensionMismatch(format!("initial law has {} entries, chain has {} states", weights.len(), states.len())).into());
    }
    Ok(Init::Law(ProbDist::from_unnormalized(&weights)?))
}

fn grid(args: &EvolveArgs, kind: TimeKind, default_stop: f64) -> Res<Vec<f64>> {
    let log = args.tscale == Scale::Log;
    let stop = args.tmax.unwrap_or(default_stop);
    let start = args.tmin.unwrap_or(if log { (stop * 1e-4).min(1e-2) } else { 0.0 });
    if args.tcount == 0 || !(stop >= start) || !(start >= 0.0) || (log && start <= 0.0) {
        return Err(Failure::Usage(format!(
            "time grid needs count >= 1 and stop >= start >= 0 (start > 0 on a log scale), got {start}..{stop} x {}",
            args.tcount
        )));
    }
    let mut times = evolution::time_grid(start, stop, args.tcount, log)?;
    if kind == TimeKind::Discrete {
        for t in &mut times {
            *t = t.round();
        }
        times.dedup();
    }
    Ok(times)
}

fn evolve(args: &EvolveArgs) -> Res<()> {
    check_tol(args.tol_eigen)?;
    let loaded = load(&args.source)?;
    let chain = &loaded.chain;
    let a = analysis(chain, args.tol_eigen, Some(LsiMode::Bracket))?;
    let p = &a.p;
    let init = parse_init(&args.init, chain, p, true)?;
    let main_curve = a
        .curves
        .iter()
        .find(|c| c.kind == CurveKind::Thm3A)
        .or_else(|| a.curves.iter().find(|c| c.kind == CurveKind::Thm2))
        .copied();
    let lsi_curve = a
        .curves
        .iter()
        .find(|c| c.kind == CurveKind::LsiReversible)
        .or_else(|| a.curves.iter().find(|c| c.kind == CurveKind::Lsi))
        .copied();
    let default_stop = match (main_curve, p.kind) {
        (Some(c), _) => c.mixing_time(1e-6).max(1.0),
        (None, TimeKind::Discrete) => (14.0 / p.lambda1).ceil().max(1.0),
        (None, TimeKind::Continuous) => 14.0 / p.lambda1,
    };
    let times = grid(args, p.kind, default_stop)?;
    let prop = Propagator::new(chain, p)?;
    let half = if args.output.probabilist_tv { 0.5 } else { 1.0 };
    let lo2 = (1.0 / p.ratio).powi(2);
    let hi2 = p.ratio.powi(2);
    let tol = 1e-9;

    let mut rows = Vec::with_capacity(times.len());
    let mut json_rows = Vec::with_capacity(times.len());
    let mut violations = 0usize;
    for &t in &times {
        let (mu0, worst_state) = match &init {
            Init::Law(m) => (m.clone(), None),
            Init::Worst => {
                let (_, x) = evolution::worst_case_tv(&prop, &p.nu, t)?;
                (ProbDist::dirac(chain.n(), x), Some(x))
            }
        };
        let (law, survival) = prop.propagate(&mu0, t)?;
        let dl = evolution::doob_law(&a.d, &evolution::doob_initial(p, &mu0)?, t)?;
        let base = evolution::distances(&law, &p.nu).ok();
        let tilde = evolution::distances(&dl, &a.d.invariant).ok();
        let actual = evolution::tv_distance(&law, &p.nu);
        let env = bounds::thm1_envelope_with(&prop, p, &a.d, &mu0, t).ok();
        let main = main_curve.map(|c| c.eval(t));
        let lsi = lsi_curve.map(|c| c.eval(t));

        let above = |b: Option<f64>| b.is_some_and(|b| actual > b * (1.0 + tol) + tol * 1e-3);
        let flag_main = above(main);
        let flag_lsi = above(lsi);
        let flag_env = env.is_some_and(|e| e.slack() < -tol);
        let flag_sandwich = match (base, tilde) {
            (Some(b), Some(d)) => {
                let slack = tol * (1.0 + d.chi2 * hi2);
                let ent = tol * (1.0 + d.kl * p.ratio);
                b.chi2 < lo2 * d.chi2 - slack || b.chi2 > hi2 * d.chi2 + slack || b.kl < d.kl / p.ratio - ent || b.kl > p.ratio * d.kl + ent
            }
            _ => false,
        };
        let any = flag_main || flag_lsi || flag_env || flag_sandwich;
        violations += usize::from(any);

        let scale = |v: Option<f64>| v.map(|x| x * half);
        let mut row = vec![
            cell(Some(t)),
            cell(Some(survival)),
            cell(Some(actual * half)),
            cell(scale(main)),
            cell(scale(lsi)),
            cell(base.map(|b| b.chi2)),
            cell(tilde.map(|b| b.chi2)),
            cell(base.map(|b| b.kl)),
            cell(tilde.map(|b| b.kl)),
            cell(scale(env.map(|e| e.lower))),
            cell(scale(env.map(|e| e.upper))),
        ];
        if matches!(init, Init::Worst) {
            row.push(worst_state.map(|x| chain.states().labels()[x].clone()).unwrap_or_default());
        }
        row.extend([flag_main, flag_lsi, flag_env, flag_sandwich].map(|f| u8::from(f).to_string()));
        rows.push(row);
        json_rows.push(json!({
            "t": t,
            "survival": survival,
            "tv_actual": actual * half,
            "tv_bound": scale(main),
            "tv_lsi": scale(lsi),
            "I_t": base.map(|b| b.chi2),
            "I_tilde_t": tilde.map(|b| b.chi2),
            "J_t": base.map(|b| b.kl),
            "J_tilde_t": tilde.map(|b| b.kl),
            "thm1_lower": scale(env.map(|e| e.lower)),
            "thm1_upper": scale(env.map(|e| e.upper)),
            "worst_state": worst_state.map(|x| chain.states().labels()[x].clone()),
            "violations": {
                "bound": flag_main, "lsi": flag_lsi, "thm1_envelope": flag_env, "sandwich": flag_sandwich,
            },
        }));
    }

    let bound_name = main_curve.map_or("tv_bound", |c| if c.kind == CurveKind::Thm3A { "tv_thm3" } else { "tv_thm2" });
    let mut header: Vec<String> = ["t", "survival", "tv_actual", bound_name, "tv_lsi", "I_t", "I_tilde_t", "J_t", "J_tilde_t", "thm1_lower", "thm1_upper"]
        .map(String::from)
        .to_vec();
    if matches!(init, Init::Worst) {
        header.push("worst_state".into());
    }
    header.extend(["violation_bound", "violation_lsi", "violation_thm1", "violation_sandwich"].map(String::from));

    let curve_json = |c: Option<BoundCurve>| c.map(|c| json!({ "kind": c.kind.name(), "prefactor": c.prefactor * half, "rate": c.rate }));
    let mut m = meta(&loaded, args.tol_eigen, args.output.probabilist_tv);
    m["init"] = json!(args.init);
    m["bound_curve"] = curve_json(main_curve).unwrap_or(Value::Null);
    m["lsi_curve"] = curve_json(lsi_curve).unwrap_or(Value::Null);
    m["violating_rows"] = json!(violations);
    let doc = json!({ "states": chain.states().labels(), "rows": json_rows });
    emit(&args.output, m, doc, Some(Table { header, rows }))?;
    if violations > 0 {
        eprintln!("qsd: {violations} row(s) flag a bound violation");
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Res<()> {
    check_tol(args.tol_eigen)?;
    if args.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    if let Some(h) = args.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::Usage(format!("--horizon must be > 0, got {h}")));
        }
    }
    if args.at.is_some_and(|t| !(t >= 0.0)) || args.tcount == 0 {
        return Err(Failure::Usage("--at must be >= 0 and --tcount >= 1".into()));
    }
    let loaded = load(&args.source)?;
    let chain = &loaded.chain;
    let p = spectral::perron_with_tol(chain, args.tol_eigen)?;
    let Init::Law(mu0) = parse_init(&args.init, chain, &p, false)? else { unreachable!("worst is rejected above") };
    let discrete = p.kind == TimeKind::Discrete;
    let round = |t: f64| if discrete { t.round().max(1.0) } else { t };
    let horizon = round(args.horizon.unwrap_or(20.0 / p.lambda1));
    if discrete && args.horizon.is_some_and(|h| h.fract() != 0.0) {
        return Err(Failure::Usage("discrete chains need an integer horizon".into()));
    }
    let cfg = SimConfig::new(args.seed, args.n, horizon)?;
    let sample = montecarlo::simulate(chain, &mu0, &cfg)?;
    let prop = Propagator::new(chain, &p)?;
    let states = chain.states().labels();
    let nf = args.n as f64;

    let absorbed: Vec<f64> = sample.tau.iter().copied().filter(|t| t.is_finite()).collect();
    let mean_tau = (!absorbed.is_empty()).then(|| absorbed.iter().sum::<f64>() / absorbed.len() as f64);

    let mut checkpoints = Vec::new();
    let mut times = evolution::time_grid(0.0, horizon, args.tcount + 1, false)?;
    times.remove(0);
    if discrete {
        times.iter_mut().for_each(|t| *t = t.round());
        times.dedup();
    }
    for &t in &times {
        let empirical = sample.survival(t);
        let (_, exact) = prop.propagate(&mu0, t)?;
        let se = (exact * (1.0 - exact) / nf).sqrt();
        checkpoints.push(json!({
            "t": t,
            "empirical": empirical,
            "exact": exact,
            "std_error": se,
            "z": if se > 0.0 { (empirical - exact) / se } else { 0.0 },
        }));
    }

    let ks = (!discrete && args.init == "nu").then(|| {
        let d = montecarlo::ks_statistic(&sample.tau, p.lambda1);
        let crit = montecarlo::ks_critical_1pct(args.n);
        json!({ "rate": p.lambda1, "statistic": d, "critical_1pct": crit, "passed": d <= crit })
    });

    let at = round(args.at.unwrap_or((1.0 / p.lambda1).min(horizon)));
    let cond = montecarlo::estimate_conditioned(chain, &p, &mu0, at, &cfg)?;
    let (exact, _) = prop.propagate(&mu0, at)?;
    let mut per_state = Vec::new();
    let mut within = true;
    for (x, s) in states.iter().enumerate() {
        let mut f = vec![0.0; chain.n()];
        f[x] = 1.0;
        let fk = montecarlo::feynman_kac(chain, &mu0, at, &f, &cfg)?;
        let e = exact.weights()[x];
        let c = cond.law.weights()[x];
        let ok = (c - e).abs() <= 4.0 * cond.std_errors[x] + 1e-12 && (fk.value - e).abs() <= 4.0 * fk.std_error + 1e-12;
        within &= ok;
        per_state.push(json!({
            "state": s,
            "exact": e,
            "conditioned": c,
            "conditioned_std_error": cond.std_errors[x],
            "feynman_kac": fk.value,
            "feynman_kac_std_error": fk.std_error,
            "within_4_sigma": ok,
        }));
    }

    let mut m = meta(&loaded, args.tol_eigen, false);
    m["seed"] = json!(args.seed);
    m["init"] = json!(args.init);
    let doc = json!({
        "trajectories": args.n,
        "horizon": horizon,
        "absorbed": absorbed.len(),
        "censored": args.n - absorbed.len(),
        "mean_absorption_time": mean_tau,
        "lambda1": p.lambda1,
        "survival": checkpoints,
        "exponential_absorption": ks,
        "conditioned_law": {
            "t": at,
            "survivors": cond.survivors,
            "states": per_state,
            "all_within_4_sigma": within,
        },
    });
    if args.output.format == Format::Csv {
        return Err(Failure::Usage("simulate reports are JSON only".into()));
    }
    emit(&args.output, m, doc, None)
}

fn run_verify(args: &VerifyArgs) -> Res<()> {
    if let Some(key) = &args.only {
        if !verify::CRITERIA.iter().any(|c| c.matches(key)) {
            return Err(Failure::Usage(format!("--only `{key}` matches no criterion")));
        }
    }
    let report = verify::run_suite(args.only.as_deref());
    let body = if args.json { report.to_json() + "\n" } else { report.to_text() };
    write_out(args.out.as_deref(), &body)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn model(args: &ModelArgs) -> Res<()> {
    if args.list {
        let mut body = String::new();
        for (spec, chain) in models::builtin_catalogue() {
            body.push_str(&format!("{spec}\t{} states\t{}\n", chain.n(), if chain.is_discrete() { "discrete" } else { "continuous" }));
        }
        body.push_str("builtin:two_point\t2 states\tcontinuous\n");
        return write_out(args.out.as_deref(), &body);
    }
    let loaded = load(&args.source)?;
    write_out(args.out.as_deref(), &(serialize_model(&loaded.chain) + "\n"))
}
