//! Command line front end. A run is described by a TOML file whose fields
//! can be overridden by flags; every output file starts with a header that
//! holds the resolved configuration and the code version.
//!
//! Exit codes: 0 success, 1 numerical non-convergence, 2 configuration error.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::discretize::{Field, Potential};
use crate::error::{Error, Result};
use crate::geometry::{exponent_report, Domain, RevolutionSplit, SymmetryClass};
use crate::groundstate::{
    decay_fit, find_ground_state, moser_sequence, solve_radial, GroundStateConfig, GroundStateResult, Problem,
    Weight,
};
use crate::io::{self, Header};
use crate::spectra::{angular_eigs, hardy_constant, richardson, AngularWeight, HardyConfig, SpectralVector};
use crate::symmetry::{breaking_verdict, nonradiality_index, BreakingVerdict, VerdictOptions};

#[derive(Debug, Parser)]
#[command(name = "revsym", version, about = "Ground states on domains of double and triple revolution")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Embedding exponents and thresholds of a split.
    Exponents,
    /// Hardy constant of a domain.
    Hardy,
    /// Weighted angular eigenpairs.
    Eigen,
    /// Cone-constrained ground state.
    Solve,
    /// Symmetry-breaking verdict.
    Symmetry,
    /// Symmetry verdicts over a parameter axis.
    Sweep,
    /// Moser exponent recurrence.
    Moser,
    /// Decay rate of a singular-potential ground state near the origin.
    Decay,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Exponents => "exponents",
            Command::Hardy => "hardy",
            Command::Eigen => "eigen",
            Command::Solve => "solve",
            Command::Symmetry => "symmetry",
            Command::Sweep => "sweep",
            Command::Moser => "moser",
            Command::Decay => "decay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    R,
    P,
    Alpha,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// `annulus(R1,R2)`, `ball`, `pi4-bump(R1,R2,amp)` or `truncated-rn(R)`.
    #[arg(long, global = true)]
    pub domain: Option<String>,
    #[arg(long = "class", global = true)]
    pub symmetry_class: Option<String>,
    #[arg(long, global = true)]
    pub cone: Option<String>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Exponent of the weight `a = |x|^α`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Exponent of the potential `V = |x|^{-α}`.
    #[arg(long, global = true)]
    pub potential_alpha: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub nr: Option<usize>,
    #[arg(long, global = true)]
    pub ntheta: Option<usize>,
    #[arg(long, global = true)]
    pub nphi: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_outer: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write per-iteration trace tables.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Repeat the run on a grid refined by two in every direction.
    #[arg(long, global = true)]
    pub grid_doubling: bool,
    /// Concurrent sweep rows.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Angular weight for `eigen`: `omega(n)`, `w_l(N,l)`, `w_mn(m,n)`.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    #[arg(long, global = true)]
    pub cells: Option<usize>,
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated sweep values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    #[arg(long, global = true)]
    pub target: Option<f64>,
    /// Radial fit window as `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub weight: String,
    /// Upper end of the angular interval; defaults to the weight's box.
    pub top: Option<f64>,
    pub cells: usize,
    pub modes: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            weight: "omega(2)".into(),
            top: None,
            cells: 512,
            modes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Annulus width for the `r` axis, which sweeps `annulus(R, R + width)`.
    pub width: f64,
    pub jobs: usize,
    /// Skip the full ground-state solve and report only the criterion.
    pub criterion_only: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::R,
            values: vec![2.0, 4.0, 8.0],
            width: 1.0,
            jobs: 1,
            criterion_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoserConfig {
    pub q: f64,
    pub t0: f64,
    pub kmax: usize,
}

impl Default for MoserConfig {
    fn default() -> Self {
        Self { q: 6.0, t0: 1.0, kmax: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub target: f64,
    /// Fit window in multiples of the outer radius.
    pub window: (f64, f64),
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            target: 2.0,
            window: (0.02, 0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub split: String,
    pub domain: String,
    pub symmetry_class: String,
    /// Defaults to the cone of the symmetry class.
    pub cone: Option<String>,
    pub p: f64,
    pub alpha: f64,
    pub potential_alpha: Option<f64>,
    pub lambda: f64,
    /// Singular-potential constant used by the exponent report.
    pub beta: f64,
    pub output: PathBuf,
    pub trace: bool,
    pub grid_doubling: bool,
    pub solver: GroundStateConfig,
    pub hardy: HardyConfig,
    pub eigen: EigenConfig,
    pub sweep: SweepConfig,
    pub moser: MoserConfig,
    pub decay: DecayConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            split: "2,2".into(),
            domain: "annulus(1,2)".into(),
            symmetry_class: "pi4-annular".into(),
            cone: None,
            p: 3.0,
            alpha: 0.0,
            potential_alpha: None,
            lambda: 0.0,
            beta: 1.0,
            output: PathBuf::from("out"),
            trace: false,
            grid_doubling: false,
            solver: GroundStateConfig::default(),
            hardy: HardyConfig::default(),
            eigen: EigenConfig::default(),
            sweep: SweepConfig::default(),
            moser: MoserConfig::default(),
            decay: DecayConfig::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.split, self.split);
        set!(o.domain, self.domain);
        set!(o.symmetry_class, self.symmetry_class);
        if o.cone.is_some() {
            self.cone = o.cone.clone();
        }
        set!(o.p, self.p);
        set!(o.alpha, self.alpha);
        if o.potential_alpha.is_some() {
            self.potential_alpha = o.potential_alpha;
        }
        set!(o.lambda, self.lambda);
        set!(o.beta, self.beta);
        set!(o.nr, self.solver.nr);
        set!(o.ntheta, self.solver.ntheta);
        set!(o.nphi, self.solver.nphi);
        set!(o.nr, self.hardy.nr);
        set!(o.ntheta, self.hardy.ntheta);
        set!(o.nphi, self.hardy.nphi);
        set!(o.tol, self.solver.tol);
        set!(o.max_outer, self.solver.max_outer);
        set!(o.seed, self.solver.seed);
        set!(o.out, self.output);
        self.trace |= o.trace;
        self.grid_doubling |= o.grid_doubling;
        set!(o.jobs, self.sweep.jobs);
        set!(o.weight, self.eigen.weight);
        set!(o.cells, self.eigen.cells);
        set!(o.modes, self.eigen.modes);
        set!(o.axis, self.sweep.axis);
        set!(o.values, self.sweep.values);
        set!(o.q, self.moser.q);
        set!(o.t0, self.moser.t0);
        set!(o.kmax, self.moser.kmax);
        set!(o.target, self.decay.target);
        if let Some(w) = &o.window {
            if w.len() == 2 {
                self.decay.window = (w[0], w[1]);
            } else {
                self.decay.window = (f64::NAN, f64::NAN);
            }
        }
        self.solver.linear.record_trace |= o.trace;
    }

    pub fn split(&self) -> Result<RevolutionSplit> {
        self.split.parse()
    }

    pub fn class(&self) -> Result<SymmetryClass> {
        self.symmetry_class.parse()
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::from_preset(&self.domain, self.split()?, self.class()?)
    }

    pub fn cone(&self) -> Result<ConeSpec> {
        match &self.cone {
            Some(c) => c.parse(),
            None => Ok(ConeSpec::default_for(self.class()?)),
        }
    }

    pub fn weight(&self) -> Weight {
        if self.alpha == 0.0 {
            Weight::default()
        } else {
            Weight::Power { alpha: self.alpha }
        }
    }

    pub fn potential(&self) -> Potential {
        match self.potential_alpha {
            Some(alpha) => Potential::InversePower { alpha },
            None => Potential::None,
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(
            self.domain()?,
            self.weight(),
            self.potential(),
            self.lambda,
            self.p,
            self.cone()?,
        )
    }

    fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.sweep.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        Ok(())
    }
}

/// Solver configuration with grid counts doubled.
fn doubled(cfg: &GroundStateConfig) -> GroundStateConfig {
    GroundStateConfig {
        nr: 2 * cfg.nr,
        ntheta: 2 * cfg.ntheta,
        nphi: 2 * cfg.nphi,
        ..*cfg
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    header: Header,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.join(name)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        io::write_json(&self.path(name), &self.header, value)?;
        println!("{}", serde_json::to_string(value)?);
        Ok(())
    }

    fn field_csv(&self, name: &str, field: &Field) -> Result<()> {
        let mut w = io::csv_writer(&self.path(name), &self.header)?;
        field.write_csv(&mut w)?;
        Ok(())
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the configuration of a parsed command line.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve(cli)?;
    let run = Run {
        cfg: &cfg,
        header: Header::new(cli.command.name(), &cfg)?,
    };
    match cli.command {
        Command::Exponents => cmd_exponents(&run),
        Command::Hardy => cmd_hardy(&run),
        Command::Eigen => cmd_eigen(&run),
        Command::Solve => cmd_solve(&run),
        Command::Symmetry => cmd_symmetry(&run),
        Command::Sweep => cmd_sweep(&run),
        Command::Moser => cmd_moser(&run),
        Command::Decay => cmd_decay(&run),
    }
}

fn cmd_exponents(run: &Run) -> Result<i32> {
    let rep = exponent_report(&run.cfg.split()?, run.cfg.alpha, run.cfg.beta)?;
    run.json("exponents.json", &rep)?;
    Ok(0)
}

#[derive(Serialize)]
struct HardyOutput {
    value: f64,
    iterations: usize,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    doubled: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    richardson: Option<f64>,
}

fn cmd_hardy(run: &Run) -> Result<i32> {
    let domain = run.cfg.domain()?;
    let res = hardy_constant(&domain, run.cfg.lambda, &run.cfg.hardy)?;
    if let SpectralVector::Field(f) = &res.vector {
        run.field_csv("hardy_field.csv", f)?;
    }
    let mut out = HardyOutput {
        value: res.value,
        iterations: res.iterations,
        residual: res.residual,
        doubled: None,
        richardson: None,
    };
    if run.cfg.grid_doubling {
        let h = &run.cfg.hardy;
        let fine_cfg = HardyConfig {
            nr: 2 * h.nr,
            ntheta: 2 * h.ntheta,
            nphi: 2 * h.nphi,
            ..*h
        };
        let fine = hardy_constant(&domain, run.cfg.lambda, &fine_cfg)?;
        out.doubled = Some(fine.value);
        out.richardson = Some(richardson(res.value, fine.value));
    }
    run.json("hardy.json", &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct EigenOutput {
    weight: AngularWeight,
    top: f64,
    values: Vec<f64>,
    residuals: Vec<f64>,
}

fn cmd_eigen(run: &Run) -> Result<i32> {
    let e = &run.cfg.eigen;
    let weight: AngularWeight = e.weight.parse()?;
    let top = e.top.unwrap_or(weight.default_top());
    if e.modes == 0 {
        return Err(Error::Config("modes must be positive".into()));
    }
    let pairs = angular_eigs(weight, top, e.cells, e.modes - 1)?;
    for (k, pair) in pairs.iter().enumerate() {
        if let SpectralVector::Profile(prof) = &pair.vector {
            let mut w = io::csv_writer(&run.path(&format!("eigen_mode_{k}.csv")), &run.header)?;
            prof.write_csv(&mut w)?;
        }
    }
    run.json(
        "eigen.json",
        &EigenOutput {
            weight,
            top,
            values: pairs.iter().map(|p| p.value).collect(),
            residuals: pairs.iter().map(|p| p.residual).collect(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    result: &'a GroundStateResult,
    nonradiality_index: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    doubled_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    richardson_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    richardson_difference: Option<f64>,
}

fn write_trace(run: &Run, name: &str, res: &GroundStateResult) -> Result<()> {
    let rows: Vec<Vec<f64>> = res
        .trace
        .iter()
        .map(|t| {
            vec![
                t.k as f64,
                t.energy,
                t.residual,
                t.nonneg_violation,
                t.monotonicity_violation,
                t.evenness_violation,
            ]
        })
        .collect();
    io::write_table(
        &run.path(name),
        &run.header,
        &["k", "energy", "residual", "nonneg_violation", "monotonicity_violation", "evenness_violation"],
        &rows,
    )
}

fn cmd_solve(run: &Run) -> Result<i32> {
    let problem = run.cfg.problem()?;
    let res = find_ground_state(&problem, &run.cfg.solver)?;
    run.field_csv("field.csv", &res.field)?;
    if run.cfg.trace {
        write_trace(run, "trace.csv", &res)?;
    }
    let mut out = SolveOutput {
        result: &res,
        nonradiality_index: nonradiality_index(&res.field)?,
        doubled_energy: None,
        richardson_energy: None,
        richardson_difference: None,
    };
    let mut converged = res.converged;
    let fine;
    if run.cfg.grid_doubling {
        fine = find_ground_state(&problem, &doubled(&run.cfg.solver))?;
        run.field_csv("field_doubled.csv", &fine.field)?;
        converged &= fine.converged;
        let r = richardson(res.energy, fine.energy);
        out.doubled_energy = Some(fine.energy);
        out.richardson_energy = Some(r);
        out.richardson_difference = Some((r - fine.energy).abs());
    }
    run.json("solve.json", &out)?;
    if !converged {
        eprintln!("error: ground-state iteration did not converge; outputs hold the best iterate");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_symmetry(run: &Run) -> Result<i32> {
    let problem = run.cfg.problem()?;
    let v = breaking_verdict(&problem, &run.cfg.solver, &VerdictOptions::default())?;
    run.json("symmetry.json", &v)?;
    Ok(if v.converged == Some(false) { 1 } else { 0 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RowFile {
    key: serde_json::Value,
    row: Vec<f64>,
    converged: bool,
}

fn row_config(cfg: &RunConfig, value: f64) -> RunConfig {
    let mut c = cfg.clone();
    match cfg.sweep.axis {
        SweepAxis::R => c.domain = format!("annulus({},{})", value, value + cfg.sweep.width),
        SweepAxis::P => c.p = value,
        SweepAxis::Alpha => c.alpha = value,
    }
    c
}

fn sweep_row(cfg: &RunConfig, criterion_only: bool) -> Result<(Vec<f64>, bool)> {
    let problem = cfg.problem()?;
    let opts = VerdictOptions {
        full_solve: !criterion_only,
        ..Default::default()
    };
    let v: BreakingVerdict = breaking_verdict(&problem, &cfg.solver, &opts)?;
    let r = problem.domain.inner_radius(0.0);
    Ok((
        vec![
            r,
            v.beta,
            v.threshold,
            v.p,
            v.m_value.unwrap_or(f64::NAN),
            v.index.unwrap_or(f64::NAN),
        ],
        v.converged != Some(false),
    ))
}

fn cmd_sweep(run: &Run) -> Result<i32> {
    let sw = &run.cfg.sweep;
    if sw.values.is_empty() {
        return Err(Error::Config("sweep axis has no values".into()));
    }
    if sw.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("sweep values must be finite".into()));
    }
    // every row config must resolve before any work starts
    let rows: Vec<RunConfig> = sw.values.iter().map(|&v| row_config(run.cfg, v)).collect();
    for r in &rows {
        r.problem()?;
    }
    let dir = run.path("rows");
    std::fs::create_dir_all(&dir)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(Vec<f64>, bool)>>>> =
        Mutex::new((0..rows.len()).map(|_| None).collect());
    let jobs = sw.jobs.min(rows.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= rows.len() {
                    break;
                }
                let out = sweep_row_cached(&rows[i], &dir.join(format!("row_{i:04}.json")), sw.criterion_only);
                results.lock().expect("sweep results lock")[i] = Some(out);
            });
        }
    });
    let mut table = Vec::with_capacity(rows.len());
    let mut all_converged = true;
    for r in results.into_inner().expect("sweep results lock") {
        let (row, conv) = r.expect("every row ran")?;
        all_converged &= conv;
        table.push(row);
    }
    io::write_table(
        &run.path("sweep.csv"),
        &run.header,
        &["R", "beta0", "p_star", "p", "M", "index"],
        &table,
    )?;
    println!("{}", serde_json::to_string(&table)?);
    Ok(if all_converged { 0 } else { 1 })
}

/// Runs a sweep row unless a row file with the same resolved config exists.
fn sweep_row_cached(cfg: &RunConfig, path: &Path, criterion_only: bool) -> Result<(Vec<f64>, bool)> {
    // the key holds only what determines the row
    let mut keyed = cfg.clone();
    keyed.sweep = SweepConfig::default();
    keyed.output = PathBuf::new();
    let key = serde_json::json!({ "config": keyed, "criterion_only": criterion_only, "version": io::VERSION });
    if let Ok(text) = std::fs::read_to_string(path) {
        if let Ok(saved) = serde_json::from_str::<RowFile>(&text) {
            if saved.key == key {
                log::info!("reusing {}", path.display());
                let row = saved.row.iter().map(|v| if v.is_finite() { *v } else { f64::NAN }).collect();
                return Ok((row, saved.converged));
            }
        }
    }
    let (row, converged) = sweep_row(cfg, criterion_only)?;
    // JSON has no NaN; missing cells are stored as null and read back as NaN
    let file = serde_json::json!({
        "key": key,
        "row": row.iter().map(|v| if v.is_finite() { Some(*v) } else { None }).collect::<Vec<_>>(),
        "converged": converged,
    });
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok((row, converged))
}

fn cmd_moser(run: &Run) -> Result<i32> {
    let m = &run.cfg.moser;
    let seq = moser_sequence(run.cfg.p, m.q, m.t0, m.kmax)?;
    let rows: Vec<Vec<f64>> = seq.values.iter().enumerate().map(|(k, t)| vec![k as f64, *t]).collect();
    io::write_table(&run.path("moser.csv"), &run.header, &["k", "t"], &rows)?;
    run.json("moser.json", &seq)?;
    Ok(0)
}

#[derive(Serialize)]
struct DecayOutput {
    #[serde(flatten)]
    report: crate::groundstate::DecayReport,
    energy: f64,
    residual: f64,
    converged: bool,
}

fn cmd_decay(run: &Run) -> Result<i32> {
    let cfg = run.cfg;
    if cfg.potential_alpha.is_none() {
        return Err(Error::Config("decay needs potential_alpha".into()));
    }
    let problem = cfg.problem()?;
    let (lo, hi) = cfg.decay.window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid decay window ({lo}, {hi})")));
    }
    let radial = problem.domain.is_radial() && problem.weight.is_radial();
    let res = if radial {
        solve_radial(&problem, &cfg.solver)?
    } else {
        find_ground_state(&problem, &cfg.solver)?
    };
    let g = &res.field.grid;
    let ncol = g.ncol();
    let maxima: Vec<f64> = (0..g.nr())
        .map(|i| {
            (0..ncol)
                .filter(|&c| g.active[i * ncol + c])
                .map(|c| res.field.values[i * ncol + c])
                .fold(0.0, f64::max)
        })
        .collect();
    let r_out = problem.domain.outer_radius(0.0);
    let (r, u) = match &res.profile {
        Some(p) => (p.r.clone(), p.u.clone()),
        None => (g.radial.centers.clone(), maxima),
    };
    let rows: Vec<Vec<f64>> = r.iter().zip(&u).map(|(r, u)| vec![*r, *u]).collect();
    io::write_table(&run.path("decay_profile.csv"), &run.header, &["r", "u"], &rows)?;
    let report = decay_fit(&r, &u, cfg.decay.target, (lo * r_out, hi * r_out))?;
    let out = DecayOutput {
        report,
        energy: res.energy,
        residual: res.residual,
        converged: res.converged,
    };
    run.json("decay.json", &out)?;
    Ok(if res.converged { 0 } else { 1 })
}
