//! Command line driver: convergence studies over mesh-refinement levels and
//! single solves with coefficient and matrix dumps.
//!
//! Exit codes: `0` success, `2` invalid usage or configuration, `3` numerical
//! failure, `4` i/o failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::assembly::{
    assemble_operator, AssemblyError, PenaltyConfig, PenaltyNormal,
};
use crate::curved::{build_curved, CurvedError};
use crate::errors::{compute_errors, eoc_fit, pairwise_orders, EocFit, ErrorReport};
use crate::fespace::{build_tensor_space, TensorFeSpace};
use crate::levelset::LevelSetSurface;
use crate::manufactured::manufactured_solution;
use crate::mesh::{FlatMesh, MeshError};
use crate::solver::{solve_cg, CsrMatrix};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn numerical_err(e: impl fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn map_mesh(e: MeshError) -> CliError {
    match e {
        MeshError::Io(e) => CliError::Io(e),
        other => numerical_err(other),
    }
}

fn map_curved(e: CurvedError) -> CliError {
    match e {
        CurvedError::UnsupportedOrder(_) | CurvedError::UnsupportedDegree(_) => config_err(e),
        other => numerical_err(other),
    }
}

fn map_assembly(e: AssemblyError) -> CliError {
    match e {
        AssemblyError::InvalidPenalty { .. } => config_err(e),
        AssemblyError::Curved(inner) => map_curved(inner),
        other => numerical_err(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceKind {
    /// Ellipse with semi-axes 3/4 and 5/4.
    Ellipse,
    /// Ellipsoid with semi-axes 3/4, 5/4 and 1.
    Ellipsoid,
    /// Unit sphere.
    Sphere,
}

impl SurfaceKind {
    pub fn dimension(self) -> usize {
        match self {
            SurfaceKind::Ellipse => 2,
            SurfaceKind::Ellipsoid | SurfaceKind::Sphere => 3,
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SurfaceKind::Ellipse => "ellipse",
            SurfaceKind::Ellipsoid => "ellipsoid",
            SurfaceKind::Sphere => "sphere",
        };
        f.write_str(s)
    }
}

impl FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ellipse" => Ok(SurfaceKind::Ellipse),
            "ellipsoid" => Ok(SurfaceKind::Ellipsoid),
            "sphere" => Ok(SurfaceKind::Sphere),
            other => Err(format!(
                "unknown surface `{other}` (expected ellipse, ellipsoid or sphere)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalMode {
    /// Discrete normal of the curved geometry (requires `kp = kg`).
    Discrete,
    /// Normalized interpolant of the exact normal, accurate of order `kp`.
    Interp,
    /// Exact normal at the closest surface point.
    Exact,
}

impl fmt::Display for NormalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormalMode::Discrete => "discrete",
            NormalMode::Interp => "interp",
            NormalMode::Exact => "exact",
        };
        f.write_str(s)
    }
}

impl FromStr for NormalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "discrete" => Ok(NormalMode::Discrete),
            "interp" => Ok(NormalMode::Interp),
            "exact" => Ok(NormalMode::Exact),
            other => Err(format!(
                "unknown penalty normal `{other}` (expected discrete, interp or exact)"
            )),
        }
    }
}

/// Fully resolved study parameters (defaults applied, validated).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub surface: SurfaceKind,
    pub rank: usize,
    pub k_g: usize,
    pub k_u: usize,
    pub k_p: usize,
    pub alpha: f64,
    /// Penalty weights; the reported orders use the per-level minimum over
    /// this list.
    pub betas: Vec<f64>,
    pub level_lo: usize,
    pub level_hi: usize,
    pub normal_mode: NormalMode,
    /// Also report the lifted L2 error weighted by `|det B|`.
    pub lifted: bool,
    pub quad_degree: usize,
    pub error_quad_degree: usize,
    /// Print one progress line per solve to stderr.
    pub progress: bool,
}

impl RunConfig {
    pub fn penalty_normal(&self) -> PenaltyNormal {
        match self.normal_mode {
            NormalMode::Discrete => PenaltyNormal::Discrete,
            NormalMode::Interp => PenaltyNormal::Interpolated(self.k_p),
            NormalMode::Exact => PenaltyNormal::Exact,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if !(1..=2).contains(&self.rank) {
            return err(format!("rank must be 1 or 2 (got {})", self.rank));
        }
        if self.surface == SurfaceKind::Ellipsoid && self.rank == 2 {
            return err("the rank-2 case in three dimensions runs on the sphere".into());
        }
        for (name, k) in [("kg", self.k_g), ("ku", self.k_u), ("kp", self.k_p)] {
            if !(1..=4).contains(&k) {
                return err(format!("{name} must be in 1..=4 (got {k})"));
            }
        }
        if self.normal_mode == NormalMode::Discrete && self.k_p != self.k_g {
            return err(format!(
                "the discrete penalty normal has the geometric order: set kp = kg \
                 (got kp = {}, kg = {}) or choose --penalty-normal interp",
                self.k_p, self.k_g
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return err(format!("alpha must be finite and >= 0 (got {})", self.alpha));
        }
        if self.betas.is_empty() {
            return err("at least one beta is required".into());
        }
        for &b in &self.betas {
            if !(b > 0.0 && b.is_finite()) {
                return err(format!("beta must be finite and > 0 (got {b})"));
            }
        }
        if self.level_lo > self.level_hi {
            return err(format!(
                "empty level range {}..{}",
                self.level_lo, self.level_hi
            ));
        }
        let max_level = match self.surface {
            SurfaceKind::Ellipse => 12,
            _ => 7,
        };
        if self.level_hi > max_level {
            return err(format!(
                "level {} exceeds the supported maximum {max_level} for the {}",
                self.level_hi, self.surface
            ));
        }
        if self.quad_degree == 0 || self.error_quad_degree == 0 {
            return err("quadrature degrees must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "surfem",
    about = "Penalized tangential tensor finite elements on closed hypersurfaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a convergence study over a range of refinement levels and write a
    /// CSV report with fitted convergence orders.
    Run(StudyArgs),
    /// Solve on a single level (the start of the level range) and write the
    /// coefficient vector.
    Solve(SolveArgs),
}

#[derive(Debug, Default, Args)]
pub struct StudyArgs {
    /// Surface to solve on.
    #[arg(long, value_enum)]
    pub surface: Option<SurfaceKind>,
    /// Tensor rank of the unknown field (1 or 2).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Geometry order of the curved elements.
    #[arg(long)]
    pub kg: Option<usize>,
    /// Polynomial order of the finite element space.
    #[arg(long)]
    pub ku: Option<usize>,
    /// Accuracy order of the penalty normal (defaults to kg).
    #[arg(long)]
    pub kp: Option<usize>,
    /// Penalty scaling exponent in `β h^{-2α}`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Penalty weight; repeat the flag to sweep several weights.
    #[arg(long = "beta", action = ArgAction::Append)]
    pub betas: Vec<f64>,
    /// Inclusive level range `A..B` (or a single level `A`).
    #[arg(long)]
    pub levels: Option<String>,
    /// Penalty normal field.
    #[arg(long = "penalty-normal", value_enum)]
    pub penalty_normal: Option<NormalMode>,
    /// Also report the lifted L2 error weighted by `|det B|`.
    #[arg(long)]
    pub lifted: bool,
    /// Quadrature degree for assembly (default `2 ku + 2`).
    #[arg(long = "quad-degree")]
    pub quad_degree: Option<usize>,
    /// Quadrature degree for error norms (default `2 (ku + kg) + 2`, capped
    /// at the highest supported rule).
    #[arg(long = "error-quad-degree")]
    pub error_quad_degree: Option<usize>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Key=value configuration file; command line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Write the system matrix in MatrixMarket coordinate format.
    #[arg(long = "dump-matrix")]
    pub dump_matrix: Option<PathBuf>,
}

/// Parse `A..B` or a single `A` into an inclusive level range.
pub fn parse_levels(s: &str) -> Result<(usize, usize), CliError> {
    let parse_one = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("invalid level `{tok}` in `{s}`")))
    };
    match s.split_once("..") {
        Some((lo, hi)) => Ok((parse_one(lo)?, parse_one(hi)?)),
        None => {
            let l = parse_one(s)?;
            Ok((l, l))
        }
    }
}

/// Read a plain `key = value` file: one pair per line, `#` comments, blank
/// lines ignored, duplicate keys rejected.
pub fn parse_config_file(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "{}:{}: duplicate key `{key}`",
                path.display(),
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn take_parsed<T: FromStr>(
    map: &mut HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    match map.remove(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))),
    }
}

fn parse_beta_list(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid beta `{tok}`")))
        })
        .collect()
}

/// Combine defaults, the optional config file and the command line flags
/// (highest precedence) into a validated [`RunConfig`].
pub fn resolve_config(args: &StudyArgs) -> Result<RunConfig, CliError> {
    let mut file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    let surface = args
        .surface
        .or(take_parsed(&mut file, "surface")?)
        .unwrap_or(SurfaceKind::Ellipsoid);
    let rank = args.rank.or(take_parsed(&mut file, "rank")?).unwrap_or(1);
    let k_g = args.kg.or(take_parsed(&mut file, "kg")?).unwrap_or(2);
    let k_u = args.ku.or(take_parsed(&mut file, "ku")?).unwrap_or(2);
    let k_p = args.kp.or(take_parsed(&mut file, "kp")?).unwrap_or(k_g);
    let alpha = args
        .alpha
        .or(take_parsed(&mut file, "alpha")?)
        .unwrap_or(0.5);
    let file_betas = match file.remove("beta") {
        Some(raw) => Some(parse_beta_list(&raw)?),
        None => None,
    };
    let betas = if !args.betas.is_empty() {
        args.betas.clone()
    } else {
        file_betas.unwrap_or_else(|| vec![if alpha >= 0.5 { 1e4 } else { 10.0 }])
    };
    let file_levels = match file.remove("levels") {
        Some(raw) => Some(parse_levels(&raw)?),
        None => None,
    };
    let (level_lo, level_hi) = match (&args.levels, file_levels) {
        (Some(raw), _) => parse_levels(raw)?,
        (None, Some(range)) => range,
        (None, None) => (1, 4),
    };
    let normal_mode = args
        .penalty_normal
        .or(take_parsed(&mut file, "penalty-normal")?)
        .unwrap_or(if k_p == k_g {
            NormalMode::Discrete
        } else {
            NormalMode::Interp
        });
    let lifted = args.lifted || take_parsed::<bool>(&mut file, "lifted")?.unwrap_or(false);
    let quad_degree = args
        .quad_degree
        .or(take_parsed(&mut file, "quad-degree")?)
        .unwrap_or(2 * k_u + 2);
    let degree_cap = match surface {
        SurfaceKind::Ellipse => 20,
        _ => 14,
    };
    let error_quad_degree = args
        .error_quad_degree
        .or(take_parsed(&mut file, "error-quad-degree")?)
        .unwrap_or((2 * (k_u + k_g) + 2).min(degree_cap));
    if !file.is_empty() {
        let mut keys: Vec<_> = file.into_keys().collect();
        keys.sort();
        return Err(CliError::Config(format!(
            "unknown config keys: {}",
            keys.join(", ")
        )));
    }
    let cfg = RunConfig {
        surface,
        rank,
        k_g,
        k_u,
        k_p,
        alpha,
        betas,
        level_lo,
        level_hi,
        normal_mode,
        lifted,
        quad_degree,
        error_quad_degree,
        progress: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// All measurements of one convergence study.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub levels: Vec<usize>,
    pub hs: Vec<f64>,
    pub dofs: Vec<usize>,
    pub betas: Vec<f64>,
    /// `reports[level_index][beta_index]`.
    pub reports: Vec<Vec<ErrorReport>>,
}

impl StudyResult {
    /// Per-level minimum of one error norm over the beta sweep.
    pub fn min_curve(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.reports
            .iter()
            .map(|row| row.iter().map(&f).fold(f64::INFINITY, f64::min))
            .collect()
    }

    fn beta_curve(&self, bi: usize, f: &impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        self.reports.iter().map(|row| f(&row[bi])).collect()
    }

    /// Reported convergence order: each beta's error curve is fitted
    /// separately and the minimal fitted order over the sweep is returned.
    pub fn eoc(&self, f: impl Fn(&ErrorReport) -> f64) -> Option<EocFit> {
        let mut best: Option<EocFit> = None;
        for bi in 0..self.betas.len() {
            if let Some(fit) = eoc_fit(&self.hs, &self.beta_curve(bi, &f)) {
                best = match best {
                    Some(b) if b.order <= fit.order => Some(b),
                    _ => Some(fit),
                };
            }
        }
        best
    }

    /// Orders between consecutive levels, minimized over the beta sweep.
    pub fn pairwise(&self, f: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for bi in 0..self.betas.len() {
            let orders = pairwise_orders(&self.hs, &self.beta_curve(bi, &f));
            if out.is_empty() {
                out = orders;
            } else {
                for (acc, o) in out.iter_mut().zip(orders) {
                    *acc = acc.min(o);
                }
            }
        }
        out
    }
}

/// Run the configured convergence study.
pub fn run_study(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    cfg.validate()?;
    match cfg.surface {
        SurfaceKind::Ellipse => {
            let s = LevelSetSurface::ellipse(0.75, 1.25);
            study_impl::<2, 1>(&s, cfg, |lvl| FlatMesh::<2>::generate(&s, lvl))
        }
        SurfaceKind::Ellipsoid => {
            let s = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
            study_impl::<3, 2>(&s, cfg, |lvl| FlatMesh::<3>::generate(&s, lvl))
        }
        SurfaceKind::Sphere => {
            let s = LevelSetSurface::sphere();
            study_impl::<3, 2>(&s, cfg, |lvl| FlatMesh::<3>::generate(&s, lvl))
        }
    }
}

fn study_impl<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    cfg: &RunConfig,
    generate: impl Fn(usize) -> Result<FlatMesh<D>, MeshError>,
) -> Result<StudyResult, CliError> {
    let solution = manufactured_solution(surface, cfg.rank).map_err(config_err)?;
    let normal = cfg.penalty_normal();
    let mut result = StudyResult {
        levels: Vec::new(),
        hs: Vec::new(),
        dofs: Vec::new(),
        betas: cfg.betas.clone(),
        reports: Vec::new(),
    };
    for level in cfg.level_lo..=cfg.level_hi {
        let mesh = generate(level).map_err(map_mesh)?;
        let cmesh = build_curved::<D, RD>(surface, &mesh, cfg.k_g).map_err(map_curved)?;
        let space = build_tensor_space(&cmesh, cfg.k_u, cfg.rank).map_err(config_err)?;
        let op = assemble_operator(
            surface,
            &cmesh,
            &space,
            &solution,
            cfg.alpha,
            normal,
            cfg.quad_degree,
        )
        .map_err(map_assembly)?;
        let mut row = Vec::with_capacity(cfg.betas.len());
        for &beta in &cfg.betas {
            let matrix = op.matrix_with_beta(beta);
            let max_iter = (20 * matrix.n).max(10_000);
            let sol = solve_cg(&matrix, &op.rhs, 1e-10, max_iter).map_err(numerical_err)?;
            let penalty = PenaltyConfig {
                beta,
                alpha: cfg.alpha,
                normal,
            };
            let report = compute_errors(
                surface,
                &cmesh,
                &space,
                &sol.x,
                &solution,
                &penalty,
                cfg.error_quad_degree,
                cfg.lifted,
            )
            .map_err(map_assembly)?;
            if cfg.progress {
                eprintln!(
                    "level {level} beta={beta:e}: dofs={} cg_iters={} l2_tan={:.4e} l2_full={:.4e}",
                    space.total_dofs(),
                    sol.iterations,
                    report.l2_tan,
                    report.l2_full,
                );
            }
            row.push(report);
        }
        result.levels.push(level);
        result.hs.push(cmesh.base.h);
        result.dofs.push(space.total_dofs());
        result.reports.push(row);
    }
    Ok(result)
}

/// Names and accessors of the reported error norms, in CSV column order.
pub const NORM_COLUMNS: [(&str, fn(&ErrorReport) -> f64); 5] = [
    ("l2_full", |r| r.l2_full),
    ("l2_tan", |r| r.l2_tan),
    ("l2_norm_pen", |r| r.l2_norm_pen),
    ("energy_Ah", |r| r.energy_full),
    ("energy_ah", |r| r.energy_ah),
];

/// Write the study as CSV: parameter echo comments, one row block per beta,
/// and a `# eoc:` footer with the minimal fitted order over the beta sweep.
pub fn write_study_csv<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    result: &StudyResult,
) -> io::Result<()> {
    writeln!(w, "# surfem convergence study")?;
    writeln!(w, "# surface={} rank={}", cfg.surface, cfg.rank)?;
    writeln!(
        w,
        "# kg={} ku={} kp={} alpha={} penalty_normal={}",
        cfg.k_g, cfg.k_u, cfg.k_p, cfg.alpha, cfg.normal_mode
    )?;
    writeln!(
        w,
        "# betas={}",
        cfg.betas
            .iter()
            .map(|b| format!("{b:e}"))
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(
        w,
        "# levels={}..{} quad_degree={} error_quad_degree={}",
        cfg.level_lo, cfg.level_hi, cfg.quad_degree, cfg.error_quad_degree
    )?;
    write!(w, "level,h,dofs,l2_full,l2_tan,l2_norm_pen,energy_Ah,energy_ah")?;
    if cfg.lifted {
        write!(w, ",lifted_l2")?;
    }
    writeln!(w)?;
    for (bi, beta) in result.betas.iter().enumerate() {
        writeln!(w, "# beta={beta:e}")?;
        for (li, &level) in result.levels.iter().enumerate() {
            let r = &result.reports[li][bi];
            write!(
                w,
                "{},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                level,
                result.hs[li],
                result.dofs[li],
                r.l2_full,
                r.l2_tan,
                r.l2_norm_pen,
                r.energy_full,
                r.energy_ah
            )?;
            if cfg.lifted {
                write!(w, ",{:.12e}", r.lifted_l2.unwrap_or(f64::NAN))?;
            }
            writeln!(w)?;
        }
    }
    write!(w, "# eoc:")?;
    for (name, f) in NORM_COLUMNS {
        match result.eoc(f) {
            Some(fit) => write!(w, " {name}={:.4}", fit.order)?,
            None => write!(w, " {name}=nan")?,
        }
    }
    writeln!(w)?;
    Ok(())
}

/// Outcome of a single solve.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub iterations: usize,
    pub report: ErrorReport,
}

/// Solve once on `cfg.level_lo` with the first beta, write the coefficient
/// CSV to `out` (stdout when absent) and optionally the system matrix.
pub fn run_solve(
    cfg: &RunConfig,
    out: Option<&Path>,
    dump_matrix: Option<&Path>,
) -> Result<SolveSummary, CliError> {
    cfg.validate()?;
    match cfg.surface {
        SurfaceKind::Ellipse => {
            let s = LevelSetSurface::ellipse(0.75, 1.25);
            solve_impl::<2, 1>(&s, cfg, |lvl| FlatMesh::<2>::generate(&s, lvl), out, dump_matrix)
        }
        SurfaceKind::Ellipsoid => {
            let s = LevelSetSurface::ellipsoid(0.75, 1.25, 1.0);
            solve_impl::<3, 2>(&s, cfg, |lvl| FlatMesh::<3>::generate(&s, lvl), out, dump_matrix)
        }
        SurfaceKind::Sphere => {
            let s = LevelSetSurface::sphere();
            solve_impl::<3, 2>(&s, cfg, |lvl| FlatMesh::<3>::generate(&s, lvl), out, dump_matrix)
        }
    }
}

fn solve_impl<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    cfg: &RunConfig,
    generate: impl Fn(usize) -> Result<FlatMesh<D>, MeshError>,
    out: Option<&Path>,
    dump_matrix: Option<&Path>,
) -> Result<SolveSummary, CliError> {
    let solution = manufactured_solution(surface, cfg.rank).map_err(config_err)?;
    let normal = cfg.penalty_normal();
    let level = cfg.level_lo;
    let beta = cfg.betas[0];
    let mesh = generate(level).map_err(map_mesh)?;
    let cmesh = build_curved::<D, RD>(surface, &mesh, cfg.k_g).map_err(map_curved)?;
    let space = build_tensor_space(&cmesh, cfg.k_u, cfg.rank).map_err(config_err)?;
    let op = assemble_operator(
        surface,
        &cmesh,
        &space,
        &solution,
        cfg.alpha,
        normal,
        cfg.quad_degree,
    )
    .map_err(map_assembly)?;
    let matrix = op.matrix_with_beta(beta);
    let max_iter = (20 * matrix.n).max(10_000);
    let sol = solve_cg(&matrix, &op.rhs, 1e-10, max_iter).map_err(numerical_err)?;
    let penalty = PenaltyConfig {
        beta,
        alpha: cfg.alpha,
        normal,
    };
    let report = compute_errors(
        surface,
        &cmesh,
        &space,
        &sol.x,
        &solution,
        &penalty,
        cfg.error_quad_degree,
        cfg.lifted,
    )
    .map_err(map_assembly)?;
    if let Some(path) = dump_matrix {
        let mut w = io::BufWriter::new(fs::File::create(path)?);
        write_matrix_market(&mut w, &matrix)?;
        w.flush()?;
    }
    with_output(out, |w| write_coeffs_csv(w, cfg, &space, level, beta, &sol.x))?;
    Ok(SolveSummary {
        level,
        h: cmesh.base.h,
        dofs: space.total_dofs(),
        iterations: sol.iterations,
        report,
    })
}

fn with_output(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = io::BufWriter::new(fs::File::create(path)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Coefficient vector as CSV, component-major layout
/// (`global = component * scalar_dofs + scalar_dof`).
pub fn write_coeffs_csv<W: Write, const D: usize, const RD: usize>(
    mut w: W,
    cfg: &RunConfig,
    space: &TensorFeSpace<D, RD>,
    level: usize,
    beta: f64,
    coeffs: &[f64],
) -> io::Result<()> {
    writeln!(w, "# surfem solution coefficients")?;
    writeln!(
        w,
        "# surface={} rank={} kg={} ku={} level={level} beta={beta:e}",
        cfg.surface, cfg.rank, cfg.k_g, cfg.k_u
    )?;
    writeln!(
        w,
        "# layout: index = component * scalar_dofs + scalar_dof; scalar_dofs={}",
        space.scalar.dof_count()
    )?;
    write!(w, "index,component,scalar_dof")?;
    for d in 0..D {
        write!(w, ",x{d}")?;
    }
    writeln!(w, ",value")?;
    let sd = space.scalar.dof_count();
    for (index, &value) in coeffs.iter().enumerate() {
        let (component, dof) = (index / sd, index % sd);
        let x = space.scalar.dof_point(dof);
        write!(w, "{index},{component},{dof}")?;
        for coord in x.iter() {
            write!(w, ",{coord:.12e}")?;
        }
        writeln!(w, ",{value:.12e}")?;
    }
    Ok(())
}

/// MatrixMarket coordinate format of the symmetric system matrix: 1-based
/// indices, lower triangle only.
pub fn write_matrix_market<W: Write>(mut w: W, a: &CsrMatrix) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    let lower: usize = (0..a.n)
        .map(|i| {
            let lo = a.indptr[i];
            let hi = a.indptr[i + 1];
            a.indices[lo..hi].iter().filter(|&&j| j <= i).count()
        })
        .sum();
    writeln!(w, "{} {} {lower}", a.n, a.n)?;
    for i in 0..a.n {
        let lo = a.indptr[i];
        let hi = a.indptr[i + 1];
        for (j, v) in a.indices[lo..hi].iter().zip(&a.values[lo..hi]) {
            if *j <= i {
                writeln!(w, "{} {} {v:.12e}", i + 1, j + 1)?;
            }
        }
    }
    Ok(())
}

/// Execute a parsed command line.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = resolve_config(&args)?;
            let result = run_study(&cfg)?;
            with_output(args.out.as_deref(), |w| write_study_csv(w, &cfg, &result))
        }
        Command::Solve(args) => {
            let cfg = resolve_config(&args.study)?;
            let summary = run_solve(
                &cfg,
                args.study.out.as_deref(),
                args.dump_matrix.as_deref(),
            )?;
            eprintln!(
                "solved level {}: h={:.4e} dofs={} cg_iters={} l2_tan={:.4e} l2_full={:.4e}",
                summary.level,
                summary.h,
                summary.dofs,
                summary.iterations,
                summary.report.l2_tan,
                summary.report.l2_full,
            );
            Ok(())
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
