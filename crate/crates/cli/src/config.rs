//! Run configuration: config file (JSON or TOML), command-line overrides and defaults,
//! resolved and validated up front.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gabor_amalgam::amalgam::{AmalgamParams, Exponent};
use gabor_amalgam::frames::MultiWindowSystem;
use gabor_amalgam::gabor::GaborSystem;
use gabor_amalgam::grid::{GridSpec, SampledFunction};
use gabor_amalgam::io::{load_signal, Format};
use gabor_amalgam::lattice::{LatticeParams, TFLattice};
use gabor_amalgam::shift::NeumannOptions;
use gabor_amalgam::weight::WeightSpec;
use gabor_amalgam::window::Window;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_GRID: (usize, usize) = (8, 64);
pub const DEFAULT_LATTICE: LatticeParams = LatticeParams { alpha: 1.0, beta: 1.0 };

/// Options shared by every command. Flags override the config file, which overrides
/// the defaults shown here.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Config file, JSON or TOML by extension
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Grid period and samples per unit [default: 8,64]
    #[arg(long, global = true, value_name = "L,s")]
    pub grid: Option<String>,
    /// Window as NAME:PARAM (box, hat, gauss, raised-cosine) or a signal file; repeatable
    #[arg(long, global = true, value_name = "NAME:PARAM|FILE")]
    pub window: Vec<String>,
    /// Lattice parameters, one per window or one for all [default: 1,1]
    #[arg(long, global = true, value_name = "A,B")]
    pub lattice: Vec<String>,
    /// Algebra weight w as poly:t; also the default amalgam weight v [default: poly:0]
    #[arg(long, global = true, value_name = "poly:t")]
    pub weight: Option<String>,
    /// Local exponent(s), comma separated, `inf` allowed [default: 2]
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// Global exponent(s), comma separated, `inf` allowed [default: 2]
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// Neumann series stopping tolerance [default: 1e-12]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Refinement levels s1,s2,... for the dual-window continuity table
    #[arg(long, global = true, value_name = "s1,s2,...")]
    pub refine: Option<String>,
    /// Also report Fejér-regularized sums
    #[arg(long, global = true)]
    pub fejer: bool,
    /// Output file or directory [default: stdout, or ./duals for `dual`]
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format, json or csv [default: json]
    #[arg(long, global = true)]
    pub format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub windows: Vec<WindowEntry>,
    #[serde(default)]
    pub lattices: Vec<LatticeParams>,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub exponents: ExponentsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either an analytic window `{name, params}` or `{file}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowEntry {
    pub name: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub w: Option<String>,
    pub v: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub p: Option<ExponentList>,
    pub q: Option<ExponentList>,
}

/// A single exponent or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExponentList {
    One(Exponent),
    Many(Vec<Exponent>),
}

impl ExponentList {
    fn into_vec(self) -> Vec<Exponent> {
        match self {
            ExponentList::One(e) => vec![e],
            ExponentList::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    pub tol: Option<f64>,
    pub prune: Option<f64>,
    pub max_terms: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<String>,
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
            Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
            _ => Err("config files must end in .json or .toml".to_string()),
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub enum WindowSource {
    Analytic(Window),
    File(PathBuf),
}

/// Fully resolved settings with every window sampled and every lattice checked.
#[derive(Debug, Clone)]
pub struct Settings {
    pub grid: GridSpec,
    pub sources: Vec<WindowSource>,
    pub windows: Vec<SampledFunction>,
    pub lattices: Vec<LatticeParams>,
    pub w: WeightSpec,
    pub v: WeightSpec,
    pub p: Vec<Exponent>,
    pub q: Vec<Exponent>,
    pub neumann: NeumannOptions,
    pub refine: Vec<usize>,
    pub fejer: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| config_err(format!("--{what} expects two comma-separated numbers, got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| config_err(format!("--{what}: {t:?} is not a number")))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    let (l, samples) = parse_pair(s, "grid")?;
    if l.fract() != 0.0 || samples.fract() != 0.0 || l < 1.0 || samples < 1.0 {
        return Err(config_err(format!("--grid expects positive integers, got {s:?}")));
    }
    GridSpec::new(l as usize, samples as usize).map_err(config_err)
}

fn parse_exponents(s: &str) -> Result<Vec<Exponent>, CliError> {
    s.split(',')
        .map(|t| t.parse::<Exponent>().map_err(config_err))
        .collect()
}

pub fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| config_err(format!("--{what}: {t:?} is not a non-negative integer")))
        })
        .collect()
}

fn resolve_window_flag(spec: &str) -> WindowSource {
    match spec.parse::<Window>() {
        Ok(w) => WindowSource::Analytic(w),
        Err(_) => WindowSource::File(PathBuf::from(spec)),
    }
}

fn resolve_window_entry(entry: &WindowEntry, base: &Path) -> Result<WindowSource, CliError> {
    match (&entry.name, &entry.file) {
        (Some(name), None) => {
            let [param] = entry.params[..] else {
                return Err(config_err(format!("window {name:?} takes exactly one parameter")));
            };
            format!("{name}:{param}")
                .parse::<Window>()
                .map(WindowSource::Analytic)
                .map_err(config_err)
        }
        (None, Some(file)) => Ok(WindowSource::File(base.join(file))),
        _ => Err(config_err("each window needs exactly one of `name` and `file`")),
    }
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let (config, base) = match &args.config {
            Some(path) => (
                RunConfig::load(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (RunConfig::default(), PathBuf::new()),
        };

        let grid = match (&args.grid, config.grid) {
            (Some(s), _) => parse_grid(s)?,
            (None, Some(g)) => GridSpec::new(g.period(), g.samples_per_unit()).map_err(config_err)?,
            (None, None) => GridSpec::new(DEFAULT_GRID.0, DEFAULT_GRID.1).map_err(config_err)?,
        };

        let sources = if args.window.is_empty() {
            config
                .windows
                .iter()
                .map(|e| resolve_window_entry(e, &base))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            args.window.iter().map(|s| resolve_window_flag(s)).collect()
        };
        let windows = sources
            .iter()
            .map(|src| match src {
                WindowSource::Analytic(w) => w.sample(grid).map_err(config_err),
                WindowSource::File(path) => {
                    if !path.is_file() {
                        return Err(config_err(format!(
                            "window {:?} is neither NAME:PARAM nor an existing file",
                            path.display().to_string()
                        )));
                    }
                    load_signal(path, Some(grid)).map_err(|e| config_err(format!("{}: {e}", path.display())))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut lattices = if args.lattice.is_empty() {
            config.lattices.clone()
        } else {
            args.lattice
                .iter()
                .map(|s| parse_pair(s, "lattice").map(|(alpha, beta)| LatticeParams { alpha, beta }))
                .collect::<Result<Vec<_>, _>>()?
        };
        if lattices.is_empty() {
            lattices.push(DEFAULT_LATTICE);
        }
        if lattices.len() == 1 && windows.len() > 1 {
            lattices = vec![lattices[0]; windows.len()];
        }
        if !windows.is_empty() && lattices.len() != windows.len() {
            return Err(config_err(format!(
                "{} windows but {} lattices",
                windows.len(),
                lattices.len()
            )));
        }
        for l in &lattices {
            TFLattice::new(grid, l.alpha, l.beta).map_err(config_err)?;
        }

        let w: WeightSpec = args
            .weight
            .as_deref()
            .or(config.weights.w.as_deref())
            .unwrap_or("poly:0")
            .parse()
            .map_err(config_err)?;
        let v = match config.weights.v.as_deref() {
            Some(s) if args.weight.is_none() => s.parse().map_err(config_err)?,
            _ => w.clone(),
        };

        let p = match (&args.p, config.exponents.p) {
            (Some(s), _) => parse_exponents(s)?,
            (None, Some(list)) => list.into_vec(),
            (None, None) => vec![Exponent::Finite(2.0)],
        };
        let q = match (&args.q, config.exponents.q) {
            (Some(s), _) => parse_exponents(s)?,
            (None, Some(list)) => list.into_vec(),
            (None, None) => vec![Exponent::Finite(2.0)],
        };
        if p.is_empty() || q.is_empty() {
            return Err(config_err("--p and --q need at least one exponent"));
        }

        let defaults = NeumannOptions::default();
        let neumann = NeumannOptions {
            tol: args.tol.or(config.tolerances.tol).unwrap_or(defaults.tol),
            max_terms: config.tolerances.max_terms.unwrap_or(defaults.max_terms),
            prune: config.tolerances.prune.unwrap_or(defaults.prune),
            weight: w.clone(),
        };
        if !(neumann.tol > 0.0) || !(neumann.prune >= 0.0) || neumann.max_terms == 0 {
            return Err(config_err("tolerances must be positive"));
        }

        let refine = match &args.refine {
            Some(s) => parse_usize_list(s, "refine")?,
            None => Vec::new(),
        };

        let format = args
            .format
            .as_deref()
            .or(config.output.format.as_deref())
            .unwrap_or("json")
            .parse()
            .map_err(config_err)?;
        let out = args.out.clone().or_else(|| config.output.path.map(|p| base.join(p)));

        Ok(Self {
            grid,
            sources,
            windows,
            lattices,
            w,
            v,
            p,
            q,
            neumann,
            refine,
            fejer: args.fejer,
            out,
            format,
        })
    }

    pub fn system(&self) -> Result<MultiWindowSystem, CliError> {
        if self.windows.is_empty() {
            return Err(config_err("no window given (use --window or `windows` in the config)"));
        }
        let systems = self
            .windows
            .iter()
            .zip(&self.lattices)
            .map(|(g, l)| GaborSystem::new(g.clone(), TFLattice::new(self.grid, l.alpha, l.beta)?))
            .collect::<Result<Vec<_>, _>>()
            .map_err(config_err)?;
        MultiWindowSystem::new(systems).map_err(config_err)
    }

    /// Analytic windows for re-sampling; fails if any window came from a file.
    pub fn analytic_windows(&self) -> Result<Vec<Window>, CliError> {
        self.sources
            .iter()
            .map(|s| match s {
                WindowSource::Analytic(w) => Ok(*w),
                WindowSource::File(p) => Err(config_err(format!(
                    "--refine needs analytic windows, {} is a file",
                    p.display()
                ))),
            })
            .collect()
    }

    pub fn amalgam(&self, p: Exponent, q: Exponent) -> AmalgamParams {
        AmalgamParams::new(p, q, self.v.clone(), self.w.clone())
    }
}
