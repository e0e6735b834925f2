//! Flags, the key=value config file, and the resolved run configuration.

use clap::{Args, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Variational,
    Explicit,
    Monotone,
}

/// Options shared by every subcommand. Unset options fall back to the
/// config file, then to per-command defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Space dimension
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    /// Order of the fractional Laplacian, in (0, 1)
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Weight exponent of the Hardy potential and ground state
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Power of the nonlinearity
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Integrability exponent of the remainder norm
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Radial nodes (solvers) or nodes per decade (trial families)
    #[arg(long = "grid-nodes", global = true)]
    pub grid_nodes: Option<usize>,
    /// Smallest positive radius of the grid
    #[arg(long = "r-min", global = true)]
    pub r_min: Option<f64>,
    /// Outer radius of the grid
    #[arg(long = "r-max", global = true)]
    pub r_max: Option<f64>,
    /// Tolerance of the command's main check
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table formats; the JSON report is always written
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
    /// key=value file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `start:end:count` sweep of alpha for `constants`
    #[arg(long = "alpha-sweep", global = true)]
    pub alpha_sweep: Option<String>,
    /// Restrict `verify` to the named checks (repeatable)
    #[arg(long, global = true, value_delimiter = ',')]
    pub check: Vec<String>,
    /// Members of the trial family
    #[arg(long = "family-size", global = true)]
    pub family_size: Option<usize>,
    /// Seed of the randomized trial members and problems
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver path of `solve`
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Repeat `remainder` on a refined grid and compare infima
    #[arg(long, global = true)]
    pub refine: bool,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Invalid(format!("config key {key}: cannot parse {v:?}")))
}

impl Flags {
    /// Read a key=value file. Blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
        let mut f = Flags::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "N" => f.n = Some(parse(k, v)?),
                "s" => f.s = Some(parse(k, v)?),
                "alpha" => f.alpha = Some(parse(k, v)?),
                "p" => f.p = Some(parse(k, v)?),
                "q" => f.q = Some(parse(k, v)?),
                "grid-nodes" => f.grid_nodes = Some(parse(k, v)?),
                "r-min" => f.r_min = Some(parse(k, v)?),
                "r-max" => f.r_max = Some(parse(k, v)?),
                "tol" => f.tol = Some(parse(k, v)?),
                "out" => f.out = Some(PathBuf::from(v)),
                "format" => {
                    f.format = v
                        .split(',')
                        .map(|x| Format::from_str(x.trim(), true).map_err(|_| CliError::Invalid(format!("unknown format {x:?}"))))
                        .collect::<Result<_, _>>()?
                }
                "alpha-sweep" => f.alpha_sweep = Some(v.to_string()),
                "check" => f.check = v.split(',').map(|x| x.trim().to_string()).collect(),
                "family-size" => f.family_size = Some(parse(k, v)?),
                "seed" => f.seed = Some(parse(k, v)?),
                "method" => {
                    f.method = Some(Method::from_str(v, true).map_err(|_| CliError::Invalid(format!("unknown method {v:?}")))?)
                }
                "refine" => f.refine = parse(k, v)?,
                _ => return Err(CliError::Invalid(format!("config line {}: unknown key {k:?}", i + 1))),
            }
        }
        Ok(f)
    }

    /// Fill every unset option from `other`.
    pub fn or(self, other: Flags) -> Flags {
        Flags {
            n: self.n.or(other.n),
            s: self.s.or(other.s),
            alpha: self.alpha.or(other.alpha),
            p: self.p.or(other.p),
            q: self.q.or(other.q),
            grid_nodes: self.grid_nodes.or(other.grid_nodes),
            r_min: self.r_min.or(other.r_min),
            r_max: self.r_max.or(other.r_max),
            tol: self.tol.or(other.tol),
            out: self.out.or(other.out),
            format: if self.format.is_empty() { other.format } else { self.format },
            config: self.config,
            alpha_sweep: self.alpha_sweep.or(other.alpha_sweep),
            check: if self.check.is_empty() { other.check } else { self.check },
            family_size: self.family_size.or(other.family_size),
            seed: self.seed.or(other.seed),
            method: self.method.or(other.method),
            refine: self.refine || other.refine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Sweep {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Invalid(format!("alpha sweep {text:?}: expected start:end:count"));
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(start < end) || count < 2 {
            return Err(CliError::Invalid(format!("alpha sweep {text:?}: needs start < end and count >= 2")));
        }
        Ok(Sweep { start, end, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + h * i as f64).collect()
    }
}

/// Fully resolved configuration, embedded in every report. Options the
/// command does not use are `null`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub grid_nodes: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub tol: Option<f64>,
    pub out: String,
    pub formats: Vec<Format>,
    pub checks: Vec<String>,
    pub alpha_sweep: Option<Sweep>,
    pub family_size: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub refine: bool,
}

pub const VERIFY_CHECKS: [&str; 6] = ["groundstate", "backends", "mass", "dtn", "energy", "maximum"];

struct Defaults {
    grid_nodes: Option<usize>,
    r_min: Option<f64>,
    r_max: Option<f64>,
    tol: Option<f64>,
}

fn defaults(command: &str, method: Option<Method>) -> Defaults {
    let d = |g: usize, lo: f64, hi: f64, tol: f64| Defaults { grid_nodes: Some(g), r_min: Some(lo), r_max: Some(hi), tol: Some(tol) };
    match (command, method) {
        ("constants", _) => Defaults { grid_nodes: None, r_min: None, r_max: None, tol: Some(1e-12) },
        ("verify", _) => d(256, 1e-3, 1e3, 1e-3),
        ("solve", Some(Method::Explicit)) => d(1600, 1e-4, 1e4, 1e-3),
        ("solve", _) => d(160, 1e-3, 40.0, 1e-3),
        ("nonexistence", _) => Defaults { grid_nodes: Some(300), r_min: Some(1e-6), r_max: Some(40.0), tol: None },
        ("hardy", _) => Defaults { grid_nodes: Some(60), r_min: None, r_max: None, tol: Some(0.01) },
        ("remainder", _) => Defaults { grid_nodes: Some(60), r_min: None, r_max: None, tol: Some(0.2) },
        _ => d(240, 1e-3, 40.0, 0.01),
    }
}

impl RunConfig {
    pub fn resolve(command: &str, flags: Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => {
                let file = Flags::from_file(path)?;
                flags.or(file)
            }
            None => flags,
        };
        let n = flags.n.unwrap_or(3);
        let s = flags.s.unwrap_or(0.5);
        let alpha = flags.alpha.unwrap_or(0.0);
        let p = flags.p.unwrap_or(2.0);
        let q = flags.q.unwrap_or(1.5);

        let mut method = if command == "solve" { Some(flags.method.unwrap_or(Method::Auto)) } else { None };
        if method == Some(Method::Auto) {
            method = Some(crate::commands::solve_path(n, s, alpha, p));
        }
        let d = defaults(command, method);
        let pick = |v: Option<f64>, dv: Option<f64>| dv.map(|x| v.unwrap_or(x));
        let grid_nodes = d.grid_nodes.map(|x| flags.grid_nodes.unwrap_or(x));
        let (r_min, r_max, tol) = (pick(flags.r_min, d.r_min), pick(flags.r_max, d.r_max), pick(flags.tol, d.tol));

        if let Some(g) = grid_nodes {
            if g < 8 {
                return Err(CliError::Invalid(format!("--grid-nodes {g} is below 8")));
            }
        }
        if let (Some(lo), Some(hi)) = (r_min, r_max) {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(CliError::Invalid(format!("need 0 < r-min < r-max, got {lo} and {hi}")));
            }
        }
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Invalid(format!("--tol {t} must be positive")));
            }
        }
        let checks = if command == "verify" {
            let mut c = if flags.check.is_empty() { VERIFY_CHECKS.iter().map(|x| x.to_string()).collect() } else { flags.check };
            for name in &c {
                if !VERIFY_CHECKS.contains(&name.as_str()) {
                    return Err(CliError::Invalid(format!("unknown check {name:?}; known: {}", VERIFY_CHECKS.join(", "))));
                }
            }
            c.dedup();
            c
        } else {
            Vec::new()
        };
        let alpha_sweep = match (command, &flags.alpha_sweep) {
            ("constants", Some(t)) => Some(Sweep::parse(t)?),
            _ => None,
        };
        let family = matches!(command, "hardy" | "remainder");
        let family_size = family.then(|| flags.family_size.unwrap_or(20));
        if family_size == Some(0) {
            return Err(CliError::Invalid("--family-size must be positive".into()));
        }
        let seed = (family || command == "verify").then(|| flags.seed.unwrap_or(7));
        let mut formats = if flags.format.is_empty() { vec![Format::Csv] } else { flags.format };
        formats.sort();
        formats.dedup();
        Ok(RunConfig {
            command: command.to_string(),
            n,
            s,
            alpha,
            p,
            q,
            grid_nodes,
            r_min,
            r_max,
            tol,
            out: flags.out.unwrap_or_else(|| PathBuf::from("out")).to_string_lossy().into_owned(),
            formats,
            checks,
            alpha_sweep,
            family_size,
            seed,
            method,
            refine: command == "remainder" && flags.refine,
        })
    }

    pub fn grid_nodes(&self) -> usize {
        self.grid_nodes.expect("resolved for this command")
    }
    pub fn r_min(&self) -> f64 {
        self.r_min.expect("resolved for this command")
    }
    pub fn r_max(&self) -> f64 {
        self.r_max.expect("resolved for this command")
    }
    pub fn tol(&self) -> f64 {
        self.tol.expect("resolved for this command")
    }
}
