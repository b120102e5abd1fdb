//! Configuration, dispatch and CSV output for the `ado3d` command.
//!
//! Values come from three layers: built-in defaults, an optional `key=value`
//! file, then command-line flags. Everything is validated before any engine runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use ado3d::analytic::analytic_energy_density;
use ado3d::eigen::EigenSystem;
use ado3d::halfspace::{energy_density, SourceSpec};
use ado3d::hankel::DEConfig;
use ado3d::mc::{simulate, BinGrid, McConfig, McSource};
use ado3d::MediumParams;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    AdoPencil,
    AdoIso,
    Analytic,
    Mc,
    Compare,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::AdoPencil => "ado-pencil",
            Engine::AdoIso => "ado-iso",
            Engine::Analytic => "analytic",
            Engine::Mc => "mc",
            Engine::Compare => "compare",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        <Engine as ValueEnum>::from_str(s, false).map_err(|_| usage(format!("unknown engine '{s}' (expected ado-pencil, ado-iso, analytic, mc or compare)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Iso,
    Pencil,
}

impl Source {
    fn parse(s: &str) -> Result<Self, CliError> {
        <Source as ValueEnum>::from_str(s, false).map_err(|_| usage(format!("unknown source '{s}' (expected iso or pencil)")))
    }
}

/// Command-line flags; every value is optional so the config file can supply it.
#[derive(Debug, Parser, Default)]
#[command(name = "ado3d", version, about = "Energy density of 3D radiative transport in the half space")]
pub struct Flags {
    /// key=value file with defaults for any flag below
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// absorption coefficient, 1/mm
    #[arg(long)]
    pub mua: Option<f64>,
    /// scattering coefficient, 1/mm
    #[arg(long)]
    pub mus: Option<f64>,
    /// anisotropy factor in [0, 1)
    #[arg(long)]
    pub g: Option<f64>,
    /// phase-function truncation order
    #[arg(long)]
    pub lmax: Option<usize>,
    /// quadrature half-order (2N ordinates)
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// source-detector distance in mm; repeatable
    #[arg(long)]
    pub rho: Vec<f64>,
    /// first depth, mm
    #[arg(long)]
    pub zmin: Option<f64>,
    /// last depth, mm
    #[arg(long)]
    pub zmax: Option<f64>,
    /// number of equally spaced depths
    #[arg(long)]
    pub nz: Option<usize>,
    /// Monte Carlo photon count
    #[arg(long)]
    pub photons: Option<u64>,
    /// Monte Carlo seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// boundary source of the Monte Carlo engine
    #[arg(long, value_enum)]
    pub source: Option<Source>,
    /// engines compared by `compare`, as `first,second`
    #[arg(long)]
    pub pair: Option<String>,
    /// Monte Carlo annulus width, mm
    #[arg(long = "rho-bin")]
    pub rho_bin: Option<f64>,
    /// Monte Carlo slab thickness, mm
    #[arg(long = "z-bin")]
    pub z_bin: Option<f64>,
    /// DE mesh size
    #[arg(long = "de-h")]
    pub de_h: Option<f64>,
    /// DE half-width in nodes
    #[arg(long = "de-nk")]
    pub de_nk: Option<usize>,
    /// relative tolerance between DE refinements
    #[arg(long = "de-tol")]
    pub de_tol: Option<f64>,
    /// output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, values or combinations; exit status 2.
    Usage(String),
    /// An engine failed; exit status 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn compute(e: ado3d::Error) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ZGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count).map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Engine,
    pub medium: MediumParams,
    pub rho: Vec<f64>,
    pub z: ZGrid,
    pub de: DEConfig,
    pub photons: u64,
    pub seed: u64,
    pub source: Source,
    pub pair: (Engine, Engine),
    pub rho_bin: f64,
    pub z_bin: f64,
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "engine", "mua", "mus", "g", "lmax", "N", "rho", "zmin", "zmax", "nz", "photons", "seed", "source", "pair", "rho-bin", "z-bin",
    "de-h", "de-nk", "de-tol", "out",
];

/// `key=value` lines; `#` starts a comment. `rho` may list several values separated by commas.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key=value", k + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(usage(format!("config line {}: unknown key '{key}'", k + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("config key '{key}': cannot parse '{v}'"))))
        .transpose()
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    Ok(match flag {
        Some(v) => v,
        None => from_file(file, key)?.unwrap_or(default),
    })
}

fn parse_pair(s: &str) -> Result<(Engine, Engine), CliError> {
    let (a, b) = s.split_once(',').ok_or_else(|| usage(format!("pair '{s}' must look like ado-iso,analytic")))?;
    let pair = (Engine::parse(a.trim())?, Engine::parse(b.trim())?);
    if pair.0 == Engine::Compare || pair.1 == Engine::Compare || pair.0 == pair.1 {
        return Err(usage("pair needs two different engines other than compare"));
    }
    Ok(pair)
}

/// Merges flags over the config file over defaults, then validates.
pub fn resolve(flags: Flags, file: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let engine = match flags.engine {
        Some(e) => e,
        None => match file.get("engine") {
            Some(s) => Engine::parse(s)?,
            None => return Err(usage("no engine given (use --engine)")),
        },
    };
    let source = match flags.source {
        Some(s) => s,
        None => file.get("source").map(|s| Source::parse(s)).transpose()?.unwrap_or(Source::Iso),
    };
    let pair = match (&flags.pair, file.get("pair")) {
        (Some(s), _) | (None, Some(s)) => parse_pair(s)?,
        (None, None) => (Engine::AdoIso, Engine::Analytic),
    };
    let rho = if !flags.rho.is_empty() {
        flags.rho.clone()
    } else if let Some(list) = file.get("rho") {
        list.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("config key 'rho': cannot parse '{v}'")))).collect::<Result<_, _>>()?
    } else {
        vec![5.0]
    };
    let d = DEConfig::default();
    let de = DEConfig {
        h: pick(flags.de_h, file, "de-h", d.h)?,
        n_k: pick(flags.de_nk, file, "de-nk", d.n_k)?,
        convergence: pick(flags.de_tol, file, "de-tol", d.convergence)?,
        ..d
    };
    let medium = MediumParams {
        mu_a: pick(flags.mua, file, "mua", 0.01)?,
        mu_s: pick(flags.mus, file, "mus", 10.0)?,
        g: pick(flags.g, file, "g", 0.9)?,
        l_max: pick(flags.lmax, file, "lmax", 9)?,
        n: pick(flags.n, file, "N", 9)?,
    };
    let out = flags.out.or_else(|| file.get("out").map(PathBuf::from));
    let cfg = RunConfig {
        engine,
        medium,
        rho,
        z: ZGrid { min: pick(flags.zmin, file, "zmin", 0.5)?, max: pick(flags.zmax, file, "zmax", 10.0)?, count: pick(flags.nz, file, "nz", 40)? },
        de,
        photons: pick(flags.photons, file, "photons", 1_000_000)?,
        seed: pick(flags.seed, file, "seed", 1)?,
        source,
        pair,
        rho_bin: pick(flags.rho_bin, file, "rho-bin", 0.4)?,
        z_bin: pick(flags.z_bin, file, "z-bin", 0.25)?,
        out,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn engines(cfg: &RunConfig) -> Vec<Engine> {
    match cfg.engine {
        Engine::Compare => vec![cfg.pair.0, cfg.pair.1],
        e => vec![e],
    }
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.medium.validate().map_err(|e| usage(e.to_string()))?;
    if cfg.rho.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(usage("every rho must be a positive distance in mm"));
    }
    let z = &cfg.z;
    if z.count == 0 || !(z.min >= 0.0) || !z.max.is_finite() || (z.count > 1 && !(z.max > z.min)) {
        return Err(usage("the z grid needs 0 <= zmin < zmax and nz >= 1"));
    }
    cfg.de.validate().map_err(|e| usage(e.to_string()))?;
    for e in engines(cfg) {
        match e {
            Engine::Analytic if cfg.medium.l_max > 1 => return Err(usage("analytic engine requires lmax <= 1")),
            Engine::Mc => {
                if cfg.photons == 0 {
                    return Err(usage("photons must be >= 1"));
                }
                if !(cfg.rho_bin > 0.0) || !(cfg.z_bin > 0.0) {
                    return Err(usage("Monte Carlo bin widths must be positive"));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// One engine's values on the rows of the run.
struct Column {
    u: Vec<f64>,
    stderr: Option<Vec<f64>>,
}

/// Rows are `(rho, z)` pairs: the requested grid, or the Monte Carlo cell
/// centers when the Monte Carlo engine takes part.
fn row_grid(cfg: &RunConfig) -> Vec<(f64, Vec<f64>)> {
    if engines(cfg).contains(&Engine::Mc) {
        let centers = BinGrid { count: (cfg.z.max / cfg.z_bin).ceil() as usize, width: cfg.z_bin }.centers();
        let zs: Vec<f64> = centers.into_iter().filter(|z| (cfg.z.min..=cfg.z.max).contains(z)).collect();
        cfg.rho.iter().map(|&r| (((r / cfg.rho_bin).floor() + 0.5) * cfg.rho_bin, zs.clone())).collect()
    } else {
        cfg.rho.iter().map(|&r| (r, cfg.z.points())).collect()
    }
}

fn run_engine(engine: Engine, cfg: &RunConfig, rows: &[(f64, Vec<f64>)]) -> Result<Column, CliError> {
    let p = &cfg.medium;
    let mut u = Vec::new();
    match engine {
        Engine::AdoPencil | Engine::AdoIso => {
            let sys = EigenSystem::azimuthal_zero(p).map_err(compute)?;
            let src = if engine == Engine::AdoIso { SourceSpec::Isotropic } else { SourceSpec::normal_pencil(&sys.quad) };
            for (rho, zs) in rows {
                u.extend(energy_density(&sys, &src, *rho, zs, &cfg.de).map_err(compute)?);
            }
            Ok(Column { u, stderr: None })
        }
        Engine::Analytic => {
            for (rho, zs) in rows {
                u.extend(analytic_energy_density(*rho, zs, p, &cfg.de).map_err(compute)?);
            }
            Ok(Column { u, stderr: None })
        }
        Engine::Mc => {
            let rho_top = cfg.rho.iter().cloned().fold(0.0, f64::max);
            let mut mc = McConfig::new(*p, cfg.photons, cfg.seed);
            mc.rho_bins = BinGrid { count: (rho_top / cfg.rho_bin).floor() as usize + 1, width: cfg.rho_bin };
            mc.z_bins = BinGrid { count: (cfg.z.max / cfg.z_bin).ceil() as usize, width: cfg.z_bin };
            let source = if cfg.source == Source::Iso { McSource::Isotropic } else { McSource::Pencil };
            let tally = simulate(&mc, source).map_err(compute)?;
            let mut se = Vec::new();
            for (rho, zs) in rows {
                let (centers, tu, ts) = tally.profile(*rho).map_err(compute)?;
                for z in zs {
                    let k = centers.iter().position(|c| c == z).ok_or_else(|| CliError::Compute(format!("no Monte Carlo cell at z = {z}")))?;
                    u.push(tu[k]);
                    se.push(ts[k]);
                }
            }
            Ok(Column { u, stderr: Some(se) })
        }
        Engine::Compare => Err(usage("compare cannot be nested")),
    }
}

/// Runs the configured engines and renders the CSV document.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    validate(cfg)?;
    let rows = row_grid(cfg);
    let p = &cfg.medium;
    let mut out = String::new();
    let _ = writeln!(out, "# engine={}", cfg.engine.name());
    let _ = writeln!(out, "# mua={} mus={} g={} lmax={} N={}", p.mu_a, p.mu_s, p.g, p.l_max, p.n);
    let _ = writeln!(out, "# units: rho_mm,z_mm,u (mu_t^2-scaled)");
    if engines(cfg).contains(&Engine::Mc) {
        let src = if cfg.source == Source::Iso { "iso" } else { "pencil" };
        let _ = writeln!(
            out,
            "# mc: photons={} seed={} source={src} estimator=path-length rho_bin_mm={} z_bin_mm={} (rho and z are cell centers)",
            cfg.photons, cfg.seed, cfg.rho_bin, cfg.z_bin
        );
    }
    match cfg.engine {
        Engine::Compare => {
            let (a, b) = cfg.pair;
            let ca = run_engine(a, cfg, &rows)?;
            let cb = run_engine(b, cfg, &rows)?;
            let rel: Vec<f64> = ca.u.iter().zip(&cb.u).map(|(x, y)| ((x - y) / y).abs()).collect();
            let worst = rel.iter().cloned().fold(0.0, f64::max);
            let _ = writeln!(out, "# compare: {} vs {}", a.name(), b.name());
            let _ = writeln!(out, "# max_rel_diff={worst:e}");
            let _ = writeln!(out, "rho,z,u_{},u_{},rel_diff", a.name(), b.name());
            let mut k = 0;
            for (rho, zs) in &rows {
                for z in zs {
                    let _ = writeln!(out, "{rho:e},{z:e},{:e},{:e},{:e}", ca.u[k], cb.u[k], rel[k]);
                    k += 1;
                }
            }
        }
        e => {
            let col = run_engine(e, cfg, &rows)?;
            let _ = writeln!(out, "{}", if col.stderr.is_some() { "rho,z,u,stderr" } else { "rho,z,u" });
            let mut k = 0;
            for (rho, zs) in &rows {
                for z in zs {
                    match &col.stderr {
                        Some(se) => writeln!(out, "{rho:e},{z:e},{:e},{:e}", col.u[k], se[k]),
                        None => writeln!(out, "{rho:e},{z:e},{:e}", col.u[k]),
                    }
                    .expect("writing to a String cannot fail");
                    k += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Full command: parse `argv`, run, write the CSV. Returns the exit status.
pub fn main_with_args(argv: Vec<String>) -> u8 {
    if argv.len() <= 1 {
        use clap::CommandFactory;
        eprintln!("{}", Flags::command().render_help());
        return 2;
    }
    let flags = match Flags::try_parse_from(&argv) {
        Ok(f) => f,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = (|| {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let cfg = resolve(flags, &file)?;
        let csv = run(&cfg)?;
        match &cfg.out {
            Some(path) => std::fs::write(path, csv).map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ado3d: {e}");
            e.exit_code()
        }
    }
}
