//! Settings: command-line flags over an optional TOML file over defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use invariant_dpp::sampler::Sampler;
use invariant_dpp::statistics::test_functions::TestFunction;
use invariant_dpp::SpaceKind;

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// plane, sphere or hyperbolic
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// "a:b" (doubling from a up to b) or a comma-separated list
    #[arg(long)]
    pub rho_grid: Option<String>,
    /// Observation window radius; also the envelope restriction radius
    #[arg(long)]
    pub window: Option<f64>,
    /// Weighted kernel tail allowed on the window when truncating
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on it
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// TOML file with any of the keys above (underscores for dashes)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Largest order for cumulant-identities
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Test functions such as bump:1, angular:1:2 or const:3 (repeatable)
    #[arg(long = "f", value_delimiter = ',')]
    pub f: Vec<String>,
    /// projection or matrix (sphere only)
    #[arg(long)]
    pub sampler: Option<String>,
    /// LLAP integration disk radius
    #[arg(long)]
    pub b: Option<f64>,
    /// LLAP evaluation disk radius
    #[arg(long)]
    pub b2: Option<f64>,
    /// Also compute variances by pair quadrature
    #[arg(long)]
    pub cross_check: bool,
    /// sample: resolve the truncation rank and write the manifest without drawing
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    rho: Option<f64>,
    rho_grid: Option<String>,
    window: Option<f64>,
    tail_tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    out_dir: Option<PathBuf>,
    kmax: Option<usize>,
    f: Option<Vec<String>>,
    sampler: Option<String>,
    b: Option<f64>,
    b2: Option<f64>,
    cross_check: Option<bool>,
}

/// Fully resolved settings, echoed into every manifest.
#[derive(Serialize, Debug, Clone)]
pub struct Settings {
    pub model: String,
    pub rho: f64,
    pub rho_grid: Vec<f64>,
    pub window: f64,
    pub tail_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out_dir: PathBuf,
    pub kmax: usize,
    pub f: Vec<String>,
    pub sampler: String,
    pub b: f64,
    pub b2: f64,
    pub cross_check: bool,
    pub dry_run: bool,
    pub config_file: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self, String> {
        let file = match &flags.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let model = flags.model.clone().or(file.model).unwrap_or_else(|| "sphere".into());
        let space = parse_space(&model)?;
        let disk = space == SpaceKind::Hyperbolic;
        let rho = flags.rho.or(file.rho).unwrap_or(16.0);
        let rho_grid = match flags.rho_grid.clone().or(file.rho_grid) {
            Some(g) => parse_rho_grid(&g)?,
            None => vec![rho],
        };
        let f = if !flags.f.is_empty() {
            flags.f.clone()
        } else {
            file.f.unwrap_or_else(|| vec![if disk { "bump:0.6" } else { "bump:1" }.into()])
        };
        for label in &f {
            label.parse::<TestFunction>().map_err(|e| e.to_string())?;
        }
        let s = Settings {
            model: space.name().into(),
            rho,
            rho_grid,
            window: flags.window.or(file.window).unwrap_or(if disk { 0.9 } else { 1.0 }),
            tail_tol: flags.tail_tol.or(file.tail_tol).unwrap_or(1e-10),
            samples: flags.samples.or(file.samples).unwrap_or(100),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            jobs: flags.jobs.or(file.jobs),
            rel_tol: flags.rel_tol.or(file.rel_tol).unwrap_or(1e-6),
            abs_tol: flags.abs_tol.or(file.abs_tol).unwrap_or(1e-10),
            out_dir: flags.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            kmax: flags.kmax.or(file.kmax).unwrap_or(10),
            f,
            sampler: flags.sampler.clone().or(file.sampler).unwrap_or_else(|| "projection".into()),
            b: flags.b.or(file.b).unwrap_or(if disk { 0.7 } else { 2.0 }),
            b2: flags.b2.or(file.b2).unwrap_or(if disk { 0.5 } else { 1.0 }),
            cross_check: flags.cross_check || file.cross_check.unwrap_or(false),
            dry_run: flags.dry_run,
            config_file: flags.config.clone(),
        };
        s.sampler()?;
        if s.samples == 0 {
            return Err("--samples must be positive".into());
        }
        Ok(s)
    }

    pub fn space(&self) -> SpaceKind {
        parse_space(&self.model).expect("validated in resolve")
    }

    pub fn sampler(&self) -> Result<Sampler, String> {
        match self.sampler.as_str() {
            "projection" => Ok(Sampler::Projection),
            "matrix" => Ok(Sampler::MatrixModel),
            other => Err(format!("unknown sampler {other:?}; expected projection or matrix")),
        }
    }

    pub fn test_functions(&self) -> Vec<TestFunction> {
        self.f.iter().map(|s| s.parse().expect("validated in resolve")).collect()
    }
}

fn read_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse_space(s: &str) -> Result<SpaceKind, String> {
    SpaceKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown model {s:?}; expected plane, sphere or hyperbolic"))
}

pub fn parse_rho_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad ρ value {t:?}"));
    let grid = if let Some((a, b)) = s.split_once(':') {
        let (a, b) = (num(a)?, num(b)?);
        if !(a > 0.0 && b >= a) {
            return Err(format!("ρ grid {s:?} needs 0 < a ≤ b"));
        }
        let mut g = vec![a];
        while g[g.len() - 1] * 2.0 <= b {
            g.push(g[g.len() - 1] * 2.0);
        }
        g
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|r| !(*r > 0.0)) {
        return Err(format!("ρ grid {s:?} must hold positive values"));
    }
    Ok(grid)
}
