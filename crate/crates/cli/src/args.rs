//! Flag grammars shared by the subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use dualgap_core::catalog::{self, CatalogParams};
use dualgap_core::{Error, Instance};

/// Where the instance comes from: a positional catalog name or JSON path,
/// or one of the explicit flags.
#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Catalog name or path to an instance JSON file.
    pub target: Option<String>,
    /// Path to an instance JSON file.
    #[arg(long, conflicts_with_all = ["target", "catalog"])]
    pub instance: Option<PathBuf>,
    /// Catalog entry name.
    #[arg(long, conflicts_with = "target")]
    pub catalog: Option<String>,
    /// Above-diagonal value of diag_M.
    #[arg(long = "M", default_value_t = catalog::DEFAULT_M)]
    pub m: f64,
    /// Number of removed intervals of fat_set.
    #[arg(long = "K", default_value_t = catalog::DEFAULT_K)]
    pub k: usize,
}

impl InstanceArgs {
    /// `cells` sets the generation grid of random_finite.
    pub fn resolve(&self, seed: u64, cells: usize) -> Result<Instance, Error> {
        if let Some(path) = &self.instance {
            return Instance::load(path);
        }
        let name = self
            .catalog
            .as_deref()
            .or(self.target.as_deref())
            .ok_or_else(|| Error::Config("no instance given: pass a catalog name or --instance <file>".into()))?;
        if self.catalog.is_none() && (name.ends_with(".json") || Path::new(name).is_file()) {
            return Instance::load(Path::new(name));
        }
        let params = CatalogParams { m: self.m, k: self.k, seed, n: cells.clamp(1, 64), ..CatalogParams::default() };
        Ok(catalog::entry(name, &params)?.instance)
    }
}

/// `4`, `4,8,16` or a doubling range `4..64`. Entries must be at least 2.
pub fn parse_resolutions(text: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Config(format!("bad resolution list {text:?}: expected N, N1,N2,... or A..B"));
    let out: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 || b < a {
            return Err(bad());
        }
        std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
    } else {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.iter().any(|&n| n < 2) {
        return Err(Error::Config(format!("resolutions must be at least 2, got {text:?}")));
    }
    Ok(out)
}

/// One tolerance of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Fixed(f64),
    /// `1/n` at resolution `n`.
    PerResolution,
}

impl Tolerance {
    pub fn at(self, n: usize) -> f64 {
        match self {
            Tolerance::Fixed(v) => v,
            Tolerance::PerResolution => 1.0 / n as f64,
        }
    }
}

fn parse_number(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => text.trim().parse().ok(),
    }
}

/// Comma-separated tolerances in (0, 1), strictly decreasing among the
/// fixed entries; `1/n` may appear once anywhere.
pub fn parse_schedule(text: &str) -> Result<Vec<Tolerance>, Error> {
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim) {
        if token == "1/n" {
            if out.contains(&Tolerance::PerResolution) {
                return Err(Error::Config("1/n listed twice".into()));
            }
            out.push(Tolerance::PerResolution);
            continue;
        }
        let v = parse_number(token).ok_or_else(|| Error::Config(format!("bad tolerance {token:?}")))?;
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Config(format!("tolerance {token} outside (0, 1)")));
        }
        out.push(Tolerance::Fixed(v));
    }
    let fixed: Vec<f64> = out.iter().filter_map(|t| if let Tolerance::Fixed(v) = t { Some(*v) } else { None }).collect();
    if fixed.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(format!("tolerances must strictly decrease: {text:?}")));
    }
    Ok(out)
}

/// The schedule at resolution `n`, sorted decreasing with duplicates merged.
pub fn resolve_schedule(schedule: &[Tolerance], n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = schedule.iter().map(|t| t.at(n)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    v
}
