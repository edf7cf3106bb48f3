//! Settings shared by all subcommands: command-line flags layered over an
//! optional JSON config file, then over per-command defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use dualmix_core::{MeshFamily, SpaceKind};
use serde::Deserialize;

/// Either a number of dyadic levels or an explicit list of resolutions.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    Count(usize),
    List(Vec<usize>),
}

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("invalid levels '{s}' (use a count such as 5 or a list such as 8,16,32)");
        if s.contains(',') {
            let list = s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if list.is_empty() {
                return Err(bad());
            }
            Ok(Levels::List(list))
        } else {
            s.trim().parse().map(Levels::Count).map_err(|_| bad())
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for randomized loads and test vectors
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of dyadic levels (e.g. 5) or explicit resolutions (e.g. 8,16,32)
    #[arg(long)]
    pub levels: Option<Levels>,
    /// First resolution when --levels is a count
    #[arg(long)]
    pub n0: Option<usize>,
    /// crossed, right, lshape or file:<path>, where {n} in the path is the level
    #[arg(long)]
    pub mesh: Option<String>,
    /// Flux element: rt0c or drt0
    #[arg(long)]
    pub element: Option<String>,
    /// Output directory
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Keys accepted in a config file. Every key is optional and mirrors the
/// flag of the same name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub levels: Option<Levels>,
    pub n0: Option<usize>,
    pub mesh: Option<String>,
    pub element: Option<String>,
    pub out: Option<PathBuf>,
    pub load: Option<String>,
    pub threshold: Option<f64>,
    pub case: Option<String>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config '{}' (check the --config path)", path.display()))?;
        serde_json::from_str(&text).with_context(|| {
            format!("malformed config '{}' (see docs/config.md for the accepted keys)", path.display())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Solve,
    Infsup,
    Split,
    Alpha,
    P1p0,
    Equilibrate,
    Convergence,
    Demo,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Infsup => "infsup",
            Command::Split => "split",
            Command::Alpha => "alpha",
            Command::P1p0 => "p1p0",
            Command::Equilibrate => "equilibrate",
            Command::Convergence => "convergence",
            Command::Demo => "demo",
        };
        f.write_str(s)
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: Command,
    pub seed: u64,
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub element: SpaceKind,
    pub out: PathBuf,
    pub load: Option<String>,
    pub threshold: Option<f64>,
    pub case: Option<String>,
}

fn default_n0(family: &MeshFamily) -> usize {
    match family {
        MeshFamily::Crossed | MeshFamily::LShape => 2,
        MeshFamily::Right => 4,
        MeshFamily::Files(_) => 8,
        MeshFamily::Refined(_) => 0,
    }
}

/// Levels used when neither a flag nor the config names them.
fn default_levels(command: Command, family: &MeshFamily, case: Option<&str>) -> Vec<usize> {
    let n0 = default_n0(family);
    match command {
        Command::Infsup => family.dyadic_levels(n0, 5),
        Command::P1p0 => family.dyadic_levels(2, 6),
        Command::Split | Command::Alpha => vec![8],
        Command::Demo => family.dyadic_levels(8, 4),
        Command::Convergence if case != Some("lshape-singular") && !matches!(family, MeshFamily::Files(_)) => {
            family.dyadic_levels(10, 4)
        }
        Command::Convergence => family.dyadic_levels(if matches!(family, MeshFamily::Files(_)) { 8 } else { 4 }, 4),
        Command::Mesh | Command::Solve | Command::Equilibrate => family.dyadic_levels(n0, 3),
    }
}

fn default_family(command: Command, case: Option<&str>) -> MeshFamily {
    match (command, case) {
        (Command::Convergence, Some("lshape-singular")) => MeshFamily::LShape,
        (Command::P1p0, _) => MeshFamily::Right,
        _ => MeshFamily::Crossed,
    }
}

impl Settings {
    pub fn resolve(
        command: Command,
        common: &CommonArgs,
        load: Option<String>,
        threshold: Option<f64>,
        case: Option<String>,
    ) -> Result<Self> {
        let file = match &common.config {
            Some(path) => FileConfig::read(path)?,
            None => FileConfig::default(),
        };
        let case = case.or(file.case);
        let family = match common.mesh.clone().or(file.mesh) {
            Some(m) => m.parse::<MeshFamily>()?,
            None => default_family(command, case.as_deref()),
        };
        let n0 = common.n0.or(file.n0);
        let levels = match (common.levels.clone().or(file.levels), n0) {
            (Some(Levels::List(list)), _) => list,
            (Some(Levels::Count(c)), n0) => family.dyadic_levels(n0.unwrap_or_else(|| default_n0(&family)), c),
            (None, Some(n0)) => family.dyadic_levels(n0, 1),
            (None, None) => default_levels(command, &family, case.as_deref()),
        };
        if levels.is_empty() {
            bail!("no mesh levels selected (pass --levels with a positive count or a list)");
        }
        if let Some(&bad) = levels.iter().find(|&&n| n == 0) {
            bail!("mesh level {bad} is not allowed (levels are subdivisions per unit length and must be positive)");
        }
        let element: SpaceKind = common.element.clone().or(file.element).as_deref().unwrap_or("rt0c").parse()?;
        if !element.is_vector() {
            bail!("element '{element}' is not a flux element (use rt0c or drt0)");
        }
        let threshold = threshold.or(file.threshold);
        if let Some(t) = threshold {
            if !(t > 0.0 && t < 1.0) {
                bail!("threshold {t} is outside (0, 1) (pick a value such as 0.5)");
            }
        }
        Ok(Settings {
            command,
            seed: common.seed.or(file.seed).unwrap_or(0),
            family,
            levels,
            element,
            out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            load: load.or(file.load),
            threshold,
            case,
        })
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}
