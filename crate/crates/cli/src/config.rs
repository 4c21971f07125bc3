//! Run configuration: flags and TOML files share one schema, and every run
//! writes its fully resolved form as `config.toml` next to the outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wqed_core::ensemble::DisorderDistribution;

pub const CONFIG_FILE: &str = "config.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Wavefunction,
    Scaling,
    Disorder,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Wavefunction => "wavefunction",
            Command::Scaling => "scaling",
            Command::Disorder => "disorder",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    Index,
    MostDistant,
    Brightest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Uniform,
    Gaussian,
}

impl From<Distribution> for DisorderDistribution {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Uniform => DisorderDistribution::Uniform,
            Distribution::Gaussian => DisorderDistribution::Gaussian,
        }
    }
}

/// `atoms = 40` and `atoms = [16, 32]` are both accepted in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Atoms {
    One(usize),
    Many(Vec<usize>),
}

impl Atoms {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Atoms::One(n) => vec![*n],
            Atoms::Many(v) => v.clone(),
        }
    }
}

/// Every field is optional so that flags can override a file field by field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,

    /// Number of atoms; `scaling` takes a comma-separated list
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none", with = "atoms_serde", default)]
    pub atoms: Option<Vec<usize>>,

    /// Phase φ = ω₀d/c between neighbouring atoms
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<Sector>,

    /// Disorder strengths χ, comma-separated and ascending
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strengths: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,

    /// Histogram bins for the photon-photon distance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,

    /// Number of leading terms kept in the truncated wavefunction
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select: Option<Selector>,

    /// State index for `--select index` (0 = most radiant)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,

    /// Edge window w used for edge mass and labels
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_width: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Largest matrix dimension the eigensolver accepts
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    /// Exit nonzero when more than this fraction of realizations fail
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_failure_fraction: Option<f64>,
}

mod atoms_serde {
    use super::Atoms;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<usize>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) if v.len() == 1 => Atoms::One(v[0]).serialize(s),
            Some(v) => Atoms::Many(v.clone()).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<usize>>, D::Error> {
        Ok(Option::<Atoms>::deserialize(d)?.map(|a| a.to_vec()))
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Flags win over file values.
    pub fn merged(mut self, flags: &RunConfig) -> Self {
        overlay!(self, flags; command, atoms, phase, sector, strengths, realizations, seed,
            distribution, bins, truncate, select, index, edge_width, out, max_dim, workers,
            max_failure_fraction);
        self
    }

    /// Fills defaults for `command` and drops keys it does not use.
    pub fn resolve(self, command: Command) -> Result<Resolved> {
        if let Some(c) = self.command {
            if c != command {
                bail!("config is for `{}`, not `{}`", c.name(), command.name());
            }
        }
        let Some(atoms) = self.atoms.clone() else {
            bail!("--atoms is required");
        };
        if atoms.is_empty() {
            bail!("--atoms is empty");
        }
        if command != Command::Scaling && atoms.len() != 1 {
            bail!("`{}` takes a single --atoms value", command.name());
        }
        let Some(out) = self.out.clone() else {
            bail!("--out is required");
        };
        let mut r = RunConfig {
            command: Some(command),
            atoms: Some(atoms),
            phase: Some(self.phase.unwrap_or(1.0)),
            out: Some(out),
            max_dim: Some(self.max_dim.unwrap_or(wqed_core::spectral::DEFAULT_MAX_DIM)),
            ..Default::default()
        };
        match command {
            Command::Spectrum => {
                r.sector = Some(self.sector.unwrap_or(Sector::Two));
                if r.sector == Some(Sector::Two) {
                    r.bins = Some(self.bins.unwrap_or(60));
                    r.edge_width = self.edge_width;
                }
                r.workers = self.workers;
            }
            Command::Wavefunction => {
                r.sector = Some(self.sector.unwrap_or(Sector::Two));
                let select = self.select.unwrap_or(if self.index.is_some() {
                    Selector::Index
                } else {
                    Selector::MostDistant
                });
                if select == Selector::MostDistant && r.sector == Some(Sector::One) {
                    bail!("--select most-distant needs --sector two");
                }
                r.select = Some(select);
                if select == Selector::Index {
                    r.index = Some(self.index.context("--select index needs --index")?);
                }
                if r.sector == Some(Sector::Two) {
                    r.edge_width = self.edge_width;
                    if select == Selector::MostDistant {
                        r.truncate = Some(self.truncate.unwrap_or(4));
                    }
                }
                r.workers = self.workers;
            }
            Command::Scaling => {}
            Command::Disorder => {
                r.strengths = Some(self.strengths.unwrap_or_else(|| vec![0.0, 1.0, 2.0, 5.0]));
                r.realizations = Some(self.realizations.unwrap_or(20));
                r.seed = Some(self.seed.unwrap_or(0));
                r.distribution = Some(self.distribution.unwrap_or(Distribution::Uniform));
                r.workers = Some(self.workers.unwrap_or(1));
                let f = self.max_failure_fraction.unwrap_or(0.1);
                if !(0.0..=1.0).contains(&f) {
                    bail!("--max-failure-fraction must lie in [0, 1]");
                }
                r.max_failure_fraction = Some(f);
            }
        }
        Ok(Resolved { command, config: r })
    }
}

/// A configuration with every field the command needs filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    pub config: RunConfig,
}

impl Resolved {
    pub fn atoms(&self) -> usize {
        self.config.atoms.as_ref().expect("resolved")[0]
    }

    pub fn atom_list(&self) -> &[usize] {
        self.config.atoms.as_deref().expect("resolved")
    }

    pub fn phase(&self) -> f64 {
        self.config.phase.expect("resolved")
    }

    pub fn out(&self) -> &Path {
        self.config.out.as_deref().expect("resolved")
    }

    pub fn max_dim(&self) -> usize {
        self.config.max_dim.expect("resolved")
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(&self.config)?)
    }
}
