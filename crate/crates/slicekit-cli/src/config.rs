//! Run configuration: a TOML file of defaults that command-line flags
//! override, so an experiment is reproducible from one checked-in file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use slicekit::SliceError;

/// Which attribute subset of the census schema an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Age, Workclass, Education, Marital-Status, Race, Sex and a sensitive
    /// Occupation.
    Occ7,
    /// All fifteen attributes with a sensitive Occupation.
    Occ15,
    /// Whatever the schema file declares.
    Custom,
}

impl Preset {
    /// Attribute names to keep, or None to keep the schema as-is.
    pub fn projection(self) -> Option<&'static [&'static str]> {
        match self {
            Preset::Occ7 => Some(&[
                "Age",
                "Workclass",
                "Education",
                "Marital-Status",
                "Race",
                "Sex",
                "Occupation",
            ]),
            Preset::Occ15 | Preset::Custom => None,
        }
    }
}

/// Anonymization technique; `original` is only meaningful for utility runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Technique {
    Original,
    Generalize,
    Bucketize,
    Slice,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::Original => "original",
            Technique::Generalize => "generalize",
            Technique::Bucketize => "bucketize",
            Technique::Slice => "slice",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CellVariant {
    /// Intervals for continuous cells, value sets for categorical ones.
    Interval,
    /// Exact value multisets.
    Multiset,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnonymizeConfig {
    pub technique: Option<Technique>,
    pub l: Option<f64>,
    pub columns: Option<usize>,
    pub alpha: Option<usize>,
    pub variant: Option<CellVariant>,
    /// Minimum rows per generalized column region; 1 disables column
    /// generalization.
    pub min_column_rows: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub target: Option<String>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipConfig {
    pub bucket_size: Option<Vec<usize>>,
    pub columns: Option<usize>,
    pub alpha: Option<usize>,
    pub cap: Option<u128>,
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub anonymize: AnonymizeConfig,
    #[serde(default)]
    pub utility: UtilityConfig,
    #[serde(default)]
    pub membership: MembershipConfig,
}

impl RunConfig {
    /// Load a config file; any problem is a configuration error so the
    /// process exits with the config status code.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| SliceError::Config(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| SliceError::Config(format!("config {}: {e}", path.display())).into())
    }
}
