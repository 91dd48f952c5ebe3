use std::path::{Path, PathBuf};

use popcd::{Algorithm, BinaryFormat, BinaryVector, GroundTruthConfig, ModesConfig, TrainConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    BarsStripes {
        #[serde(default = "default_side")]
        side: usize,
    },
    ArtificialModes(ModesConfig),
    File {
        path: PathBuf,
        #[serde(default = "default_format")]
        format: BinaryFormat,
    },
}

fn default_side() -> usize {
    4
}

fn default_format() -> BinaryFormat {
    BinaryFormat::Lines01
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Vec<BinaryVector>, CliError> {
        let batch = match self {
            DatasetSpec::BarsStripes { side } => popcd::generate_bars_and_stripes(*side)?,
            DatasetSpec::ArtificialModes(cfg) => popcd::generate_artificial_modes(cfg)?.0,
            DatasetSpec::File { path, format } => popcd::load_binary_matrix(path, *format)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        };
        Ok(batch.into_samples())
    }

    /// Short identifier used in output tables.
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::BarsStripes { .. } => "bars_stripes".into(),
            DatasetSpec::ArtificialModes(_) => "artificial_modes".into(),
            DatasetSpec::File { path, .. } => path
                .file_stem()
                .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default = "one")]
    pub trials: usize,
    /// Trial `i` runs with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub warm_start: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub experiment: Experiment,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSpec {
    pub num_hidden: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Defaults to the bench batch size.
    pub batch_size: Option<usize>,
    /// Load this model instead of training one.
    pub model: Option<PathBuf>,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            num_hidden: 16,
            iterations: 10_000,
            learning_rate: 0.1,
            batch_size: None,
            model: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSpec {
    /// Row label; defaults to the dataset name.
    pub problem: Option<String>,
    pub num_estimates: usize,
    pub batch_size: usize,
    pub estimators: Vec<Algorithm>,
    pub ks: Vec<usize>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            problem: None,
            num_estimates: 5000,
            batch_size: 32,
            estimators: vec![Algorithm::Cd, Algorithm::PopCd],
            ks: vec![1, 10],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasVarianceSpec {
    pub experiment: Experiment,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub bench: BenchSpec,
    #[serde(default)]
    pub ground_truth: GroundTruthConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    // TOML literal if it parses, bare string otherwise
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `section.key=value` overrides to a parsed config table.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("override `{item}` is not of the form key=value")))?;
        let keys: Vec<&str> = path.trim().split('.').collect();
        let (last, parents) = keys.split_last().expect("split yields one item");
        let mut node = &mut *table;
        for k in parents {
            node = node
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| CliError::Validation(format!("override `{path}`: `{k}` is not a table")))?;
        }
        node.insert(last.to_string(), parse_value(raw.trim()));
    }
    Ok(())
}

/// Reads a TOML file, applies overrides and deserializes it.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path, overrides: &[String]) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    apply_overrides(&mut table, overrides)?;
    table
        .try_into()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
