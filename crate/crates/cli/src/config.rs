//! Run configuration: TOML file keys, command-line overrides, defaults, and
//! the exactly-one-backend rule.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use masentropy::features::FeatureGroup;
use masentropy::topology::SamplingParams;
use masentropy::trace::Architecture;

use crate::commands::CliError;
use crate::RunArgs;

/// Raw configuration file; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub mock_script: Option<PathBuf>,
    pub architecture: Option<String>,
    pub rounds: Option<u32>,
    pub dataset: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub seed: Option<u64>,
    pub group: Option<String>,
    pub folds: Option<usize>,
    pub bins: Option<usize>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub max_tokens: Option<u32>,
    pub logprob_k: Option<u32>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let body = fs::read_to_string(path)
            .map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))?;
        toml::from_str(&body).map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))
    }
}

/// The model backend a run talks to.
#[derive(Debug, Clone)]
pub enum Backend {
    Mock(PathBuf),
    Endpoint { url: String, model: String },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: Backend,
    pub architecture: Architecture,
    pub rounds: u32,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
    pub params: SamplingParams,
}

/// Applies flag overrides on top of the file and validates the result.
pub fn resolve(file: ConfigFile, args: &RunArgs) -> Result<RunConfig, CliError> {
    let fail = |msg: String| Err(CliError::Fatal(msg));

    let endpoint = args.endpoint.clone().or(file.endpoint);
    let mock_script = args.mock_script.clone().or(file.mock_script);
    let backend = match (endpoint, mock_script) {
        (Some(url), None) => Backend::Endpoint {
            url,
            model: args
                .model
                .clone()
                .or(file.model)
                .unwrap_or_else(|| "default".to_string()),
        },
        (None, Some(path)) => Backend::Mock(path),
        (Some(_), Some(_)) => {
            return fail("give exactly one of --endpoint / --mock-script, not both".into())
        }
        (None, None) => return fail("give exactly one of --endpoint / --mock-script".into()),
    };

    let arch_name = args
        .arch
        .clone()
        .or(file.architecture)
        .unwrap_or_else(|| "single".to_string());
    let architecture = Architecture::parse(&arch_name).ok_or_else(|| {
        CliError::Fatal(format!(
            "unknown architecture {arch_name:?} (expected single, sequential, centralized, debate or hybrid)"
        ))
    })?;

    let rounds = args.rounds.or(file.rounds).unwrap_or(2);
    if !(1..=5).contains(&rounds) {
        return fail(format!("rounds must be in 1..=5, got {rounds}"));
    }
    let parallelism = args.parallelism.or(file.parallelism).unwrap_or(1);
    if parallelism < 1 {
        return fail("parallelism must be ≥ 1".into());
    }

    let dataset = match args.dataset.clone().or(file.dataset) {
        Some(p) => p,
        None => return fail("no dataset given (--dataset or dataset in the config)".into()),
    };
    let out_dir = args
        .out
        .clone()
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("runs"));

    let defaults = SamplingParams::default();
    let params = SamplingParams {
        temperature: file.temperature.unwrap_or(defaults.temperature),
        top_p: file.top_p.unwrap_or(defaults.top_p),
        max_tokens: file.max_tokens.unwrap_or(defaults.max_tokens),
        logprob_k: file.logprob_k.unwrap_or(defaults.logprob_k),
    };
    if params.temperature < 0.0 {
        return fail(format!(
            "temperature must be ≥ 0, got {}",
            params.temperature
        ));
    }
    if !(0.0 < params.top_p && params.top_p <= 1.0) {
        return fail(format!("top_p must be in (0, 1], got {}", params.top_p));
    }
    if params.max_tokens == 0 {
        return fail("max_tokens must be ≥ 1".into());
    }

    // `group`, `folds` and `bins` feed later pipeline stages, not `run`;
    // checking them here makes a bad config file fail at load time instead of
    // at the stage that reads the key.
    if let Some(name) = &file.group {
        if FeatureGroup::parse(name).is_none() {
            return fail(format!(
                "unknown feature group {name:?} (expected mas, base-h or base-full)"
            ));
        }
    }
    if let Some(folds) = file.folds {
        if folds < 2 {
            return fail(format!("folds must be ≥ 2, got {folds}"));
        }
    }
    if file.bins == Some(0) {
        return fail("bins must be ≥ 1".into());
    }

    Ok(RunConfig {
        backend,
        architecture,
        rounds,
        dataset,
        out_dir,
        parallelism,
        seed: args.seed.or(file.seed).unwrap_or(0),
        params,
    })
}
