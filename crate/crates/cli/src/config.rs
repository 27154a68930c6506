use crate::CliError;
use sdpp_core::generation::Variant;
use sdpp_core::knowledge::{
    BackendKind, DeterministicBackend, ExtractionBackend, PromptLibrary, RemoteBackend,
    RemoteBackendConfig, RuleTable, VectorStore, API_KEY_ENV, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP,
    DEFAULT_TOP_K,
};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DEFAULT_STEP_M: f64 = 1.0;
pub const DEFAULT_THRESHOLD_M: f64 = 5.0;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;
pub const DEFAULT_TEMPLATE: &str = "p1";

/// Optional TOML config file. Every field mirrors a command-line flag;
/// flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<String>,
    pub rules: Option<PathBuf>,
    pub manual: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub template: Option<String>,
    pub variant: Option<String>,
    pub chunk_size: Option<usize>,
    pub overlap: Option<usize>,
    pub top_k: Option<usize>,
    pub step: Option<f64>,
    pub threshold: Option<f64>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub origin: Option<String>,
    pub max_in_flight: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
            }
        }
    }
}

/// Flag values shared by `extract` and `run`.
#[derive(Debug, Default, clap::Args)]
pub struct ExtractionArgs {
    /// Extraction backend.
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Width rule table (JSON), required by the deterministic backend.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Road manual as UTF-8 plain text; feeds the retrieval store.
    #[arg(long)]
    pub manual: Option<PathBuf>,
    /// Prompt template file; defaults to the bundled templates.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Prompt template name (e.g. p1, p2).
    #[arg(long)]
    pub template: Option<String>,
    /// Extraction schedule.
    #[arg(long, value_enum)]
    pub variant: Option<VariantChoice>,
    /// Manual chunk size, characters.
    #[arg(long)]
    pub chunk_size: Option<usize>,
    /// Overlap between consecutive chunks, characters.
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Chunks retrieved per query.
    #[arg(short = 'k', long)]
    pub top_k: Option<usize>,
    /// Chat-completion endpoint base URL (remote backend).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name (remote backend).
    #[arg(long)]
    pub model: Option<String>,
    /// Max concurrent remote requests.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Remote request timeout, seconds.
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendChoice {
    Deterministic,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantChoice {
    Osg,
    Ig,
    IgContext,
}

impl From<VariantChoice> for Variant {
    fn from(v: VariantChoice) -> Self {
        match v {
            VariantChoice::Osg => Variant::Osg,
            VariantChoice::Ig => Variant::Ig,
            VariantChoice::IgContext => Variant::IgContext,
        }
    }
}

/// Fully resolved extraction settings: flags over file values over defaults.
#[derive(Debug)]
pub struct Settings {
    pub backend: BackendChoice,
    pub rules: Option<PathBuf>,
    pub manual: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub template: String,
    pub variant: Variant,
    pub chunk_size: usize,
    pub overlap: usize,
    pub top_k: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Settings {
    pub fn resolve(args: &ExtractionArgs, file: &FileConfig) -> Result<Self, CliError> {
        let backend = match (&args.backend, file.backend.as_deref()) {
            (Some(b), _) => *b,
            (None, Some("deterministic")) => BackendChoice::Deterministic,
            (None, Some("remote")) => BackendChoice::Remote,
            (None, Some(other)) => {
                return Err(CliError::Config(format!("unknown backend \"{other}\" in config")))
            }
            (None, None) => BackendChoice::Deterministic,
        };
        let variant = match (&args.variant, file.variant.as_deref()) {
            (Some(v), _) => (*v).into(),
            (None, Some("osg")) => Variant::Osg,
            (None, Some("ig")) => Variant::Ig,
            (None, Some("ig-context")) => Variant::IgContext,
            (None, Some(other)) => {
                return Err(CliError::Config(format!("unknown variant \"{other}\" in config")))
            }
            (None, None) => Variant::Osg,
        };
        let settings = Settings {
            backend,
            rules: args.rules.clone().or_else(|| file.rules.clone()),
            manual: args.manual.clone().or_else(|| file.manual.clone()),
            prompts: args.prompts.clone().or_else(|| file.prompts.clone()),
            template: args
                .template
                .clone()
                .or_else(|| file.template.clone())
                .unwrap_or_else(|| DEFAULT_TEMPLATE.to_string()),
            variant,
            chunk_size: args.chunk_size.or(file.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE),
            overlap: args.overlap.or(file.overlap).unwrap_or(DEFAULT_OVERLAP),
            top_k: args.top_k.or(file.top_k).unwrap_or(DEFAULT_TOP_K),
            endpoint: args.endpoint.clone().or_else(|| file.endpoint.clone()),
            model: args.model.clone().or_else(|| file.model.clone()),
            max_in_flight: args
                .max_in_flight
                .or(file.max_in_flight)
                .unwrap_or(DEFAULT_MAX_IN_FLIGHT),
            timeout_secs: args
                .timeout_secs
                .or(file.timeout_secs)
                .unwrap_or(DEFAULT_TIMEOUT_SECS),
        };
        if settings.overlap >= settings.chunk_size {
            return Err(CliError::Config(format!(
                "overlap {} must be smaller than chunk size {}",
                settings.overlap, settings.chunk_size
            )));
        }
        if settings.top_k == 0 {
            return Err(CliError::Config("top-k must be at least 1".to_string()));
        }
        Ok(settings)
    }

    /// Builds the backend and (when a manual is configured) the vector
    /// store.
    pub fn build_backend(&self) -> Result<(Box<dyn ExtractionBackend>, Option<VectorStore>), CliError> {
        let store = match &self.manual {
            None => None,
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read manual {}: {e}", path.display()))
                })?;
                let chunks = sdpp_core::knowledge::chunk_document(
                    &text,
                    self.chunk_size,
                    self.overlap,
                )
                .map_err(|e| CliError::Config(e.to_string()))?;
                Some(VectorStore::build(chunks))
            }
        };

        let backend: Box<dyn ExtractionBackend> = match self.backend {
            BackendChoice::Deterministic => {
                let rules = self.rules.as_ref().ok_or_else(|| {
                    CliError::Config(
                        "the deterministic backend requires --rules <table.json>".to_string(),
                    )
                })?;
                let table = RuleTable::load(rules).map_err(|e| {
                    CliError::Config(format!("cannot load rules {}: {e}", rules.display()))
                })?;
                Box::new(DeterministicBackend::new(table))
            }
            BackendChoice::Remote => {
                if self.manual.is_none() {
                    return Err(CliError::Config(
                        "the remote backend requires --manual <text file>".to_string(),
                    ));
                }
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    CliError::Config("the remote backend requires --endpoint <base url>".to_string())
                })?;
                let model = self.model.clone().ok_or_else(|| {
                    CliError::Config("the remote backend requires --model <name>".to_string())
                })?;
                let library = match &self.prompts {
                    Some(path) => PromptLibrary::load(path).map_err(|e| {
                        CliError::Config(format!("cannot load prompts {}: {e}", path.display()))
                    })?,
                    None => PromptLibrary::builtin(),
                };
                let template = library
                    .get(&self.template)
                    .map_err(|e| CliError::Config(e.to_string()))?
                    .clone();
                Box::new(
                    RemoteBackend::new(RemoteBackendConfig {
                        base_url: endpoint,
                        model,
                        api_key: std::env::var(API_KEY_ENV).ok(),
                        template,
                        max_in_flight: self.max_in_flight,
                        timeout_secs: self.timeout_secs,
                    })
                    .map_err(|e| CliError::Config(e.to_string()))?,
                )
            }
        };
        Ok((backend, store))
    }

    pub fn backend_kind(&self) -> BackendKind {
        match self.backend {
            BackendChoice::Deterministic => BackendKind::Deterministic,
            BackendChoice::Remote => BackendKind::Remote,
        }
    }

    /// Template name recorded in artifacts; only meaningful for the remote
    /// backend, which actually renders prompts.
    pub fn template_metadata(&self) -> Option<String> {
        match self.backend {
            BackendChoice::Deterministic => None,
            BackendChoice::Remote => Some(self.template.clone()),
        }
    }
}

/// Parses an explicit `lat,lon` frame origin.
pub fn parse_origin(origin: &str) -> Result<(f64, f64), CliError> {
    let invalid = || CliError::Config(format!("invalid origin \"{origin}\" (expected \"lat,lon\")"));
    let (lat, lon) = origin.split_once(',').ok_or_else(invalid)?;
    let lat: f64 = lat.trim().parse().map_err(|_| invalid())?;
    let lon: f64 = lon.trim().parse().map_err(|_| invalid())?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(invalid());
    }
    Ok((lat, lon))
}
