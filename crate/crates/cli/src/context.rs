use std::fs;
use std::path::{Path, PathBuf};

use dscore::scoring::{default_scenarios, ScenarioConfig};
use dscore::taxonomy::{default_taxonomy, Taxonomy};

use crate::error::{input, CliResult};
use crate::{Cli, Format};

/// Everything loaded from global flags, validated once at startup.
pub struct Context {
    pub taxonomy: Taxonomy,
    pub scenarios: ScenarioConfig,
    pub out_dir: PathBuf,
    pub cr_threshold: Option<f64>,
    pub format: Format,
    pub verbose: u8,
}

impl Context {
    pub fn new(cli: &Cli) -> CliResult<Self> {
        let taxonomy = match &cli.taxonomy {
            Some(p) => Taxonomy::load(p)?,
            None => default_taxonomy(),
        };
        let scenarios = match &cli.scenario_config {
            Some(p) => ScenarioConfig::load(p)?,
            None => default_scenarios(),
        };
        if let Some(t) = cli.cr_threshold {
            if !(t.is_finite() && t >= 0.0) {
                return Err(input(format!(
                    "--cr-threshold must be a non-negative number, got {t}"
                )));
            }
        }
        Ok(Context {
            taxonomy,
            scenarios,
            out_dir: cli.out_dir.clone(),
            cr_threshold: cli.cr_threshold,
            format: cli.format,
            verbose: cli.verbose,
        })
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write_artifact(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| input(format!("{}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| input(format!("{}: {e}", path.display())))?;
        self.info(format!("wrote {}", path.display()));
        Ok(path)
    }
}

/// File-system friendly version of a model id or scenario code.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| input(format!("{}: {e}", path.display())))
}
