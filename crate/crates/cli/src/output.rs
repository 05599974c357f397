use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    command: &'a str,
    seed: u64,
    config_sha256: String,
    versions: Versions,
    checks: &'a [Check],
    artifacts: &'a [Artifact],
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "pilotwave-core")]
    core: &'static str,
    #[serde(rename = "pilotwave-cli")]
    cli: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Files written by one run. Writes are sequential and the manifest lists
/// them in write order.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(Artifact {
            file: name.to_string(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn finish(mut self, scenario: &str, command: &str, seed: u64, config: &str) -> Result<Self, CliError> {
        self.write("config.toml", config.as_bytes())?;
        let manifest = Manifest {
            scenario,
            command,
            seed,
            config_sha256: sha256_hex(config.as_bytes()),
            versions: Versions {
                core: pilotwave::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            checks: &self.checks,
            artifacts: &self.files,
        };
        let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
        json.push('\n');
        fs::write(self.dir.join("manifest.json"), json)?;
        Ok(self)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.file.as_str())
    }
}

/// Output column descriptions, for plotting scripts.
pub const COLUMNS: &str = "\
trajectory_*.csv      t, q_1..q_D, p_1..p_D, density, quantum_potential
                      trailing comment line: # termination: <completed|escaped|node_abort|step_floor>
ensemble_t<k>.csv     id, t, q_1..q_D, p_1..p_D, flag (active|escaped|node_abort|step_floor)
diagnostics.csv       t, momentum_deviation, position_ks, escape_fraction, evaluable_fraction
bound.csv             x, t, a, a_plus_bound   (a + b/x^2 on the scan grid)
field.csv             t, x, density, velocity, quantum_potential, acceleration
liouville.txt         relative volume change, singular values of the flow Jacobian
selftest.txt          one PASS/FAIL line per criterion followed by its measurements
manifest.json         config hash, versions, checks, artifact hashes
config.toml           the effective configuration (preset merged with --config)
";
