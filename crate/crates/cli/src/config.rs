use std::path::{Path, PathBuf};

use epsflow::{make_circle, make_ellipse, DiscreteCurve, FlowConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Sweep,
    Verify,
    Study,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
            Command::Study => "study",
        }
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCurve {
    Circle {
        #[serde(default = "unit")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Curve CSV; the node count of the file sets the resolution.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    pub initial: InitialCurve,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub epsilon_list: Vec<f64>,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Reserved; the pipeline is deterministic and never reads it.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A parsed configuration with relative paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub command: Command,
    pub config: ExperimentConfig,
    pub initial: DiscreteCurve,
    pub descriptor: String,
    pub output_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Experiment {
    pub fn load(path: &Path, command: Command, out: Option<&Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(c) = config.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.as_str(),
                    command.as_str()
                )));
            }
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let (initial, descriptor) = match &config.initial {
            InitialCurve::Circle { radius } => (
                make_circle(*radius, config.flow.n_points)?,
                format!("circle(r={radius}, N={})", config.flow.n_points),
            ),
            InitialCurve::Ellipse { a, b } => (
                make_ellipse(*a, *b, config.flow.n_points)?,
                format!("ellipse(a={a}, b={b}, N={})", config.flow.n_points),
            ),
            InitialCurve::File { path: p } => {
                let full = resolve(&base, p);
                if !full.is_file() {
                    return Err(CliError::Config(format!("initial curve file {} does not exist", full.display())));
                }
                let curve = DiscreteCurve::read_csv(&full)?;
                config.flow.n_points = curve.len();
                let descriptor = format!("file({}, N={})", p.display(), curve.len());
                (curve, descriptor)
            }
        };
        config.flow.validate()?;
        if command == Command::Sweep {
            if config.epsilon_list.is_empty() {
                return Err(CliError::Config("sweep needs a non-empty epsilon_list".into()));
            }
            if let Some(e) = config.epsilon_list.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
                return Err(CliError::Config(format!("epsilon_list entries must be non-negative, got {e}")));
            }
        }
        let output_dir = match (out, &config.output_dir) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => resolve(&base, o),
            (None, None) => base.join("epsflow-out"),
        };
        Ok(Self {
            command,
            config,
            initial,
            descriptor,
            output_dir,
        })
    }
}
