use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use fieldcal::data::EngineConfig;
use fieldcal::simulate::SurrogateConfig;

#[derive(Parser, Debug)]
#[command(
    name = "fieldcal",
    version,
    about = "Synthetic field-testing pipeline for multiple-choice items"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Engine settings; flags override values from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct EngineArgs {
    /// JSON file mirroring the engine configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_examinees: Option<usize>,
    #[arg(long)]
    pub scaling_d: Option<f64>,
    /// Variance of the N(0, v) prior used for MAP scoring
    #[arg(long)]
    pub prior_var: Option<f64>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    #[arg(long)]
    pub quad_range: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl EngineArgs {
    pub fn resolve(&self) -> fieldcal::Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(path) => EngineConfig::from_json_file(path)?,
            None => EngineConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n_examinees {
            cfg.n_examinees = v;
        }
        if let Some(v) = self.scaling_d {
            cfg.scaling_d = v;
        }
        if let Some(v) = self.prior_var {
            cfg.prior_variance = v;
        }
        if let Some(v) = self.quad_points {
            cfg.quad_points = v;
        }
        if let Some(v) = self.quad_range {
            cfg.quad_range = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_em_iter = v;
        }
        if let Some(v) = self.tol {
            cfg.em_tol = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct SurrogateArgs {
    /// Ability at zero retained vocabulary
    #[arg(long, default_value_t = SurrogateConfig::default().alpha, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Ability gained per unit of retained vocabulary
    #[arg(long, default_value_t = SurrogateConfig::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = SurrogateConfig::default().sigma_eps)]
    pub sigma_eps: f64,
    /// Lower clamp on the correct-option probability (0 disables)
    #[arg(long, default_value_t = SurrogateConfig::default().guess_floor)]
    pub guess_floor: f64,
}

impl SurrogateArgs {
    pub fn resolve(&self) -> fieldcal::Result<SurrogateConfig> {
        let cfg = SurrogateConfig {
            alpha: self.alpha,
            beta: self.beta,
            sigma_eps: self.sigma_eps,
            guess_floor: self.guess_floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct CalibrationFiles {
    #[arg(long)]
    pub ref_params: PathBuf,
    #[arg(long)]
    pub est_params: PathBuf,
    #[arg(long)]
    pub ref_ctt: PathBuf,
    #[arg(long)]
    pub est_ctt: PathBuf,
    #[arg(long)]
    pub ref_thetas: PathBuf,
    #[arg(long)]
    pub est_thetas: PathBuf,
    /// Item ids left out of the comparison rows (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic bank whose 2PL parameters mirror the human reference distribution
    MakeBank {
        #[arg(long, default_value_t = 29)]
        n_items: usize,
        #[arg(long)]
        out_bank: PathBuf,
        #[arg(long)]
        out_params: PathBuf,
    },
    /// Draw a reference population (theta ~ N(0,1)) and its 2PL responses
    GenReference {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generating abilities
        #[arg(long)]
        out_thetas: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Generate surrogate examinees and their option probabilities
    Simulate {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        ref_params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_retention: PathBuf,
        #[arg(long)]
        out_profiles: Option<PathBuf>,
        #[command(flatten)]
        surrogate: SurrogateArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Draw one response per cell from an option-probability file
    Sample {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Calibrate 2PL parameters, anchored one item at a time when --anchors is given
    Fit {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        anchors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_group: PathBuf,
        /// Per-item anchored fit details (anchored mode only)
        #[arg(long)]
        out_diagnostics: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// MAP ability estimates
    Score {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Classical test statistics
    Ctt {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        corrected_item_total: bool,
    },
    /// Compare a reference calibration with an estimated one
    Compare {
        #[command(flatten)]
        files: CalibrationFiles,
        #[arg(long)]
        out: PathBuf,
    },
    /// Comparison report plus plot-data tables
    Report {
        #[command(flatten)]
        files: CalibrationFiles,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        retention: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Run every stage end to end into one directory
    Pipeline {
        #[arg(long)]
        out_dir: PathBuf,
        /// Existing bank; a synthetic one is generated when omitted
        #[arg(long, requires = "ref_params")]
        bank: Option<PathBuf>,
        #[arg(long, requires = "bank")]
        ref_params: Option<PathBuf>,
        #[arg(long, default_value_t = 29)]
        n_items: usize,
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        corrected_item_total: bool,
        #[command(flatten)]
        surrogate: SurrogateArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
}
