//! Experiment configuration: a single JSON document, overridable key by
//! key from the command line, resolved into a fully concrete config whose
//! snapshot is persisted with every run record.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use igchaos_core::manifold::GeodesicParams;

/// Partial configuration: every key optional. Later overlays win; unset
/// keys fall back to derived defaults in [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverlay {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub lambda_rate: Option<f64>,
    #[serde(rename = "Lambda")]
    pub lambda_amplitude: Option<f64>,
    pub tau_max: Option<f64>,
    pub tau_samples: Option<usize>,
    pub rel_tol: Option<f64>,
    pub delta_lambda: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub sweep_n: Option<Vec<usize>>,
    pub sweep_lambda_rate: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub emit_svg: Option<bool>,
    pub rng_seed: Option<u64>,
    pub workers: Option<usize>,
}

impl ConfigOverlay {
    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("cannot parse config {}: {e}", path.display())))
    }

    fn merge(mut self, later: ConfigOverlay) -> ConfigOverlay {
        macro_rules! take {
            ($($f:ident),*) => { $( if later.$f.is_some() { self.$f = later.$f; } )* };
        }
        take!(
            n,
            lambda_rate,
            lambda_amplitude,
            tau_max,
            tau_samples,
            rel_tol,
            delta_lambda,
            fit_window,
            sweep_n,
            sweep_lambda_rate,
            out_dir,
            emit_svg,
            rng_seed,
            workers
        );
        self
    }
}

/// A configuration validation error (CLI exit code 1).
#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved experiment configuration.
///
/// Derived defaults scale with the instability rate so a bare `N`/
/// `lambda_rate` choice exercises the asymptotic regime: `tau_max` defaults
/// to `40 / lambda_rate`, the entropy fit window to the upper half of
/// `[0, tau_max]`, the deviation-rate step to `1e-5 * lambda_rate`, and the
/// deviation fit window (see [`ExperimentConfig::lyapunov_window`]) to
/// `[tau_max/4, tau_max/2]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda_rate: f64,
    #[serde(rename = "Lambda")]
    pub lambda_amplitude: f64,
    pub tau_max: f64,
    pub tau_samples: usize,
    pub rel_tol: f64,
    pub delta_lambda: f64,
    pub fit_window: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_lambda_rate: Option<Vec<f64>>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub rng_seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Resolves overlays (earlier entries are defaults, later ones win),
    /// fills derived defaults and validates.
    pub fn resolve(overlays: Vec<ConfigOverlay>) -> Result<Self, ConfigError> {
        let merged = overlays
            .into_iter()
            .fold(ConfigOverlay::default(), ConfigOverlay::merge);

        let n = merged.n.unwrap_or(1);
        let lambda_rate = merged.lambda_rate.unwrap_or(1.0);
        let lambda_amplitude = merged.lambda_amplitude.unwrap_or(8.0_f64.sqrt());
        if lambda_rate <= 0.0 || !lambda_rate.is_finite() {
            return Err(ConfigError(format!(
                "lambda_rate must be positive, got {lambda_rate}"
            )));
        }
        let tau_max = merged.tau_max.unwrap_or(40.0 / lambda_rate);
        let config = ExperimentConfig {
            n,
            lambda_rate,
            lambda_amplitude,
            tau_max,
            tau_samples: merged.tau_samples.unwrap_or(201),
            rel_tol: merged.rel_tol.unwrap_or(1e-10),
            delta_lambda: merged.delta_lambda.unwrap_or(1e-5 * lambda_rate),
            fit_window: merged.fit_window.unwrap_or((0.5 * tau_max, tau_max)),
            sweep_n: merged.sweep_n,
            sweep_lambda_rate: merged.sweep_lambda_rate,
            out_dir: merged
                .out_dir
                .unwrap_or_else(|| PathBuf::from("igchaos-out")),
            emit_svg: merged.emit_svg.unwrap_or(false),
            rng_seed: merged.rng_seed.unwrap_or(0),
            workers: merged.workers.unwrap_or_else(default_workers).max(1),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError("N must be >= 1".into()));
        }
        for (name, v) in [
            ("lambda_rate", self.lambda_rate),
            ("Lambda", self.lambda_amplitude),
            ("tau_max", self.tau_max),
            ("delta_lambda", self.delta_lambda),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tau_samples < 2 {
            return Err(ConfigError(format!(
                "tau_samples must be >= 2, got {}",
                self.tau_samples
            )));
        }
        if !(self.rel_tol >= 1e-12 && self.rel_tol <= 1e-3) {
            return Err(ConfigError(format!(
                "rel_tol must lie in [1e-12, 1e-3], got {}",
                self.rel_tol
            )));
        }
        let (lo, hi) = self.fit_window;
        if !(lo >= 0.0 && hi <= self.tau_max && hi > lo) {
            return Err(ConfigError(format!(
                "fit_window [{lo}, {hi}] must sit inside [0, {}]",
                self.tau_max
            )));
        }
        if let Some(list) = &self.sweep_n {
            if list.is_empty() {
                return Err(ConfigError("sweep_n must not be empty".into()));
            }
            if list.contains(&0) {
                return Err(ConfigError("sweep_n entries must be >= 1".into()));
            }
        }
        if let Some(list) = &self.sweep_lambda_rate {
            if list.is_empty() {
                return Err(ConfigError("sweep_lambda_rate must not be empty".into()));
            }
            if list.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                return Err(ConfigError(
                    "sweep_lambda_rate entries must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Geodesic-family constants for this configuration.
    pub fn geodesic_params(&self) -> GeodesicParams<f64> {
        GeodesicParams::new(self.lambda_amplitude, self.lambda_rate, 0.0, self.n)
            .expect("validated config")
    }

    /// Window for the deviation-rate fit: `[tau_max/4, tau_max/2]`, the
    /// asymptotic stretch of the (shorter) deviation integration.
    pub fn lyapunov_window(&self) -> (f64, f64) {
        (0.25 * self.tau_max, 0.5 * self.tau_max)
    }

    /// End of the deviation integration: `tau_max / 2`.
    pub fn jacobi_tau_end(&self) -> f64 {
        0.5 * self.tau_max
    }

    /// Entropy series grid: `tau_samples` uniform samples of `(0, tau_max]`
    /// (zero excluded, where the swept volume vanishes).
    pub fn entropy_grid(&self) -> Vec<f64> {
        let m = self.tau_samples;
        let h = self.tau_max / m as f64;
        (1..=m)
            .map(|i| if i == m { self.tau_max } else { i as f64 * h })
            .collect()
    }

    /// Geodesic/deviation sample grid: `tau_samples` uniform samples of
    /// `[0, jacobi_tau_end]`.
    pub fn dynamics_grid(&self) -> Vec<f64> {
        igchaos_core::dynamics::uniform_grid(self.jacobi_tau_end(), self.tau_samples)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|p| p.get().min(8))
        .unwrap_or(1)
}
