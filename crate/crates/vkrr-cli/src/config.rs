//! Flat `key = value` experiment configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Keys are listed in [`ExperimentConfig`]; unknown or
//! duplicate keys are rejected. Validation aggregates every problem into a
//! single diagnostic instead of stopping at the first.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKindCfg {
    Generic,
    Boundary,
    SingleChannel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKindCfg {
    GaussianIso,
    BoundedSphere,
    RankOne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelCfg {
    Designed,
    Gaussian,
    Laplacian,
    Matern12,
    Matern32,
    Matern52,
}

/// Parsed and validated experiment configuration with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub config_id: String,
    pub i_max: usize,
    pub p: f64,
    pub eigenvalues: Option<Vec<f64>>,
    pub beta: f64,
    pub b_bound: f64,
    pub d_y: usize,
    pub target_kind: TargetKindCfg,
    pub target_seed: u64,
    pub noise_kind: NoiseKindCfg,
    pub sigma_bar: f64,
    pub kernel: KernelCfg,
    pub lengthscale: f64,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub theta: f64,
    pub c0: f64,
    pub ns: Vec<usize>,
    pub n_seeds: usize,
    /// Persist the seed-0 dataset of every sample size as CSV.
    pub persist_data: bool,
    pub tolerance: f64,
    pub master_seed: u64,
    pub output_dir: String,
    pub theory_exponent: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub n_trials: usize,
    pub kl_samples: usize,
    pub n_nodes: usize,
    pub n_test: usize,
    pub nystrom_m: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            config_id: "run".to_string(),
            i_max: 512,
            p: 0.5,
            eigenvalues: None,
            beta: 1.0,
            b_bound: 1.0,
            d_y: 4,
            target_kind: TargetKindCfg::Generic,
            target_seed: 0,
            noise_kind: NoiseKindCfg::GaussianIso,
            sigma_bar: 0.5,
            kernel: KernelCfg::Designed,
            lengthscale: 1.0,
            gamma: 0.0,
            alpha: None,
            theta: 2.0,
            c0: 1.0,
            ns: vec![64, 128, 256, 512, 1024, 2048, 4096],
            n_seeds: 20,
            persist_data: false,
            tolerance: 0.12,
            master_seed: 0,
            output_dir: "out".to_string(),
            theory_exponent: None,
            lambda_grid: vec![1.0, 0.1, 0.01, 1e-3, 1e-4],
            n_trials: 1000,
            kl_samples: 100_000,
            n_nodes: 64,
            n_test: 10_000,
            nystrom_m: 1024,
        }
    }
}

impl ExperimentConfig {
    /// The EMB exponent used by the schedule: explicit `alpha` if set,
    /// otherwise `p` (the smallest admissible value).
    pub fn effective_alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.p)
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid list element '{}'", s.trim()))
        })
        .collect()
}

/// Parses and validates a configuration document.
///
/// Returns either a full config or a diagnostic naming every offending line
/// and field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut errors: Vec<String> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut cfg = ExperimentConfig::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected 'key = value'"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(first) = seen.insert(key.to_string(), line_no) {
            errors.push(format!(
                "line {line_no}: duplicate key '{key}' (first set on line {first})"
            ));
            continue;
        }
        let mut set = |res: Result<(), String>| {
            if let Err(msg) = res {
                errors.push(format!("line {line_no}: {key}: {msg}"));
            }
        };
        match key {
            "config_id" => cfg.config_id = value.to_string(),
            "output_dir" => cfg.output_dir = value.to_string(),
            "i_max" => set(value.parse().map(|v| cfg.i_max = v).map_err(|e| format!("{e}"))),
            "p" => set(value.parse().map(|v| cfg.p = v).map_err(|e| format!("{e}"))),
            "eigenvalues" => set(parse_list(value).map(|v| cfg.eigenvalues = Some(v))),
            "beta" => set(value.parse().map(|v| cfg.beta = v).map_err(|e| format!("{e}"))),
            "b_bound" => set(value.parse().map(|v| cfg.b_bound = v).map_err(|e| format!("{e}"))),
            "d_y" => set(value.parse().map(|v| cfg.d_y = v).map_err(|e| format!("{e}"))),
            "target_seed" => {
                set(value.parse().map(|v| cfg.target_seed = v).map_err(|e| format!("{e}")))
            }
            "master_seed" => {
                set(value.parse().map(|v| cfg.master_seed = v).map_err(|e| format!("{e}")))
            }
            "sigma_bar" => {
                set(value.parse().map(|v| cfg.sigma_bar = v).map_err(|e| format!("{e}")))
            }
            "lengthscale" => {
                set(value.parse().map(|v| cfg.lengthscale = v).map_err(|e| format!("{e}")))
            }
            "gamma" => set(value.parse().map(|v| cfg.gamma = v).map_err(|e| format!("{e}"))),
            "alpha" => set(value.parse().map(|v| cfg.alpha = Some(v)).map_err(|e| format!("{e}"))),
            "theta" => set(value.parse().map(|v| cfg.theta = v).map_err(|e| format!("{e}"))),
            "c0" => set(value.parse().map(|v| cfg.c0 = v).map_err(|e| format!("{e}"))),
            "ns" => set(parse_list(value).map(|v| cfg.ns = v)),
            "n_seeds" => set(value.parse().map(|v| cfg.n_seeds = v).map_err(|e| format!("{e}"))),
            "persist_data" => {
                set(value.parse().map(|v| cfg.persist_data = v).map_err(|e| format!("{e}")))
            }
            "tolerance" => {
                set(value.parse().map(|v| cfg.tolerance = v).map_err(|e| format!("{e}")))
            }
            "theory_exponent" => set(value
                .parse()
                .map(|v| cfg.theory_exponent = Some(v))
                .map_err(|e| format!("{e}"))),
            "lambda_grid" => set(parse_list(value).map(|v| cfg.lambda_grid = v)),
            "n_trials" => {
                set(value.parse().map(|v| cfg.n_trials = v).map_err(|e| format!("{e}")))
            }
            "kl_samples" => {
                set(value.parse().map(|v| cfg.kl_samples = v).map_err(|e| format!("{e}")))
            }
            "n_nodes" => set(value.parse().map(|v| cfg.n_nodes = v).map_err(|e| format!("{e}"))),
            "n_test" => set(value.parse().map(|v| cfg.n_test = v).map_err(|e| format!("{e}"))),
            "nystrom_m" => {
                set(value.parse().map(|v| cfg.nystrom_m = v).map_err(|e| format!("{e}")))
            }
            "target_kind" => match value {
                "generic" => cfg.target_kind = TargetKindCfg::Generic,
                "boundary" => cfg.target_kind = TargetKindCfg::Boundary,
                "single-channel" => cfg.target_kind = TargetKindCfg::SingleChannel,
                other => errors.push(format!(
                    "line {line_no}: target_kind: unknown kind '{other}' \
                     (expected generic, boundary, or single-channel)"
                )),
            },
            "noise_kind" => match value {
                "gaussian-iso" => cfg.noise_kind = NoiseKindCfg::GaussianIso,
                "bounded-sphere" => cfg.noise_kind = NoiseKindCfg::BoundedSphere,
                "rank-one" => cfg.noise_kind = NoiseKindCfg::RankOne,
                other => errors.push(format!(
                    "line {line_no}: noise_kind: unknown kind '{other}' \
                     (expected gaussian-iso, bounded-sphere, or rank-one)"
                )),
            },
            "kernel" => match value {
                "designed" => cfg.kernel = KernelCfg::Designed,
                "gaussian" => cfg.kernel = KernelCfg::Gaussian,
                "laplacian" => cfg.kernel = KernelCfg::Laplacian,
                "matern12" => cfg.kernel = KernelCfg::Matern12,
                "matern32" => cfg.kernel = KernelCfg::Matern32,
                "matern52" => cfg.kernel = KernelCfg::Matern52,
                other => errors.push(format!(
                    "line {line_no}: kernel: unknown family '{other}' (expected designed, \
                     gaussian, laplacian, matern12, matern32, or matern52)"
                )),
            },
            other => errors.push(format!("line {line_no}: unknown key '{other}'")),
        }
    }

    validate(&cfg, &mut errors);

    if errors.is_empty() {
        Ok(cfg)
    } else {
        let mut out = String::from("invalid configuration:\n");
        for e in &errors {
            let _ = writeln!(out, "  - {e}");
        }
        Err(out)
    }
}

fn validate(cfg: &ExperimentConfig, errors: &mut Vec<String>) {
    if cfg.i_max == 0 {
        errors.push("i_max: must be at least 1".to_string());
    }
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        errors.push(format!("p: {} outside admissible range (0, 1]", cfg.p));
    }
    if !(cfg.beta > 0.0 && cfg.beta <= 2.0) {
        errors.push(format!("beta: {} outside admissible range (0, 2]", cfg.beta));
    }
    if !(cfg.b_bound > 0.0) {
        errors.push("b_bound: must be positive".to_string());
    }
    if cfg.d_y == 0 {
        errors.push("d_y: must be at least 1".to_string());
    }
    if !(cfg.sigma_bar >= 0.0) {
        errors.push("sigma_bar: must be nonnegative".to_string());
    }
    if !(cfg.lengthscale > 0.0) {
        errors.push("lengthscale: must be positive".to_string());
    }
    if !(cfg.gamma >= 0.0 && cfg.gamma <= 1.0) || cfg.gamma >= cfg.beta {
        errors.push(format!(
            "gamma: {} must satisfy 0 <= gamma <= 1 and gamma < beta ({})",
            cfg.gamma, cfg.beta
        ));
    }
    let alpha = cfg.effective_alpha();
    if !(alpha >= cfg.p && alpha <= 1.0) {
        errors.push(format!(
            "alpha: {alpha} outside admissible range [p = {}, 1]",
            cfg.p
        ));
    }
    if !(cfg.theta > 1.0) {
        errors.push("theta: must exceed 1".to_string());
    }
    if !(cfg.c0 > 0.0) {
        errors.push("c0: must be positive".to_string());
    }
    if cfg.ns.len() < 4 {
        errors.push("ns: needs at least 4 sample sizes".to_string());
    } else if cfg.ns.windows(2).any(|w| w[1] <= w[0]) {
        errors.push("ns: must be strictly increasing".to_string());
    }
    if cfg.n_seeds == 0 {
        errors.push("n_seeds: must be at least 1".to_string());
    }
    if !(cfg.tolerance > 0.0) {
        errors.push("tolerance: must be positive".to_string());
    }
    if cfg.lambda_grid.len() < 2 {
        errors.push("lambda_grid: needs at least 2 points".to_string());
    } else if cfg.lambda_grid.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
        errors.push("lambda_grid: points must lie in (0, 1]".to_string());
    }
    if let Some(eigs) = &cfg.eigenvalues {
        if eigs.is_empty() || eigs.iter().any(|&m| !(m > 0.0)) {
            errors.push("eigenvalues: must be a nonempty positive list".to_string());
        } else if eigs.windows(2).any(|w| w[1] > w[0]) {
            errors.push("eigenvalues: must be nonincreasing".to_string());
        }
    }
    if cfg.n_trials == 0 || cfg.kl_samples == 0 || cfg.n_nodes == 0 || cfg.n_test == 0 {
        errors.push("n_trials, kl_samples, n_nodes, n_test: must be positive".to_string());
    }
    if cfg.nystrom_m < 2 {
        errors.push("nystrom_m: must be at least 2".to_string());
    }
}

/// Canonical key = value echo of a config, used in manifests and hashing.
pub fn canonical_text(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let kind = match cfg.target_kind {
        TargetKindCfg::Generic => "generic",
        TargetKindCfg::Boundary => "boundary",
        TargetKindCfg::SingleChannel => "single-channel",
    };
    let noise = match cfg.noise_kind {
        NoiseKindCfg::GaussianIso => "gaussian-iso",
        NoiseKindCfg::BoundedSphere => "bounded-sphere",
        NoiseKindCfg::RankOne => "rank-one",
    };
    let kernel = match cfg.kernel {
        KernelCfg::Designed => "designed",
        KernelCfg::Gaussian => "gaussian",
        KernelCfg::Laplacian => "laplacian",
        KernelCfg::Matern12 => "matern12",
        KernelCfg::Matern32 => "matern32",
        KernelCfg::Matern52 => "matern52",
    };
    let _ = writeln!(s, "config_id = {}", cfg.config_id);
    let _ = writeln!(s, "i_max = {}", cfg.i_max);
    let _ = writeln!(s, "p = {}", cfg.p);
    if let Some(eigs) = &cfg.eigenvalues {
        let list: Vec<String> = eigs.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "eigenvalues = {}", list.join(","));
    }
    let _ = writeln!(s, "beta = {}", cfg.beta);
    let _ = writeln!(s, "b_bound = {}", cfg.b_bound);
    let _ = writeln!(s, "d_y = {}", cfg.d_y);
    let _ = writeln!(s, "target_kind = {kind}");
    let _ = writeln!(s, "target_seed = {}", cfg.target_seed);
    let _ = writeln!(s, "noise_kind = {noise}");
    let _ = writeln!(s, "sigma_bar = {}", cfg.sigma_bar);
    let _ = writeln!(s, "kernel = {kernel}");
    let _ = writeln!(s, "lengthscale = {}", cfg.lengthscale);
    let _ = writeln!(s, "gamma = {}", cfg.gamma);
    let _ = writeln!(s, "alpha = {}", cfg.effective_alpha());
    let _ = writeln!(s, "theta = {}", cfg.theta);
    let _ = writeln!(s, "c0 = {}", cfg.c0);
    let ns: Vec<String> = cfg.ns.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "ns = {}", ns.join(","));
    let _ = writeln!(s, "n_seeds = {}", cfg.n_seeds);
    let _ = writeln!(s, "persist_data = {}", cfg.persist_data);
    let _ = writeln!(s, "tolerance = {}", cfg.tolerance);
    let _ = writeln!(s, "master_seed = {}", cfg.master_seed);
    if let Some(t) = cfg.theory_exponent {
        let _ = writeln!(s, "theory_exponent = {t}");
    }
    let grid: Vec<String> = cfg.lambda_grid.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "lambda_grid = {}", grid.join(","));
    let _ = writeln!(s, "n_trials = {}", cfg.n_trials);
    let _ = writeln!(s, "kl_samples = {}", cfg.kl_samples);
    let _ = writeln!(s, "n_nodes = {}", cfg.n_nodes);
    let _ = writeln!(s, "n_test = {}", cfg.n_test);
    let _ = writeln!(s, "nystrom_m = {}", cfg.nystrom_m);
    s
}
