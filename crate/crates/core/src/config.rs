//! Run configuration shared by the falsifier, certifier and derivation checker.

use thiserror::Error;

use crate::parallel::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Md,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Highest branch index certified (and lowest, negated, on the real line).
    pub n_max: i64,
    /// Width of the excluded slivers at both ends of every branch.
    pub epsilon: f64,
    pub grid_size: usize,
    pub max_depth: u32,
    pub min_width: f64,
    /// Relative falsification tolerance.
    pub tol_f: f64,
    pub seed: u64,
    /// Derivation samples per statement version.
    pub samples: usize,
    /// Bisection stops once the bound is within this fraction of the best point value.
    pub rel_gap: f64,
    pub abs_gap: f64,
    /// Box budget per branch.
    pub max_boxes: usize,
    /// Branch indices sampled (not certified) beyond `n_max`.
    pub tail_branches: Vec<i64>,
    pub tail_t_samples: usize,
    /// Upper end of the log-uniform search range for a single parameter, as a multiple of its lower bound.
    pub param_span: f64,
    /// Random parameter sets per branch besides the anchor.
    pub param_samples: usize,
    pub theorems: Vec<String>,
    pub format: OutputFormat,
    pub parallelism: Parallelism,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_max: 20,
            epsilon: 1e-4,
            grid_size: 512,
            max_depth: 40,
            min_width: 1e-12,
            tol_f: 1e-9,
            seed: 42,
            samples: 10_000,
            rel_gap: 5e-3,
            abs_gap: 1e-9,
            max_boxes: 1_000_000,
            tail_branches: vec![100, 1_000, 10_000, 1_000_000],
            tail_t_samples: 64,
            param_span: 64.0,
            param_samples: 16,
            theorems: Vec::new(),
            format: OutputFormat::Json,
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

/// Smallest derivation sample count accepted.
pub const MIN_SAMPLES: usize = 100;

impl RunConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError(m.to_string()));
        if self.n_max < 1 {
            return bad("n-max must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad("epsilon must lie in (0, 1/2)");
        }
        if self.grid_size < 16 {
            return bad("grid must be at least 16");
        }
        if self.max_depth == 0 {
            return bad("depth must be positive");
        }
        if !(self.min_width > 0.0) {
            return bad("min-width must be positive");
        }
        if !(self.tol_f > 0.0) {
            return bad("tol must be positive");
        }
        if self.samples < MIN_SAMPLES {
            return bad("samples must be at least 100");
        }
        if !(self.rel_gap >= 0.0 && self.abs_gap > 0.0) || self.max_boxes == 0 {
            return bad("bisection gap and budget must be positive");
        }
        if !(self.param_span > 1.0) {
            return bad("parameter span must exceed 1");
        }
        Ok(())
    }
}

/// Seed for one work unit, independent of scheduling order.
pub fn unit_seed(seed: u64, id: &str, version: &str, n: i64) -> u64 {
    // FNV-1a over the labels, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in id.bytes().chain([0]).chain(version.bytes()).chain([0]) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^= n as u64;
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn epsilon_bounds() {
        let cfg = RunConfig {
            epsilon: 0.6,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unit_seeds_differ() {
        let a = unit_seed(42, "T1", "as_printed", 1);
        assert_eq!(a, unit_seed(42, "T1", "as_printed", 1));
        assert_ne!(a, unit_seed(42, "T1", "as_printed", 2));
        assert_ne!(a, unit_seed(42, "T1", "corrected", 1));
        assert_ne!(a, unit_seed(43, "T1", "as_printed", 1));
    }
}
