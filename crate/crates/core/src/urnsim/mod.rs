//! General Polya urn with new-urn creation (Simon's scheme).
//!
//! Each step creates a fresh urn of `k0` balls with probability `alpha`;
//! otherwise one ball goes to urn `i` with probability proportional to
//! `k_i + a_shift`. Sampling runs on a Fenwick tree of those weights.
//!
//! ## Limit law exponent
//!
//! Let `N_k(t)` count urns of size `k`. Each step adds `α k0 + (1 - α)` balls
//! and `α` urns on average, so the attachment weight grows as `c t` with
//! `c = α k0 + (1 - α) + α a`. Writing `N_k ≈ α t P(k)`, the stationary master
//! equation is
//!
//! ```text
//! α P(k) = (1 - α)/c · [(k - 1 + a) P(k - 1) - (k + a) P(k)]      (k > k0)
//! ```
//!
//! so `P(k + 1)/P(k) = (k + a)/(k + a + b)` with `b = 1 + c/(1 - α)`, which is
//! the ratio of `B(k + a, b)/B(k0 + a, b - 1)`. For `k0 = 1, a = 0` this is
//! Simon's `b = 1 + 1/(1 - α)`. The tail decays as `k^{-b}`.

mod fenwick;

pub use fenwick::Fenwick;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beta::urn_limit_pmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnConfig {
    pub k0: u64,
    pub a_shift: f64,
    pub alpha: f64,
    pub steps: u64,
    pub seed: u64,
}

impl UrnConfig {
    pub fn new(k0: u64, a_shift: f64, alpha: f64, steps: u64, seed: u64) -> Result<Self> {
        let config = UrnConfig {
            k0,
            a_shift,
            alpha,
            steps,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k0 == 0 {
            return Err(Error::InvalidArgument("k0 must be at least 1".into()));
        }
        if !self.a_shift.is_finite() || !(self.k0 as f64 + self.a_shift > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need k0 + a_shift > 0, got k0={} a_shift={}",
                self.k0, self.a_shift
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Urn sizes plus the attachment weights `k_i + a`.
#[derive(Debug, Clone)]
pub struct UrnState {
    sizes: Vec<u64>,
    weights: Fenwick,
    pub new_urn_steps: u64,
    pub attach_steps: u64,
}

impl UrnState {
    /// One urn of `k0` balls.
    pub fn new(config: &UrnConfig) -> Self {
        let mut state = UrnState {
            sizes: Vec::new(),
            weights: Fenwick::new(),
            new_urn_steps: 0,
            attach_steps: 0,
        };
        state.push_urn(config);
        state
    }

    fn push_urn(&mut self, config: &UrnConfig) {
        self.sizes.push(config.k0);
        self.weights.push(config.k0 as f64 + config.a_shift);
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn total_balls(&self) -> u64 {
        self.sizes.iter().sum()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, config: &UrnConfig, rng: &mut R) {
        if rng.random::<f64>() < config.alpha {
            self.push_urn(config);
            self.new_urn_steps += 1;
        } else {
            let u = rng.random::<f64>() * self.weights.total();
            let i = self.weights.find(u);
            self.sizes[i] += 1;
            self.weights.add(i, 1.0);
            self.attach_steps += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub urn_sizes: Vec<u64>,
    pub counts: BTreeMap<u64, u64>,
    pub empirical_pmf: BTreeMap<u64, f64>,
    pub n_urns: u64,
    pub total_balls: u64,
}

impl SimResult {
    pub fn from_sizes(urn_sizes: Vec<u64>) -> Self {
        let mut counts = BTreeMap::new();
        for &k in &urn_sizes {
            *counts.entry(k).or_insert(0u64) += 1;
        }
        let n = urn_sizes.len() as f64;
        let empirical_pmf = counts.iter().map(|(&k, &c)| (k, c as f64 / n)).collect();
        SimResult {
            n_urns: urn_sizes.len() as u64,
            total_balls: urn_sizes.iter().sum(),
            urn_sizes,
            counts,
            empirical_pmf,
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `config.steps` steps from a single urn.
pub fn run(config: &UrnConfig) -> Result<SimResult> {
    Ok(run_with_checkpoints(config, &[])?.0)
}

/// Runs the process and also snapshots the result after each step count in
/// `checkpoints` (ascending, each at most `config.steps`).
pub fn run_with_checkpoints(
    config: &UrnConfig,
    checkpoints: &[u64],
) -> Result<(SimResult, Vec<SimResult>)> {
    config.validate()?;
    if checkpoints.windows(2).any(|w| w[0] > w[1]) || checkpoints.iter().any(|&c| c > config.steps)
    {
        return Err(Error::InvalidArgument(
            "checkpoints must be ascending and within the step count".into(),
        ));
    }
    let mut rng = rng_for(config.seed);
    let mut state = UrnState::new(config);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for t in 0..=config.steps {
        while next.peek().is_some_and(|&&c| c == t) {
            snapshots.push(SimResult::from_sizes(state.sizes().to_vec()));
            next.next();
        }
        if t < config.steps {
            state.step(config, &mut rng);
        }
    }
    Ok((SimResult::from_sizes(state.sizes), snapshots))
}

/// Limit-law exponent `b` for the process (see the module docs).
pub fn predicted_b(config: &UrnConfig) -> Result<f64> {
    let alpha = config.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "predicted b needs alpha in (0, 1), got {alpha}"
        )));
    }
    let c = alpha * config.k0 as f64 + (1.0 - alpha) + alpha * config.a_shift;
    Ok(1.0 + c / (1.0 - alpha))
}

/// Half the L1 distance between two pmfs on the integers.
pub fn total_variation(p: &BTreeMap<u64, f64>, q: &BTreeMap<u64, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, pk) in p {
        sum += (pk - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, qk) in q {
        if !p.contains_key(k) {
            sum += qk.abs();
        }
    }
    0.5 * sum
}

/// Total variation between the empirical pmf and the urn limit law. Limit mass
/// beyond the largest observed size counts in full.
pub fn tv_to_limit(result: &SimResult, k0: u64, a: f64, b: f64) -> Result<f64> {
    let k_max = result
        .empirical_pmf
        .keys()
        .next_back()
        .copied()
        .unwrap_or(k0)
        .max(k0);
    let mut sum = 0.0;
    let mut covered = 0.0;
    for k in k0..=k_max {
        let q = urn_limit_pmf(k, k0, a, b)?;
        covered += q;
        sum += (result.empirical_pmf.get(&k).copied().unwrap_or(0.0) - q).abs();
    }
    // Observed sizes below k0 have zero limit mass.
    sum += result
        .empirical_pmf
        .range(..k0)
        .map(|(_, p)| p)
        .sum::<f64>();
    sum += (1.0 - covered).max(0.0);
    Ok(0.5 * sum)
}

/// Limit-law pmf tabulated on the observed sizes.
pub fn limit_pmf_table(result: &SimResult, k0: u64, a: f64, b: f64) -> Result<BTreeMap<u64, f64>> {
    result
        .counts
        .keys()
        .map(|&k| urn_limit_pmf(k, k0, a, b).map(|p| (k, p)))
        .collect()
}

/// Log-binned tail slope of the size distribution.
///
/// Sizes `k >= k_min` fall into bins `[k_min 2^j, k_min 2^{j+1})`, the last one
/// cut at the largest observed size; each bin's count over its width is the
/// density, placed at the geometric centre of the bin's integer range. The slope comes from least squares of log density on
/// log size, weighted by bin count (the inverse Poisson variance of the log).
pub fn empirical_tail_slope(result: &SimResult, k_min: u64) -> Result<f64> {
    let k_min = k_min.max(1);
    let distinct = result.counts.range(k_min..).count();
    if distinct < 10 {
        return Err(Error::InsufficientData(format!(
            "{distinct} distinct sizes at or above {k_min}; need at least 10"
        )));
    }
    let mut bins: Vec<(u64, u64, u64)> = Vec::new();
    for (&k, &c) in result.counts.range(k_min..) {
        let j = (k / k_min).ilog2();
        let lo = k_min << j;
        let hi = lo * 2 - 1;
        match bins.last_mut() {
            Some(last) if last.0 == lo => last.2 += c,
            _ => bins.push((lo, hi, c)),
        }
    }
    if let (Some(last), Some(&k_max)) = (bins.last_mut(), result.counts.keys().next_back()) {
        last.1 = last.1.min(k_max);
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientData(
            "tail spans a single logarithmic bin".into(),
        ));
    }
    let n = result.n_urns as f64;
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(lo, hi, c) in &bins {
        let w = c as f64;
        let x = ((lo as f64) * (hi as f64)).sqrt().ln();
        let y = (c as f64 / ((hi - lo + 1) as f64 * n)).ln();
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let denom = sw * sxx - sx * sx;
    if !(denom > 0.0) {
        return Err(Error::InsufficientData("degenerate tail bins".into()));
    }
    Ok((sw * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k0: u64, a: f64, alpha: f64, steps: u64, seed: u64) -> UrnConfig {
        UrnConfig::new(k0, a, alpha, steps, seed).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(UrnConfig::new(0, 0.0, 0.5, 10, 1).is_err());
        assert!(UrnConfig::new(2, -2.0, 0.5, 10, 1).is_err());
        assert!(UrnConfig::new(2, -1.5, 0.5, 10, 1).is_ok());
        assert!(UrnConfig::new(1, 0.0, 1.5, 10, 1).is_err());
    }

    #[test]
    fn zero_steps() {
        let r = run(&cfg(3, 0.0, 0.5, 0, 7)).unwrap();
        assert_eq!(r.urn_sizes, vec![3]);
        assert_eq!(r.empirical_pmf.get(&3), Some(&1.0));
    }

    #[test]
    fn alpha_one_only_creates() {
        let r = run(&cfg(2, 0.0, 1.0, 100, 7)).unwrap();
        assert_eq!(r.n_urns, 101);
        assert!(r.urn_sizes.iter().all(|&k| k == 2));
    }

    #[test]
    fn alpha_zero_single_urn_absorbs_all() {
        let r = run(&cfg(1, 0.0, 0.0, 500, 7)).unwrap();
        assert_eq!(r.urn_sizes, vec![501]);
    }

    #[test]
    fn ball_conservation_and_min_size() {
        let config = cfg(3, -1.0, 0.3, 20_000, 11);
        let mut rng = rng_for(config.seed);
        let mut state = UrnState::new(&config);
        for _ in 0..config.steps {
            state.step(&config, &mut rng);
        }
        assert_eq!(state.new_urn_steps + state.attach_steps, config.steps);
        assert_eq!(
            state.total_balls(),
            config.k0 + state.new_urn_steps * config.k0 + state.attach_steps
        );
        assert_eq!(*state.sizes().iter().min().unwrap(), config.k0);
    }

    #[test]
    fn determinism() {
        let config = cfg(1, 0.5, 0.4, 10_000, 99);
        assert_eq!(run(&config).unwrap(), run(&config).unwrap());
        let other = UrnConfig {
            seed: 100,
            ..config
        };
        assert_ne!(
            run(&config).unwrap().urn_sizes,
            run(&other).unwrap().urn_sizes
        );
    }

    #[test]
    fn predicted_b_values() {
        let b = |k0, a, alpha| predicted_b(&cfg(k0, a, alpha, 1, 0)).unwrap();
        assert!((b(1, 0.0, 0.5) - 3.0).abs() < 1e-15);
        assert!((b(1, 1.0, 0.5) - 4.0).abs() < 1e-15);
        assert!((b(1, 0.0, 1e-9) - 2.0).abs() < 1e-8);
        assert!(predicted_b(&cfg(1, 0.0, 0.0, 1, 0)).is_err());
    }

    #[test]
    fn shifted_and_larger_seed_urns_follow_limit_law() {
        for (k0, a, alpha) in [(1, 1.0, 0.5), (2, 0.0, 0.4), (3, -1.5, 0.6)] {
            let config = cfg(k0, a, alpha, 200_000, 2024);
            let r = run(&config).unwrap();
            let b = predicted_b(&config).unwrap();
            let tv = tv_to_limit(&r, k0, a, b).unwrap();
            assert!(tv < 0.02, "k0={k0} a={a} alpha={alpha}: tv={tv}");
        }
    }

    #[test]
    fn total_variation_basics() {
        let p: BTreeMap<u64, f64> = [(1, 0.5), (2, 0.5)].into_iter().collect();
        let q: BTreeMap<u64, f64> = [(2, 0.5), (3, 0.5)].into_iter().collect();
        assert!((total_variation(&p, &q) - 0.5).abs() < 1e-15);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn tail_slope_of_flat_pmf_is_zero() {
        let sizes: Vec<u64> = (1..=64).flat_map(|k| std::iter::repeat_n(k, 10)).collect();
        let r = SimResult::from_sizes(sizes);
        assert!(empirical_tail_slope(&r, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tail_slope_needs_data() {
        let r = SimResult::from_sizes(vec![1, 2, 3, 4, 5]);
        assert!(matches!(
            empirical_tail_slope(&r, 1),
            Err(Error::InsufficientData(_))
        ));
    }
}
