use super::configurations::BayDims;
use super::models::{PlacementModel, RelocationPolicy};
use super::AnalyticsError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Trials are split over this many independent streams of the seed.
pub const ORACLE_SHARDS: u64 = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    /// Trials that completed; excludes `relocation_impossible`.
    pub trials: u64,
    pub relocation_impossible: u64,
}

#[derive(Default)]
struct Tally {
    n: u64,
    sum: u64,
    sum_sq: u64,
    impossible: u64,
}

/// Simulates fill-then-pick episodes on physical rows and averages the
/// rehandles of the pick.
pub fn monte_carlo_oracle(
    k: u32,
    dims: BayDims,
    placement: &dyn PlacementModel,
    relocation: &dyn RelocationPolicy,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, AnalyticsError> {
    let identity: Vec<usize> = (0..dims.rows as usize).collect();
    monte_carlo_oracle_relabelled(k, dims, placement, relocation, trials, seed, &identity)
}

/// As [`monte_carlo_oracle`], with physical row `i` stored at `labels[i]`.
///
/// Placement and relocation see the relabelled bay; the random draws are the
/// same, so a height-symmetric model yields statistically identical results.
pub fn monte_carlo_oracle_relabelled(
    k: u32,
    dims: BayDims,
    placement: &dyn PlacementModel,
    relocation: &dyn RelocationPolicy,
    trials: u64,
    seed: u64,
    labels: &[usize],
) -> Result<MonteCarloEstimate, AnalyticsError> {
    dims.check(k)?;
    if trials == 0 {
        return Err(AnalyticsError::NoTrials);
    }
    let rows = dims.rows as usize;
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    assert!(sorted == (0..rows).collect::<Vec<_>>(), "labels must permute the rows");

    let tallies: Vec<Result<Tally, AnalyticsError>> = (0..ORACLE_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let n = trials / ORACLE_SHARDS + u64::from(shard < trials % ORACLE_SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut tally = Tally::default();
            let mut heights = vec![0u32; rows];
            let mut weights = vec![0u64; rows];
            for _ in 0..n {
                heights.iter_mut().for_each(|h| *h = 0);
                for _ in 0..k {
                    for i in 0..rows {
                        weights[i] = placement.stack_weight(heights[labels[i]], &heights, dims.max_tier);
                    }
                    let total: u64 = weights.iter().sum();
                    if total == 0 {
                        return Err(AnalyticsError::NoPlacement {
                            config: format!("{heights:?}"),
                        });
                    }
                    let mut r = rng.gen_range(0..total);
                    let mut row = 0;
                    while r >= weights[row] {
                        r -= weights[row];
                        row += 1;
                    }
                    heights[labels[row]] += 1;
                }
                if k == 0 {
                    tally.n += 1;
                    continue;
                }
                // container index counted row by row, bottom up
                let mut c = rng.gen_range(0..k);
                let mut row = 0;
                while c >= heights[labels[row]] {
                    c -= heights[labels[row]];
                    row += 1;
                }
                let source = labels[row];
                let depth = heights[source] - 1 - c;
                match pick(&mut heights, source, depth, dims.max_tier, relocation) {
                    Some(()) => {
                        tally.n += 1;
                        tally.sum += u64::from(depth);
                        tally.sum_sq += u64::from(depth * depth);
                    }
                    None => tally.impossible += 1,
                }
            }
            Ok(tally)
        })
        .collect();

    let mut total = Tally::default();
    for t in tallies {
        let t = t?;
        total.n += t.n;
        total.sum += t.sum;
        total.sum_sq += t.sum_sq;
        total.impossible += t.impossible;
    }
    let (mean, standard_error) = if total.n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let n = total.n as f64;
        let mean = total.sum as f64 / n;
        let var = if total.n > 1 {
            ((total.sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    Ok(MonteCarloEstimate {
        mean,
        standard_error,
        trials: total.n,
        relocation_impossible: total.impossible,
    })
}

// Removes the container `depth` below the top of `source`. Blockers with no
// destination are held aside and put back once the pick is done.
fn pick(heights: &mut [u32], source: usize, depth: u32, max_tier: u32, policy: &dyn RelocationPolicy) -> Option<()> {
    let mut held = 0;
    for _ in 0..depth {
        heights[source] -= 1;
        if let Some(dest) = policy.destination(heights, source, max_tier) {
            heights[dest] += 1;
        } else if heights.len() > 1 {
            held += 1;
        } else {
            return None;
        }
    }
    heights[source] = heights[source] - 1 + held;
    Some(())
}

#[cfg(test)]
mod tests {
    use super::super::{LowestOtherRelocation, UniformPlacement};
    use super::*;

    fn dims(r: u32, t: u32) -> BayDims {
        BayDims::new(r, t).unwrap()
    }

    #[test]
    fn single_container_never_blocked() {
        let est = monte_carlo_oracle(1, dims(3, 3), &UniformPlacement, &LowestOtherRelocation, 1000, 7).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.trials, 1000);
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = monte_carlo_oracle(5, dims(3, 3), &UniformPlacement, &LowestOtherRelocation, 10_000, 42).unwrap();
        let b = monte_carlo_oracle(5, dims(3, 3), &UniformPlacement, &LowestOtherRelocation, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_oracle(5, dims(3, 3), &UniformPlacement, &LowestOtherRelocation, 10_000, 43).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn two_by_two_hand_value() {
        let est = monte_carlo_oracle(2, dims(2, 2), &UniformPlacement, &LowestOtherRelocation, 200_000, 2024).unwrap();
        assert!((est.mean - 0.25).abs() <= 3.0 * est.standard_error, "{est:?}");
    }

    #[test]
    fn single_row_counts_failures() {
        let est = monte_carlo_oracle(3, dims(1, 3), &UniformPlacement, &LowestOtherRelocation, 3000, 1).unwrap();
        // only a pick of the top container succeeds
        assert!(est.relocation_impossible > 1500);
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn rejects_zero_trials() {
        assert_eq!(
            monte_carlo_oracle(1, dims(2, 2), &UniformPlacement, &LowestOtherRelocation, 0, 1),
            Err(AnalyticsError::NoTrials)
        );
    }
}
