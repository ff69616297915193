use super::configurations::{BayConfiguration, BayDims};
use super::models::{PlacementModel, RelocationPolicy};
use super::AnalyticsError;
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// Probability of each canonical configuration for a bay holding `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationDistribution<S> {
    pub k: u32,
    pub dims: BayDims,
    pub entries: BTreeMap<BayConfiguration, S>,
}

impl<S: Scalar> ConfigurationDistribution<S> {
    pub fn point(config: BayConfiguration) -> Self {
        ConfigurationDistribution {
            k: config.k(),
            dims: config.dims(),
            entries: BTreeMap::from([(config, S::one())]),
        }
    }

    pub fn get(&self, config: &BayConfiguration) -> S {
        self.entries.get(config).cloned().unwrap_or_else(S::zero)
    }

    pub fn total(&self) -> S {
        let mut sum = S::zero();
        for p in self.entries.values() {
            sum += p.clone();
        }
        sum
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BayConfiguration, &S)> {
        self.entries.iter()
    }
}

/// One outcome of a uniformly chosen pick.
#[derive(Debug, Clone, PartialEq)]
pub struct PickTransition<S> {
    pub from: BayConfiguration,
    pub to: BayConfiguration,
    pub probability: S,
    pub rehandles: u32,
}

fn add<S: Scalar>(map: &mut BTreeMap<BayConfiguration, S>, key: BayConfiguration, p: S) {
    match map.get_mut(&key) {
        Some(v) => *v += p,
        None => {
            map.insert(key, p);
        }
    }
}

/// Distribution after `k` arrivals into an empty bay.
///
/// Rows are physically distinct, so a step from a canonical configuration
/// sums the placement weights of every row sharing a height.
pub fn fill_distribution<S: Scalar>(
    k: u32,
    dims: BayDims,
    placement: &dyn PlacementModel,
) -> Result<ConfigurationDistribution<S>, AnalyticsError> {
    dims.check(k)?;
    let mut dist = BTreeMap::from([(BayConfiguration::empty(dims), S::one())]);
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (config, p) in dist {
            let heights = config.heights();
            let weights: Vec<u64> = heights
                .iter()
                .map(|&h| placement.stack_weight(h, heights, dims.max_tier))
                .collect();
            let total: u64 = weights.iter().sum();
            if total == 0 {
                return Err(AnalyticsError::NoPlacement {
                    config: config.to_string(),
                });
            }
            let mut by_height: BTreeMap<u32, (usize, u64)> = BTreeMap::new();
            for (i, (&h, &w)) in heights.iter().zip(&weights).enumerate() {
                let e = by_height.entry(h).or_insert((i, 0));
                e.1 += w;
            }
            for (_, (row, w)) in by_height {
                if w == 0 {
                    continue;
                }
                let mut grown = heights.to_vec();
                grown[row] += 1;
                add(
                    &mut next,
                    BayConfiguration::canonical(grown, dims.max_tier),
                    p.clone() * S::from_ratio(w, total),
                );
            }
        }
        dist = next;
    }
    Ok(ConfigurationDistribution { k, dims, entries: dist })
}

/// Outcome of digging out the container `depth` below the top of `row`.
///
/// Blockers move top-down to the policy's destination. A blocker with no
/// destination while other rows exist is set aside and restacked on the
/// source row after the pick; it still costs one rehandle.
pub(crate) fn dig(
    heights: &mut [u32],
    row: usize,
    depth: u32,
    max_tier: u32,
    policy: &dyn RelocationPolicy,
) -> Result<(), ()> {
    let mut staged = 0;
    for _ in 0..depth {
        heights[row] -= 1;
        match policy.destination(heights, row, max_tier) {
            Some(dest) => heights[dest] += 1,
            None if heights.len() > 1 => staged += 1,
            None => return Err(()),
        }
    }
    heights[row] -= 1;
    heights[row] += staged;
    Ok(())
}

/// All outcomes of picking one of the `k` containers uniformly at random.
pub fn pick_transitions<S: Scalar>(
    config: &BayConfiguration,
    relocation: &dyn RelocationPolicy,
) -> Result<Vec<PickTransition<S>>, AnalyticsError> {
    let k = config.k();
    if k == 0 {
        return Err(AnalyticsError::EmptyBay);
    }
    let mut counts: BTreeMap<(BayConfiguration, u32), u64> = BTreeMap::new();
    for (row, &h) in config.heights().iter().enumerate() {
        for depth in 0..h {
            let mut heights = config.heights().to_vec();
            dig(&mut heights, row, depth, config.max_tier(), relocation).map_err(|()| {
                AnalyticsError::RelocationImpossible {
                    config: config.to_string(),
                }
            })?;
            let to = BayConfiguration::canonical(heights, config.max_tier());
            *counts.entry((to, depth)).or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|((to, rehandles), n)| PickTransition {
            from: config.clone(),
            to,
            probability: S::from_ratio(n, u64::from(k)),
            rehandles,
        })
        .collect())
}

fn expected_cost<S: Scalar>(transitions: &[PickTransition<S>]) -> S {
    let mut sum = S::zero();
    for t in transitions {
        sum += t.probability.clone() * S::from_ratio(u64::from(t.rehandles), 1);
    }
    sum
}

/// Expected rehandles of the first pick from a bay filled with `k` containers.
pub fn expected_rehandles<S: Scalar>(
    k: u32,
    dims: BayDims,
    placement: &dyn PlacementModel,
    relocation: &dyn RelocationPolicy,
) -> Result<S, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::EmptyBay);
    }
    let fill = fill_distribution::<S>(k, dims, placement)?;
    let mut v = S::zero();
    for (config, s) in fill.iter() {
        let inner = expected_cost(&pick_transitions::<S>(config, relocation)?);
        v += s.clone() * inner;
    }
    Ok(v)
}

/// Expected total rehandles to retrieve all `k` containers one by one.
pub fn expected_rehandles_to_empty<S: Scalar>(
    k: u32,
    dims: BayDims,
    placement: &dyn PlacementModel,
    relocation: &dyn RelocationPolicy,
) -> Result<S, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::EmptyBay);
    }
    let mut dist = fill_distribution::<S>(k, dims, placement)?.entries;
    let mut total = S::zero();
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (config, s) in dist {
            let transitions = pick_transitions::<S>(&config, relocation)?;
            total += s.clone() * expected_cost(&transitions);
            for t in transitions {
                add(&mut next, t.to, s.clone() * t.probability);
            }
        }
        dist = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::{enumerate_configurations, LevellingPlacement, LowestOtherRelocation, UniformPlacement};
    use super::*;
    use crate::Rational;
    use num_traits::{One, Zero};

    fn q(n: u64, d: u64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn dims(r: u32, t: u32) -> BayDims {
        BayDims::new(r, t).unwrap()
    }

    fn cfg(h: &[u32], t: u32) -> BayConfiguration {
        BayConfiguration::from_heights(h.to_vec(), t).unwrap()
    }

    #[test]
    fn fill_two_by_two() {
        let d = fill_distribution::<Rational>(2, dims(2, 2), &UniformPlacement).unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.get(&cfg(&[1, 1], 2)), q(1, 2));
        assert_eq!(d.get(&cfg(&[2, 0], 2)), q(1, 2));
        let one = fill_distribution::<Rational>(1, dims(3, 2), &UniformPlacement).unwrap();
        assert_eq!(one.get(&cfg(&[1, 0, 0], 2)), Rational::one());
    }

    // brute force over ordered sequences of row choices with distinct rows
    fn brute_fill(k: u32, r: u32, t: u32) -> BTreeMap<BayConfiguration, Rational> {
        fn go(h: &mut Vec<u32>, left: u32, t: u32, p: Rational, out: &mut BTreeMap<BayConfiguration, Rational>) {
            if left == 0 {
                *out.entry(BayConfiguration::canonical(h.clone(), t)).or_insert_with(Rational::zero) += p;
                return;
            }
            let open: Vec<usize> = (0..h.len()).filter(|&i| h[i] < t).collect();
            for &i in &open {
                h[i] += 1;
                go(h, left - 1, t, p.clone() * q(1, open.len() as u64), out);
                h[i] -= 1;
            }
        }
        let mut out = BTreeMap::new();
        go(&mut vec![0; r as usize], k, t, Rational::one(), &mut out);
        out
    }

    #[test]
    fn fill_matches_row_level_enumeration() {
        for (r, t) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
            for k in 0..=r * t {
                let d = fill_distribution::<Rational>(k, dims(r, t), &UniformPlacement).unwrap();
                assert_eq!(d.entries, brute_fill(k, r, t), "k={k} R={r} T={t}");
            }
        }
    }

    #[test]
    fn support_within_enumeration() {
        for k in 0..=9 {
            let all = enumerate_configurations(k, dims(3, 3)).unwrap();
            let d = fill_distribution::<f64>(k, dims(3, 3), &LevellingPlacement).unwrap();
            assert!(d.entries.keys().all(|c| all.contains(c)));
        }
    }

    #[test]
    fn pick_from_level_pair() {
        let t = pick_transitions::<Rational>(&cfg(&[1, 1], 2), &LowestOtherRelocation).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].to.heights(), t[0].rehandles), (&[1, 0][..], 0));
        assert_eq!(t[0].probability, Rational::one());
    }

    #[test]
    fn pick_from_single_stack() {
        let t = pick_transitions::<Rational>(&cfg(&[2, 0], 2), &LowestOtherRelocation).unwrap();
        let got: Vec<_> = t.iter().map(|t| (t.to.heights().to_vec(), t.rehandles, t.probability.clone())).collect();
        assert_eq!(got, [(vec![1, 0], 0, q(1, 2)), (vec![1, 0], 1, q(1, 2))]);
        assert_eq!(
            pick_transitions::<Rational>(&cfg(&[3], 3), &LowestOtherRelocation),
            Err(AnalyticsError::RelocationImpossible { config: "(3)".into() })
        );
        // top of a single stack never needs a relocation
        assert!(pick_transitions::<Rational>(&cfg(&[1], 3), &LowestOtherRelocation).is_ok());
    }

    #[test]
    fn full_bay_stages_blockers() {
        // (2,2) with T=2: the other stack is full, so the blocker is set aside
        let t = pick_transitions::<Rational>(&cfg(&[2, 2], 2), &LowestOtherRelocation).unwrap();
        let got: Vec<_> = t.iter().map(|t| (t.to.heights().to_vec(), t.rehandles, t.probability.clone())).collect();
        assert_eq!(got, [(vec![2, 1], 0, q(1, 2)), (vec![2, 1], 1, q(1, 2))]);
    }

    #[test]
    fn hand_values() {
        let v2 = expected_rehandles::<Rational>(2, dims(2, 2), &UniformPlacement, &LowestOtherRelocation).unwrap();
        assert_eq!(v2, q(1, 4));
        let e2 = expected_rehandles_to_empty::<Rational>(2, dims(2, 2), &UniformPlacement, &LowestOtherRelocation).unwrap();
        assert_eq!(e2, q(1, 4));
        for (r, t) in [(1, 1), (1, 4), (2, 2), (3, 3), (4, 4)] {
            let v1 = expected_rehandles::<Rational>(1, dims(r, t), &UniformPlacement, &LowestOtherRelocation).unwrap();
            assert!(v1.is_zero());
            assert!(expected_rehandles_to_empty::<Rational>(1, dims(r, t), &UniformPlacement, &LowestOtherRelocation)
                .unwrap()
                .is_zero());
        }
    }

    #[test]
    fn flat_bays_cost_nothing() {
        for r in 1..=4 {
            for k in 1..=r {
                let v = expected_rehandles::<Rational>(k, dims(r, 1), &UniformPlacement, &LowestOtherRelocation).unwrap();
                assert!(v.is_zero());
                let e = expected_rehandles_to_empty::<Rational>(k, dims(r, 1), &UniformPlacement, &LowestOtherRelocation).unwrap();
                assert!(e.is_zero());
            }
            // levelling keeps every stack at height ≤ 1 until all rows are used
            for k in 1..=r {
                let v = expected_rehandles::<Rational>(k, dims(r, 4), &LevellingPlacement, &LowestOtherRelocation).unwrap();
                assert!(v.is_zero());
            }
        }
    }

    #[test]
    fn single_row_with_blockers_is_impossible() {
        let err = expected_rehandles::<Rational>(2, dims(1, 3), &UniformPlacement, &LowestOtherRelocation).unwrap_err();
        assert_eq!(err.code(), "RelocationImpossible");
    }

    #[test]
    fn three_by_three_k5_exact() {
        // v = E[Σ_rows h(h-1)/2] / k; frozen from the row-level enumeration
        let fill = brute_fill(5, 3, 3);
        let mut expect = Rational::zero();
        for (c, p) in &fill {
            let pairs: u64 = c.heights().iter().map(|&h| u64::from(h * h.saturating_sub(1) / 2)).sum();
            expect += p.clone() * q(pairs, 5);
        }
        let v = expected_rehandles::<Rational>(5, dims(3, 3), &UniformPlacement, &LowestOtherRelocation).unwrap();
        assert_eq!(v, expect);
        let f = expected_rehandles::<f64>(5, dims(3, 3), &UniformPlacement, &LowestOtherRelocation).unwrap();
        assert!((f - Scalar::to_f64(&v)).abs() < 1e-12);
    }

    #[test]
    fn normalization_up_to_four() {
        for r in 1..=4 {
            for t in 1..=4 {
                for k in 0..=r * t {
                    let d = fill_distribution::<Rational>(k, dims(r, t), &UniformPlacement).unwrap();
                    assert!(d.total().is_one());
                    let f = fill_distribution::<f64>(k, dims(r, t), &UniformPlacement).unwrap();
                    assert!((f.total() - 1.0).abs() <= 1e-12);
                    if r == 1 || k == 0 {
                        continue;
                    }
                    for c in enumerate_configurations(k, dims(r, t)).unwrap() {
                        let ts = pick_transitions::<Rational>(&c, &LowestOtherRelocation).unwrap();
                        let mut sum = Rational::zero();
                        for tr in &ts {
                            assert!(tr.rehandles < k);
                            assert_eq!(tr.to.k(), k - 1);
                            sum += tr.probability.clone();
                        }
                        assert!(sum.is_one(), "{c}");
                    }
                }
            }
        }
    }
}
