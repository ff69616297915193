use super::AnalyticsError;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Rows and tiers of one bay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BayDims {
    pub rows: u32,
    pub max_tier: u32,
}

impl BayDims {
    pub fn new(rows: u32, max_tier: u32) -> Result<Self, AnalyticsError> {
        if rows == 0 || max_tier == 0 {
            return Err(AnalyticsError::EmptyDimensions);
        }
        Ok(BayDims { rows, max_tier })
    }

    pub fn capacity(&self) -> u32 {
        self.rows * self.max_tier
    }

    pub(crate) fn check(&self, k: u32) -> Result<(), AnalyticsError> {
        if self.rows == 0 || self.max_tier == 0 {
            return Err(AnalyticsError::EmptyDimensions);
        }
        if k > self.capacity() {
            return Err(AnalyticsError::CapacityExceeded {
                k,
                capacity: self.capacity(),
            });
        }
        Ok(())
    }
}

/// Stack heights of a bay, sorted non-increasing.
///
/// Ordering follows enumeration order: lexicographically larger height
/// vectors come first, so `(2,0) < (1,1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BayConfiguration {
    heights: Vec<u32>,
    max_tier: u32,
}

impl BayConfiguration {
    /// Canonicalizes any height vector. Heights above `max_tier` are rejected.
    pub fn from_heights(mut heights: Vec<u32>, max_tier: u32) -> Result<Self, AnalyticsError> {
        if heights.is_empty() || max_tier == 0 {
            return Err(AnalyticsError::EmptyDimensions);
        }
        if let Some(&h) = heights.iter().find(|&&h| h > max_tier) {
            return Err(AnalyticsError::CapacityExceeded {
                k: h,
                capacity: max_tier,
            });
        }
        heights.sort_unstable_by(|a, b| b.cmp(a));
        Ok(BayConfiguration { heights, max_tier })
    }

    pub(crate) fn canonical(mut heights: Vec<u32>, max_tier: u32) -> Self {
        heights.sort_unstable_by(|a, b| b.cmp(a));
        BayConfiguration { heights, max_tier }
    }

    pub fn empty(dims: BayDims) -> Self {
        BayConfiguration {
            heights: vec![0; dims.rows as usize],
            max_tier: dims.max_tier,
        }
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn max_tier(&self) -> u32 {
        self.max_tier
    }

    pub fn rows(&self) -> u32 {
        self.heights.len() as u32
    }

    pub fn k(&self) -> u32 {
        self.heights.iter().sum()
    }

    pub fn dims(&self) -> BayDims {
        BayDims {
            rows: self.rows(),
            max_tier: self.max_tier,
        }
    }
}

impl Ord for BayConfiguration {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .heights
            .cmp(&self.heights)
            .then(self.max_tier.cmp(&other.max_tier))
    }
}

impl PartialOrd for BayConfiguration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BayConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, h) in self.heights.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, ")")
    }
}

/// Every partition of `k` into at most `R` parts of size at most `T`, padded
/// with zeros to length `R`, in descending lexicographic order.
pub fn enumerate_configurations(k: u32, dims: BayDims) -> Result<Vec<BayConfiguration>, AnalyticsError> {
    dims.check(k)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(dims.rows as usize);
    partitions(k, dims.rows, dims.max_tier, &mut prefix, &mut |h| {
        out.push(BayConfiguration {
            heights: h.to_vec(),
            max_tier: dims.max_tier,
        })
    });
    Ok(out)
}

fn partitions(remaining: u32, slots: u32, cap: u32, prefix: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if slots == 0 {
        if remaining == 0 {
            emit(prefix);
        }
        return;
    }
    // the remaining slots can hold at most slots·cap
    if remaining > slots * cap {
        return;
    }
    let lo = remaining.div_ceil(slots);
    for h in (lo..=cap.min(remaining)).rev() {
        prefix.push(h);
        partitions(remaining - h, slots - 1, h, prefix, emit);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(r: u32, t: u32) -> BayDims {
        BayDims::new(r, t).unwrap()
    }

    fn heights(v: &[BayConfiguration]) -> Vec<Vec<u32>> {
        v.iter().map(|c| c.heights().to_vec()).collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(heights(&enumerate_configurations(0, dims(3, 2)).unwrap()), [[0, 0, 0]]);
        assert_eq!(heights(&enumerate_configurations(2, dims(2, 2)).unwrap()), [[2, 0], [1, 1]]);
        assert_eq!(heights(&enumerate_configurations(6, dims(2, 3)).unwrap()), [[3, 3]]);
        assert_eq!(
            heights(&enumerate_configurations(4, dims(3, 3)).unwrap()),
            [[3, 1, 0], [2, 2, 0], [2, 1, 1]]
        );
    }

    #[test]
    fn capacity_is_checked() {
        assert_eq!(
            enumerate_configurations(5, dims(2, 2)),
            Err(AnalyticsError::CapacityExceeded { k: 5, capacity: 4 })
        );
    }

    // brute force over all height vectors, canonicalized and deduplicated
    fn brute(k: u32, r: u32, t: u32) -> Vec<Vec<u32>> {
        let mut all = std::collections::BTreeSet::new();
        let n = (t + 1).pow(r);
        for code in 0..n {
            let mut c = code;
            let mut h: Vec<u32> = (0..r)
                .map(|_| {
                    let d = c % (t + 1);
                    c /= t + 1;
                    d
                })
                .collect();
            if h.iter().sum::<u32>() == k {
                h.sort_unstable_by(|a, b| b.cmp(a));
                all.insert(std::cmp::Reverse(h));
            }
        }
        all.into_iter().map(|r| r.0).collect()
    }

    #[test]
    fn matches_brute_force() {
        for r in 1..=4 {
            for t in 1..=4 {
                for k in 0..=r * t {
                    let got = enumerate_configurations(k, dims(r, t)).unwrap();
                    assert_eq!(heights(&got), brute(k, r, t), "k={k} R={r} T={t}");
                    assert!(got.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }
}
