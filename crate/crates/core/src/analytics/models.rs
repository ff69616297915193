/// Chooses the stack for an arriving container.
///
/// Implementations must be height-symmetric: the weight of a stack may depend
/// on its height and on the multiset of all heights, never on its position.
pub trait PlacementModel: Sync {
    /// Unnormalized integer weight of placing on a stack of `height`.
    fn stack_weight(&self, height: u32, heights: &[u32], max_tier: u32) -> u64;
}

/// Uniform over stacks that are not full.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UniformPlacement;

impl PlacementModel for UniformPlacement {
    fn stack_weight(&self, height: u32, _heights: &[u32], max_tier: u32) -> u64 {
        u64::from(height < max_tier)
    }
}

/// Uniform over the lowest stacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevellingPlacement;

impl PlacementModel for LevellingPlacement {
    fn stack_weight(&self, height: u32, heights: &[u32], max_tier: u32) -> u64 {
        let lowest = heights.iter().copied().min().unwrap_or(0);
        u64::from(height < max_tier && height == lowest)
    }
}

/// Chooses where a blocker goes during a pick.
pub trait RelocationPolicy: Sync {
    /// Index of the destination stack for a blocker leaving `source`, or
    /// `None` when every other stack is full.
    fn destination(&self, heights: &[u32], source: usize, max_tier: u32) -> Option<usize>;
}

/// Lowest other stack that is not full; ties go to the first index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LowestOtherRelocation;

impl RelocationPolicy for LowestOtherRelocation {
    fn destination(&self, heights: &[u32], source: usize, max_tier: u32) -> Option<usize> {
        heights
            .iter()
            .enumerate()
            .filter(|&(i, &h)| i != source && h < max_tier)
            .min_by_key(|&(i, &h)| (h, i))
            .map(|(i, _)| i)
    }
}
