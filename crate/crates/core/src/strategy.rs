//! Placement and relocation policies.
//!
//! A strategy sees the current yard, the container to place and a seeded
//! random stream, and returns a feasible slot: the lowest free tier of a
//! non-full stack. Candidates are always enumerated in `(block_id, bay, row)`
//! order, which also serves as the final tie-break.

use crate::time::Timestamp;
use crate::yard::{ContainerRecord, CraneMetric, SlotAddress, StackId, YardState};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("no feasible slot for container {0}")]
    NoFeasibleSlot(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
}

impl StrategyError {
    pub fn code(&self) -> &'static str {
        match self {
            StrategyError::NoFeasibleSlot(_) => "NoFeasibleSlot",
            StrategyError::InvalidStrategy(_) => "InvalidStrategy",
        }
    }
}

/// What the caller knows beyond the yard itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlacementContext<'a> {
    /// Block the container was logged into; kept when it has room.
    pub preferred_block: Option<&'a str>,
    /// Last known position of the crane doing the move.
    pub crane_position: Option<&'a SlotAddress>,
}

pub trait StackingStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn choose_placement(
        &self,
        yard: &YardState,
        container: &ContainerRecord,
        ctx: &PlacementContext<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError>;

    /// Target for a blocker being dug out of `forbidden`.
    fn choose_relocation(
        &self,
        yard: &YardState,
        blocker: &ContainerRecord,
        forbidden: &StackId,
        ctx: &PlacementContext<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError>;

    /// Identity strategy: the engine copies logged moves instead of asking.
    fn replays_log(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelocationScope {
    /// Same block as the blocker.
    #[default]
    Block,
    Yard,
}

/// A feasible slot plus the context strategies rank on.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub slot: SlotAddress,
    pub stack: StackId,
}

/// Lowest free tier of every non-full stack, in `(block_id, bay, row)` order.
pub fn feasible_slots(yard: &YardState, mut keep: impl FnMut(&StackId) -> bool) -> Vec<Candidate> {
    yard.layout()
        .stacks()
        .filter(|(stack, _)| keep(stack))
        .filter_map(|(stack, block)| {
            let h = yard.stack_height(&stack);
            (h < block.max_tier).then(|| Candidate {
                slot: stack.slot(h + 1),
                stack,
            })
        })
        .collect()
}

fn placement_candidates(yard: &YardState, ctx: &PlacementContext<'_>) -> Vec<Candidate> {
    if let Some(block) = ctx.preferred_block {
        let own = feasible_slots(yard, |s| s.block_id == block);
        if !own.is_empty() {
            return own;
        }
    }
    feasible_slots(yard, |_| true)
}

fn relocation_candidates(
    yard: &YardState,
    blocker: &ContainerRecord,
    forbidden: &StackId,
    scope: RelocationScope,
) -> Vec<Candidate> {
    let block = blocker
        .current_slot
        .as_ref()
        .map(|s| s.block_id.clone())
        .unwrap_or_else(|| forbidden.block_id.clone());
    feasible_slots(yard, |s| {
        s != forbidden && (scope == RelocationScope::Yard || s.block_id == block)
    })
}

fn pick_first(cands: Vec<Candidate>, id: &str) -> Result<SlotAddress, StrategyError> {
    cands
        .into_iter()
        .next()
        .map(|c| c.slot)
        .ok_or_else(|| StrategyError::NoFeasibleSlot(id.to_owned()))
}

/// Uniform over feasible slots.
#[derive(Debug, Clone, Default)]
pub struct RandomFeasible {
    pub relocation_scope: RelocationScope,
}

impl RandomFeasible {
    fn pick(cands: Vec<Candidate>, id: &str, rng: &mut dyn RngCore) -> Result<SlotAddress, StrategyError> {
        if cands.is_empty() {
            return Err(StrategyError::NoFeasibleSlot(id.to_owned()));
        }
        let i = rng.gen_range(0..cands.len());
        Ok(cands.into_iter().nth(i).expect("index in range").slot)
    }
}

impl StackingStrategy for RandomFeasible {
    fn name(&self) -> &'static str {
        "random_feasible"
    }

    fn choose_placement(
        &self,
        yard: &YardState,
        container: &ContainerRecord,
        ctx: &PlacementContext<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        Self::pick(placement_candidates(yard, ctx), &container.container_id, rng)
    }

    fn choose_relocation(
        &self,
        yard: &YardState,
        blocker: &ContainerRecord,
        forbidden: &StackId,
        _ctx: &PlacementContext<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        let cands = relocation_candidates(yard, blocker, forbidden, self.relocation_scope);
        Self::pick(cands, &blocker.container_id, rng)
    }
}

/// Levelling: the lowest free tier anywhere.
#[derive(Debug, Clone, Default)]
pub struct LowestTier {
    pub relocation_scope: RelocationScope,
}

impl LowestTier {
    fn pick(mut cands: Vec<Candidate>, id: &str) -> Result<SlotAddress, StrategyError> {
        // stable sort keeps (block, bay, row) order among equal tiers
        cands.sort_by_key(|c| c.slot.tier);
        pick_first(cands, id)
    }
}

impl StackingStrategy for LowestTier {
    fn name(&self) -> &'static str {
        "lowest_tier"
    }

    fn choose_placement(
        &self,
        yard: &YardState,
        container: &ContainerRecord,
        ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        Self::pick(placement_candidates(yard, ctx), &container.container_id)
    }

    fn choose_relocation(
        &self,
        yard: &YardState,
        blocker: &ContainerRecord,
        forbidden: &StackId,
        _ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        let cands = relocation_candidates(yard, blocker, forbidden, self.relocation_scope);
        Self::pick(cands, &blocker.container_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegregationKey {
    DestinationPort,
    /// Booked departure time bucketed into windows of this many hours.
    DepartureWindow { hours: f64 },
}

impl SegregationKey {
    /// `None` groups together every container lacking the attribute.
    pub fn group_of(&self, rec: &ContainerRecord) -> Option<String> {
        match self {
            SegregationKey::DestinationPort => rec.destination_port.clone(),
            SegregationKey::DepartureWindow { hours } => rec
                .planned_departure
                .filter(|_| rec.departure_booked)
                .map(|t: Timestamp| {
                    let width = (hours * 3600.0).round().max(1.0) as i64;
                    t.timestamp().div_euclid(width).to_string()
                }),
        }
    }
}

/// Keeps each group in its own stacks and bays. Within the group's bays (or
/// empty ones) it levels, lowest tier first; foreign and mixed bays take
/// only the overflow.
#[derive(Debug, Clone)]
pub struct CategorySegregation {
    pub key: SegregationKey,
    pub relocation_scope: RelocationScope,
}

#[derive(Default)]
struct BayTally {
    total: usize,
    same: usize,
}

impl CategorySegregation {
    fn pick(
        &self,
        yard: &YardState,
        rec: &ContainerRecord,
        cands: Vec<Candidate>,
    ) -> Result<SlotAddress, StrategyError> {
        let group = self.key.group_of(rec);
        let mut bays: HashMap<(String, u32), BayTally> = HashMap::new();
        for c in yard.containers() {
            let Some(slot) = &c.current_slot else { continue };
            if c.container_id == rec.container_id {
                continue;
            }
            let t = bays.entry((slot.block_id.clone(), slot.bay)).or_default();
            t.total += 1;
            if self.key.group_of(c) == group {
                t.same += 1;
            }
        }
        let stack_pure = |stack: &StackId| {
            yard.stack(stack)
                .iter()
                .filter(|id| **id != rec.container_id)
                .all(|id| yard.container(id).map(|c| self.key.group_of(c)) == Some(group.clone()))
        };
        // smaller is better, candidate order breaks ties
        let key = |c: &Candidate| -> (bool, bool, u32, u8, usize) {
            let tally = bays.get(&(c.stack.block_id.clone(), c.stack.bay));
            let (total, same) = tally.map_or((0, 0), |t| (t.total, t.same));
            let bay_class = match (same, total) {
                (s, t) if s > 0 && s == t => 0,
                (_, 0) => 1,
                (s, _) if s > 0 => 2,
                _ => 3,
            };
            (!stack_pure(&c.stack), bay_class >= 2, c.slot.tier, bay_class, total)
        };
        cands
            .iter()
            .enumerate()
            .min_by_key(|(i, c)| (key(c), *i))
            .map(|(_, c)| c.slot.clone())
            .ok_or_else(|| StrategyError::NoFeasibleSlot(rec.container_id.clone()))
    }
}

impl StackingStrategy for CategorySegregation {
    fn name(&self) -> &'static str {
        "category_segregation"
    }

    fn choose_placement(
        &self,
        yard: &YardState,
        container: &ContainerRecord,
        ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        self.pick(yard, container, placement_candidates(yard, ctx))
    }

    fn choose_relocation(
        &self,
        yard: &YardState,
        blocker: &ContainerRecord,
        forbidden: &StackId,
        _ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        let cands = relocation_candidates(yard, blocker, forbidden, self.relocation_scope);
        self.pick(yard, blocker, cands)
    }
}

/// Minimises crane travel from its last known position. Slots in the crane's
/// block rank before any other block.
#[derive(Debug, Clone, Default)]
pub struct NearestSlot {
    pub metric: CraneMetric,
    pub relocation_scope: RelocationScope,
}

impl NearestSlot {
    fn pick(
        &self,
        yard: &YardState,
        id: &str,
        crane: Option<&SlotAddress>,
        cands: Vec<Candidate>,
    ) -> Result<SlotAddress, StrategyError> {
        let rank = |c: &Candidate| -> (bool, f64) {
            match crane {
                None => (false, 0.0),
                Some(at) => (
                    at.block_id != c.slot.block_id,
                    yard.layout()
                        .crane_distance(at, &c.slot, self.metric, 0.0)
                        .unwrap_or(f64::INFINITY),
                ),
            }
        };
        cands
            .iter()
            .map(|c| (rank(c), c))
            .min_by(|(a, _), (b, _)| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
            .map(|(_, c)| c.slot.clone())
            .ok_or_else(|| StrategyError::NoFeasibleSlot(id.to_owned()))
    }
}

impl StackingStrategy for NearestSlot {
    fn name(&self) -> &'static str {
        "nearest_slot"
    }

    fn choose_placement(
        &self,
        yard: &YardState,
        container: &ContainerRecord,
        ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        let cands = placement_candidates(yard, ctx);
        self.pick(yard, &container.container_id, ctx.crane_position, cands)
    }

    fn choose_relocation(
        &self,
        yard: &YardState,
        blocker: &ContainerRecord,
        forbidden: &StackId,
        ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        let cands = relocation_candidates(yard, blocker, forbidden, self.relocation_scope);
        let crane = ctx.crane_position.or(blocker.current_slot.as_ref());
        self.pick(yard, &blocker.container_id, crane, cands)
    }
}

/// Replays the logged slots and shifts unchanged. Useful as the baseline of a
/// comparison: its deltas against the real log are all zero.
#[derive(Debug, Clone, Default)]
pub struct Logged;

impl StackingStrategy for Logged {
    fn name(&self) -> &'static str {
        "logged"
    }

    fn choose_placement(
        &self,
        _yard: &YardState,
        container: &ContainerRecord,
        _ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        Err(StrategyError::NoFeasibleSlot(container.container_id.clone()))
    }

    fn choose_relocation(
        &self,
        _yard: &YardState,
        blocker: &ContainerRecord,
        _forbidden: &StackId,
        _ctx: &PlacementContext<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<SlotAddress, StrategyError> {
        Err(StrategyError::NoFeasibleSlot(blocker.container_id.clone()))
    }

    fn replays_log(&self) -> bool {
        true
    }
}

/// Strategy selection as carried by the CLI, the API and the console form:
/// `{"name":"category_segregation","params":{"key":"destination_port"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

pub const STRATEGY_NAMES: [&str; 5] = [
    "random_feasible",
    "lowest_tier",
    "category_segregation",
    "nearest_slot",
    "logged",
];

impl StrategySpec {
    pub fn named(name: &str) -> Self {
        StrategySpec {
            name: name.to_owned(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    /// Accepts a bare strategy name or a JSON spec.
    pub fn parse(text: &str) -> Result<Self, StrategyError> {
        let text = text.trim();
        if text.starts_with('{') {
            serde_json::from_str(text).map_err(|e| StrategyError::InvalidStrategy(e.to_string()))
        } else {
            Ok(StrategySpec::named(text))
        }
    }

    fn invalid(&self, msg: impl fmt::Display) -> StrategyError {
        StrategyError::InvalidStrategy(format!("{}: {msg}", self.name))
    }

    fn check_params(&self, allowed: &[&str]) -> Result<(), StrategyError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.invalid(format_args!("unknown parameter {k:?}"))),
            None => Ok(()),
        }
    }

    fn str_param(&self, key: &str) -> Result<Option<&str>, StrategyError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.invalid(format_args!("parameter {key:?} must be a string, got {v}"))),
        }
    }

    fn scope(&self) -> Result<RelocationScope, StrategyError> {
        match self.str_param("relocation_scope")? {
            None | Some("block") => Ok(RelocationScope::Block),
            Some("yard") => Ok(RelocationScope::Yard),
            Some(other) => Err(self.invalid(format_args!("relocation_scope {other:?} is not block|yard"))),
        }
    }

    pub fn build(&self) -> Result<Box<dyn StackingStrategy>, StrategyError> {
        match self.name.as_str() {
            "random_feasible" => {
                self.check_params(&["relocation_scope"])?;
                Ok(Box::new(RandomFeasible {
                    relocation_scope: self.scope()?,
                }))
            }
            "lowest_tier" => {
                self.check_params(&["relocation_scope"])?;
                Ok(Box::new(LowestTier {
                    relocation_scope: self.scope()?,
                }))
            }
            "category_segregation" => {
                self.check_params(&["relocation_scope", "key", "window_hours"])?;
                let key = match self.str_param("key")? {
                    None | Some("destination_port") => {
                        if self.params.contains_key("window_hours") {
                            return Err(self.invalid("window_hours needs key departure_window_hours"));
                        }
                        SegregationKey::DestinationPort
                    }
                    Some("departure_window_hours") => {
                        let hours = match self.params.get("window_hours") {
                            None => 24.0,
                            Some(v) => v.as_f64().ok_or_else(|| self.invalid("window_hours must be a number"))?,
                        };
                        if !(hours > 0.0 && hours.is_finite()) {
                            return Err(self.invalid("window_hours must be positive"));
                        }
                        SegregationKey::DepartureWindow { hours }
                    }
                    Some(other) => {
                        return Err(self.invalid(format_args!(
                            "key {other:?} is not destination_port|departure_window_hours"
                        )))
                    }
                };
                Ok(Box::new(CategorySegregation {
                    key,
                    relocation_scope: self.scope()?,
                }))
            }
            "nearest_slot" => {
                self.check_params(&["relocation_scope", "metric"])?;
                let metric = match self.str_param("metric")? {
                    None | Some("rectilinear") => CraneMetric::Rectilinear,
                    Some("chebyshev") => CraneMetric::Chebyshev,
                    Some(other) => return Err(self.invalid(format_args!("metric {other:?} is not rectilinear|chebyshev"))),
                };
                Ok(Box::new(NearestSlot {
                    metric,
                    relocation_scope: self.scope()?,
                }))
            }
            "logged" => {
                self.check_params(&[])?;
                Ok(Box::new(Logged))
            }
            other => Err(StrategyError::InvalidStrategy(format!(
                "unknown strategy {other:?}; expected one of {}",
                STRATEGY_NAMES.join(", ")
            ))),
        }
    }
}
