//! Slot-accurate yard state.
//!
//! A yard is a set of blocks; each block is a grid of bays × rows, and every
//! (block, bay, row) cell is a stack of up to `max_tier` containers. Tier 1 is
//! the ground. Containers may only be put on the lowest free tier of a stack
//! and only the topmost container of a stack may be taken off.

use crate::time::{self, Timestamp};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub block_id: String,
    pub bay_count: u32,
    pub row_count: u32,
    pub max_tier: u32,
    pub bay_pitch_m: f64,
    pub row_pitch_m: f64,
}

impl BlockSpec {
    pub fn capacity(&self) -> u64 {
        self.bay_count as u64 * self.row_count as u64 * self.max_tier as u64
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("layout has no blocks")]
    Empty,
    #[error("duplicate block id {0:?}")]
    DuplicateBlock(String),
    #[error("block id {0:?} is not a valid identifier")]
    BadBlockId(String),
    #[error("block {block}: {field} must be at least 1")]
    ZeroCount { block: String, field: &'static str },
    #[error("block {block}: {field} must be strictly positive")]
    NonPositivePitch { block: String, field: &'static str },
}

/// Physical layout of the yard. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayout", into = "RawLayout")]
pub struct YardLayout {
    blocks: Vec<BlockSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawLayout {
    blocks: Vec<BlockSpec>,
}

impl TryFrom<RawLayout> for YardLayout {
    type Error = LayoutError;

    fn try_from(raw: RawLayout) -> Result<Self, Self::Error> {
        YardLayout::new(raw.blocks)
    }
}

impl From<YardLayout> for RawLayout {
    fn from(layout: YardLayout) -> Self {
        RawLayout {
            blocks: layout.blocks,
        }
    }
}

fn valid_block_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl YardLayout {
    pub fn new(blocks: Vec<BlockSpec>) -> Result<Self, LayoutError> {
        if blocks.is_empty() {
            return Err(LayoutError::Empty);
        }
        for (i, b) in blocks.iter().enumerate() {
            if !valid_block_id(&b.block_id) {
                return Err(LayoutError::BadBlockId(b.block_id.clone()));
            }
            if blocks[..i].iter().any(|o| o.block_id == b.block_id) {
                return Err(LayoutError::DuplicateBlock(b.block_id.clone()));
            }
            for (field, v) in [
                ("bay_count", b.bay_count),
                ("row_count", b.row_count),
                ("max_tier", b.max_tier),
            ] {
                if v == 0 {
                    return Err(LayoutError::ZeroCount {
                        block: b.block_id.clone(),
                        field,
                    });
                }
            }
            for (field, v) in [("bay_pitch_m", b.bay_pitch_m), ("row_pitch_m", b.row_pitch_m)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(LayoutError::NonPositivePitch {
                        block: b.block_id.clone(),
                        field,
                    });
                }
            }
        }
        Ok(YardLayout { blocks })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn block(&self, block_id: &str) -> Option<&BlockSpec> {
        self.blocks.iter().find(|b| b.block_id == block_id)
    }

    pub fn capacity(&self) -> u64 {
        self.blocks.iter().map(BlockSpec::capacity).sum()
    }

    pub fn contains(&self, slot: &SlotAddress) -> bool {
        self.block(&slot.block_id).is_some_and(|b| {
            (1..=b.bay_count).contains(&slot.bay)
                && (1..=b.row_count).contains(&slot.row)
                && (1..=b.max_tier).contains(&slot.tier)
        })
    }

    pub fn contains_stack(&self, stack: &StackId) -> bool {
        self.block(&stack.block_id).is_some_and(|b| {
            (1..=b.bay_count).contains(&stack.bay) && (1..=b.row_count).contains(&stack.row)
        })
    }

    /// Every stack of the yard in (block_id, bay, row) order.
    pub fn stacks(&self) -> impl Iterator<Item = (StackId, &BlockSpec)> + '_ {
        let mut blocks: Vec<&BlockSpec> = self.blocks.iter().collect();
        blocks.sort_by(|a, b| a.block_id.cmp(&b.block_id));
        blocks.into_iter().flat_map(|b| {
            (1..=b.bay_count).flat_map(move |bay| {
                (1..=b.row_count).map(move |row| {
                    (
                        StackId {
                            block_id: b.block_id.clone(),
                            bay,
                            row,
                        },
                        b,
                    )
                })
            })
        })
    }

    /// Crane travel between two positions. Tier is ignored: gantry travel is
    /// along the bay axis, trolley travel along the row axis. Positions in
    /// different blocks are `inter_block_m` apart.
    pub fn crane_distance(
        &self,
        a: &SlotAddress,
        b: &SlotAddress,
        metric: CraneMetric,
        inter_block_m: f64,
    ) -> Option<f64> {
        if a.block_id != b.block_id {
            return Some(inter_block_m);
        }
        let block = self.block(&a.block_id)?;
        let gantry = a.bay.abs_diff(b.bay) as f64 * block.bay_pitch_m;
        let trolley = a.row.abs_diff(b.row) as f64 * block.row_pitch_m;
        Some(match metric {
            CraneMetric::Rectilinear => gantry + trolley,
            CraneMetric::Chebyshev => gantry.max(trolley),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CraneMetric {
    #[default]
    Rectilinear,
    Chebyshev,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid slot address {text:?}: {reason}")]
pub struct SlotParseError {
    pub text: String,
    pub reason: &'static str,
}

/// A yard coordinate, written `BLOCK.BAY.ROW.TIER` with a zero-padded
/// two-digit bay, e.g. `A.05.3.2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotAddress {
    pub block_id: String,
    pub bay: u32,
    pub row: u32,
    pub tier: u32,
}

impl SlotAddress {
    pub fn new(block_id: impl Into<String>, bay: u32, row: u32, tier: u32) -> Self {
        SlotAddress {
            block_id: block_id.into(),
            bay,
            row,
            tier,
        }
    }

    pub fn stack(&self) -> StackId {
        StackId {
            block_id: self.block_id.clone(),
            bay: self.bay,
            row: self.row,
        }
    }

    pub fn in_stack(&self, stack: &StackId) -> bool {
        self.block_id == stack.block_id && self.bay == stack.bay && self.row == stack.row
    }
}

impl fmt::Display for SlotAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}.{}.{}", self.block_id, self.bay, self.row, self.tier)
    }
}

// Positive decimal without leading zeros.
fn parse_index(text: &str) -> Option<u32> {
    if text.is_empty() || text.starts_with('0') || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

impl FromStr for SlotAddress {
    type Err = SlotParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason| SlotParseError {
            text: text.to_owned(),
            reason,
        };
        let parts: Vec<&str> = text.split('.').collect();
        let [block, bay, row, tier] = parts.as_slice() else {
            return Err(err("expected BLOCK.BAY.ROW.TIER"));
        };
        if !valid_block_id(block) {
            return Err(err("block id must be [A-Za-z0-9_-]+"));
        }
        // bay: at least two digits, zero-padded to exactly two when below 10
        let bay_ok = bay.len() >= 2 && bay.bytes().all(|b| b.is_ascii_digit());
        let bay_val: u32 = if bay_ok { bay.parse().unwrap_or(0) } else { 0 };
        if bay_val == 0 || format!("{bay_val:02}") != *bay {
            return Err(err("bay must be a zero-padded two-digit positive number"));
        }
        let row = parse_index(row).ok_or_else(|| err("row must be a positive integer"))?;
        let tier = parse_index(tier).ok_or_else(|| err("tier must be a positive integer"))?;
        Ok(SlotAddress::new(*block, bay_val, row, tier))
    }
}

impl Serialize for SlotAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SlotAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One vertical pile: (block, bay, row).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StackId {
    pub block_id: String,
    pub bay: u32,
    pub row: u32,
}

impl StackId {
    pub fn slot(&self, tier: u32) -> SlotAddress {
        SlotAddress::new(self.block_id.clone(), self.bay, self.row, tier)
    }
}

impl fmt::Display for StackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}.{}", self.block_id, self.bay, self.row)
    }
}

/// Identity plus the attributes the twin tracks for one container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerRecord {
    pub container_id: String,
    pub iso_type: String,
    pub origin_port: Option<String>,
    pub destination_port: Option<String>,
    #[serde(with = "crate::time::rfc3339")]
    pub arrival_time: Timestamp,
    pub departure_booked: bool,
    pub rehandle_count: u32,
    pub current_slot: Option<SlotAddress>,
    #[serde(
        default,
        with = "crate::time::rfc3339_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub planned_departure: Option<Timestamp>,
}

impl ContainerRecord {
    pub fn new(container_id: impl Into<String>, arrival_time: Timestamp) -> Self {
        ContainerRecord {
            container_id: container_id.into(),
            iso_type: String::new(),
            origin_port: None,
            destination_port: None,
            arrival_time,
            departure_booked: false,
            rehandle_count: 0,
            current_slot: None,
            planned_departure: None,
        }
    }

    pub fn dwell_days(&self, now: &Timestamp) -> f64 {
        time::days_between(&self.arrival_time, now)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum YardError {
    #[error("slot {0} is already occupied")]
    SlotOccupied(SlotAddress),
    #[error("slot {0} would float above an empty tier")]
    FloatingPlacement(SlotAddress),
    #[error("container {0} is already in the yard")]
    DuplicateContainer(String),
    #[error("address {0} is outside the yard layout")]
    AddressOutOfRange(String),
    #[error("slot {0} is empty")]
    SlotEmpty(SlotAddress),
    #[error("slot {slot} has {above} container(s) on top")]
    NotTopmost { slot: SlotAddress, above: u32 },
    #[error("container {0} is not in the yard")]
    UnknownContainer(String),
}

impl YardError {
    pub fn code(&self) -> &'static str {
        match self {
            YardError::SlotOccupied(_) => "SlotOccupied",
            YardError::FloatingPlacement(_) => "FloatingPlacement",
            YardError::DuplicateContainer(_) => "DuplicateContainer",
            YardError::AddressOutOfRange(_) => "AddressOutOfRange",
            YardError::SlotEmpty(_) => "SlotEmpty",
            YardError::NotTopmost { .. } => "NotTopmost",
            YardError::UnknownContainer(_) => "UnknownContainer",
        }
    }
}

/// Full yard state at `clock`.
///
/// Stacks are stored bottom-up, so gravity holds by construction; the
/// `containers` map holds exactly the containers currently in the yard.
#[derive(Debug, Clone, PartialEq)]
pub struct YardState {
    layout: Arc<YardLayout>,
    stacks: BTreeMap<StackId, Vec<String>>,
    containers: BTreeMap<String, ContainerRecord>,
    equipment: BTreeMap<String, SlotAddress>,
    clock: Timestamp,
}

impl YardState {
    pub fn new(layout: Arc<YardLayout>, clock: Timestamp) -> Self {
        YardState {
            layout,
            stacks: BTreeMap::new(),
            containers: BTreeMap::new(),
            equipment: BTreeMap::new(),
            clock,
        }
    }

    pub fn layout(&self) -> &YardLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> &Arc<YardLayout> {
        &self.layout
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    /// Moves the clock forward; never backwards.
    pub fn advance_clock(&mut self, to: Timestamp) {
        if to > self.clock {
            self.clock = to;
        }
    }

    pub fn container(&self, container_id: &str) -> Option<&ContainerRecord> {
        self.containers.get(container_id)
    }

    pub fn containers(&self) -> impl Iterator<Item = &ContainerRecord> {
        self.containers.values()
    }

    pub fn container_count(&self) -> usize {
        self.containers.len()
    }

    pub fn set_planned_departure(
        &mut self,
        container_id: &str,
        when: Timestamp,
    ) -> Result<(), YardError> {
        let rec = self
            .containers
            .get_mut(container_id)
            .ok_or_else(|| YardError::UnknownContainer(container_id.to_owned()))?;
        rec.planned_departure = Some(when);
        Ok(())
    }

    pub fn equipment_position(&self, equipment_id: &str) -> Option<&SlotAddress> {
        self.equipment.get(equipment_id)
    }

    pub fn set_equipment_position(&mut self, equipment_id: &str, at: SlotAddress) {
        self.equipment.insert(equipment_id.to_owned(), at);
    }

    /// Containers in `stack`, bottom first.
    pub fn stack(&self, stack: &StackId) -> &[String] {
        self.stacks.get(stack).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn stack_height(&self, stack: &StackId) -> u32 {
        self.stack(stack).len() as u32
    }

    pub fn container_at(&self, slot: &SlotAddress) -> Option<&str> {
        let tier = slot.tier.checked_sub(1)? as usize;
        self.stack(&slot.stack()).get(tier).map(String::as_str)
    }

    /// Occupied slots mapped to the container in each.
    pub fn occupancy(&self) -> BTreeMap<SlotAddress, String> {
        self.stacks
            .iter()
            .flat_map(|(stack, ids)| {
                ids.iter()
                    .enumerate()
                    .map(move |(i, id)| (stack.slot(i as u32 + 1), id.clone()))
            })
            .collect()
    }

    fn check_range(&self, slot: &SlotAddress) -> Result<(), YardError> {
        if self.layout.contains(slot) {
            Ok(())
        } else {
            Err(YardError::AddressOutOfRange(slot.to_string()))
        }
    }

    pub fn place(&mut self, mut record: ContainerRecord, slot: SlotAddress) -> Result<(), YardError> {
        self.check_range(&slot)?;
        if self.containers.contains_key(&record.container_id) {
            return Err(YardError::DuplicateContainer(record.container_id));
        }
        let height = self.stack_height(&slot.stack());
        if slot.tier <= height {
            return Err(YardError::SlotOccupied(slot));
        }
        if slot.tier > height + 1 {
            return Err(YardError::FloatingPlacement(slot));
        }
        self.stacks
            .entry(slot.stack())
            .or_default()
            .push(record.container_id.clone());
        record.current_slot = Some(slot);
        self.containers.insert(record.container_id.clone(), record);
        Ok(())
    }

    pub fn remove(&mut self, slot: &SlotAddress) -> Result<ContainerRecord, YardError> {
        self.check_range(slot)?;
        let stack_id = slot.stack();
        let height = self.stack_height(&stack_id);
        if slot.tier > height {
            return Err(YardError::SlotEmpty(slot.clone()));
        }
        if slot.tier < height {
            return Err(YardError::NotTopmost {
                slot: slot.clone(),
                above: height - slot.tier,
            });
        }
        let stack = self.stacks.get_mut(&stack_id).expect("non-empty stack");
        let id = stack.pop().expect("non-empty stack");
        if stack.is_empty() {
            self.stacks.remove(&stack_id);
        }
        let mut record = self
            .containers
            .remove(&id)
            .expect("stacked container has a record");
        record.current_slot = None;
        Ok(record)
    }

    /// Moves the container at `from` to `to` and counts one rehandle. On
    /// failure the state is left unchanged.
    pub fn relocate(&mut self, from: &SlotAddress, to: SlotAddress) -> Result<(), YardError> {
        let mut record = self.remove(from)?;
        record.rehandle_count += 1;
        if let Err(e) = self.place(record.clone(), to) {
            record.rehandle_count -= 1;
            self.place(record, from.clone())
                .expect("restoring a just-removed container");
            return Err(e);
        }
        Ok(())
    }

    pub fn blocking_count(&self, container_id: &str) -> Result<u32, YardError> {
        let slot = self
            .containers
            .get(container_id)
            .and_then(|r| r.current_slot.as_ref())
            .ok_or_else(|| YardError::UnknownContainer(container_id.to_owned()))?;
        Ok(self.stack_height(&slot.stack()) - slot.tier)
    }

    /// Containers stacked on top of `container_id`, topmost first.
    pub fn blockers(&self, container_id: &str) -> Result<Vec<String>, YardError> {
        let slot = self
            .containers
            .get(container_id)
            .and_then(|r| r.current_slot.as_ref())
            .ok_or_else(|| YardError::UnknownContainer(container_id.to_owned()))?;
        let stack = self.stack(&slot.stack());
        Ok(stack[slot.tier as usize..].iter().rev().cloned().collect())
    }

    /// Height of every row of a bay, row 1 first.
    pub fn stack_heights(&self, block_id: &str, bay: u32) -> Result<Vec<u32>, YardError> {
        let block = self
            .layout
            .block(block_id)
            .filter(|b| (1..=b.bay_count).contains(&bay))
            .ok_or_else(|| YardError::AddressOutOfRange(format!("{block_id}.{bay:02}")))?;
        Ok((1..=block.row_count)
            .map(|row| {
                self.stack_height(&StackId {
                    block_id: block_id.to_owned(),
                    bay,
                    row,
                })
            })
            .collect())
    }

    pub fn block_container_count(&self, block_id: &str) -> usize {
        self.stacks
            .iter()
            .filter(|(s, _)| s.block_id == block_id)
            .map(|(_, ids)| ids.len())
            .sum()
    }

    /// Checks slot/container bijection, gravity and tier limits.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = 0usize;
        for (stack, ids) in &self.stacks {
            if ids.is_empty() {
                return Err(format!("empty stack entry {stack}"));
            }
            let block = self
                .layout
                .block(&stack.block_id)
                .filter(|_| self.layout.contains_stack(stack))
                .ok_or_else(|| format!("stack {stack} outside layout"))?;
            if ids.len() as u32 > block.max_tier {
                return Err(format!("stack {stack} exceeds max tier {}", block.max_tier));
            }
            for (i, id) in ids.iter().enumerate() {
                let rec = self
                    .containers
                    .get(id)
                    .ok_or_else(|| format!("stacked container {id} has no record"))?;
                let expected = stack.slot(i as u32 + 1);
                if rec.current_slot.as_ref() != Some(&expected) {
                    return Err(format!(
                        "container {id} records slot {:?}, stacked at {expected}",
                        rec.current_slot.as_ref().map(|s| s.to_string())
                    ));
                }
                seen += 1;
            }
        }
        if seen != self.containers.len() {
            return Err(format!(
                "{} records but {seen} stacked containers",
                self.containers.len()
            ));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            clock: self.clock,
            blocks: self
                .layout
                .blocks()
                .iter()
                .map(|b| BlockSnapshot {
                    block_id: b.block_id.clone(),
                    bays: (1..=b.bay_count)
                        .map(|bay| BaySnapshot {
                            bay,
                            rows: (1..=b.row_count)
                                .map(|row| RowSnapshot {
                                    row,
                                    stack: self
                                        .stack(&StackId {
                                            block_id: b.block_id.clone(),
                                            bay,
                                            row,
                                        })
                                        .to_vec(),
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
            containers: self.containers.clone(),
        }
    }

    pub fn bay_detail(&self, block_id: &str, bay: u32) -> Result<BayDetail, YardError> {
        let heights = self.stack_heights(block_id, bay)?;
        let rows = heights
            .iter()
            .enumerate()
            .map(|(i, &height)| {
                let stack = StackId {
                    block_id: block_id.to_owned(),
                    bay,
                    row: i as u32 + 1,
                };
                RowDetail {
                    row: stack.row,
                    height,
                    slots: self
                        .stack(&stack)
                        .iter()
                        .enumerate()
                        .map(|(t, id)| {
                            let rec = &self.containers[id];
                            SlotDetail {
                                tier: t as u32 + 1,
                                container_id: id.clone(),
                                iso_type: rec.iso_type.clone(),
                                origin_port: rec.origin_port.clone(),
                                destination_port: rec.destination_port.clone(),
                                dwell_days: rec.dwell_days(&self.clock),
                                rehandle_count: rec.rehandle_count,
                                departure_booked: rec.departure_booked,
                            }
                        })
                        .collect(),
                }
            })
            .collect();
        Ok(BayDetail {
            block_id: block_id.to_owned(),
            bay,
            at: self.clock,
            rows,
        })
    }

    pub fn block_detail(&self, block_id: &str) -> Result<BlockDetail, YardError> {
        let block = self
            .layout
            .block(block_id)
            .ok_or_else(|| YardError::AddressOutOfRange(block_id.to_owned()))?;
        Ok(BlockDetail {
            block_id: block_id.to_owned(),
            at: self.clock,
            max_tier: block.max_tier,
            container_count: self.block_container_count(block_id),
            bays: (1..=block.bay_count)
                .map(|bay| self.bay_detail(block_id, bay))
                .collect::<Result<_, _>>()?,
        })
    }
}

/// Serialized yard state:
/// `{clock, blocks: [{block_id, bays: [{bay, rows: [{row, stack}]}]}], containers}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(with = "crate::time::rfc3339")]
    pub clock: Timestamp,
    pub blocks: Vec<BlockSnapshot>,
    pub containers: BTreeMap<String, ContainerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSnapshot {
    pub block_id: String,
    pub bays: Vec<BaySnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaySnapshot {
    pub bay: u32,
    pub rows: Vec<RowSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSnapshot {
    pub row: u32,
    /// Container ids, tier 1 first.
    pub stack: Vec<String>,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDetail {
    pub tier: u32,
    pub container_id: String,
    pub iso_type: String,
    pub origin_port: Option<String>,
    pub destination_port: Option<String>,
    pub dwell_days: f64,
    pub rehandle_count: u32,
    pub departure_booked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDetail {
    pub row: u32,
    pub height: u32,
    pub slots: Vec<SlotDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayDetail {
    pub block_id: String,
    pub bay: u32,
    #[serde(with = "crate::time::rfc3339")]
    pub at: Timestamp,
    pub rows: Vec<RowDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDetail {
    pub block_id: String,
    #[serde(with = "crate::time::rfc3339")]
    pub at: Timestamp,
    pub max_tier: u32,
    pub container_count: usize,
    pub bays: Vec<BayDetail>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t0() -> Timestamp {
        time::parse("2024-03-01T08:00:00Z").unwrap()
    }

    fn layout(bays: u32, rows: u32, tiers: u32) -> Arc<YardLayout> {
        Arc::new(
            YardLayout::new(vec![BlockSpec {
                block_id: "A".into(),
                bay_count: bays,
                row_count: rows,
                max_tier: tiers,
                bay_pitch_m: 6.5,
                row_pitch_m: 2.9,
            }])
            .unwrap(),
        )
    }

    fn rec(id: &str) -> ContainerRecord {
        ContainerRecord::new(id, t0())
    }

    fn slot(tier: u32) -> SlotAddress {
        SlotAddress::new("A", 1, 1, tier)
    }

    #[test]
    fn slot_text_form() {
        let s: SlotAddress = "A.05.3.2".parse().unwrap();
        assert_eq!(s, SlotAddress::new("A", 5, 3, 2));
        assert_eq!(s.to_string(), "A.05.3.2");
        assert_eq!(SlotAddress::new("B2", 112, 10, 1).to_string(), "B2.112.10.1");
        for bad in ["A.5.3.2", "A.005.3.2", "A.05.03.2", "A.05.3", "A.05.3.0", ".05.3.2", "A.00.1.1", "A.05.3.2.1", "A B.05.1.1"] {
            assert!(bad.parse::<SlotAddress>().is_err(), "{bad}");
        }
    }

    #[test]
    fn layout_rejects_bad_blocks() {
        let mut spec = layout(1, 1, 1).blocks()[0].clone();
        assert!(YardLayout::new(vec![spec.clone(), spec.clone()]).is_err());
        spec.row_pitch_m = 0.0;
        assert!(matches!(
            YardLayout::new(vec![spec.clone()]),
            Err(LayoutError::NonPositivePitch { .. })
        ));
        spec.row_pitch_m = 1.0;
        spec.max_tier = 0;
        assert!(matches!(YardLayout::new(vec![spec]), Err(LayoutError::ZeroCount { .. })));
        assert_eq!(YardLayout::new(vec![]), Err(LayoutError::Empty));
    }

    #[test]
    fn place_on_empty_stack() {
        let mut y = YardState::new(layout(1, 1, 3), t0());
        y.place(rec("C1"), slot(1)).unwrap();
        assert_eq!(y.occupancy(), BTreeMap::from([(slot(1), "C1".to_string())]));
    }

    #[test]
    fn place_rejects_floating_and_occupied() {
        let mut y = YardState::new(layout(1, 1, 3), t0());
        y.place(rec("C1"), slot(1)).unwrap();
        assert_eq!(y.place(rec("C2"), slot(3)), Err(YardError::FloatingPlacement(slot(3))));
        y.place(rec("C2"), slot(2)).unwrap();
        assert_eq!(y.place(rec("C3"), slot(2)), Err(YardError::SlotOccupied(slot(2))));
        assert_eq!(
            y.place(rec("C1"), slot(3)),
            Err(YardError::DuplicateContainer("C1".into()))
        );
        assert!(matches!(
            y.place(rec("C4"), SlotAddress::new("A", 1, 1, 4)),
            Err(YardError::AddressOutOfRange(_))
        ));
        assert!(matches!(
            y.place(rec("C4"), SlotAddress::new("Z", 1, 1, 1)),
            Err(YardError::AddressOutOfRange(_))
        ));
    }

    #[test]
    fn remove_only_topmost() {
        let mut y = YardState::new(layout(1, 1, 3), t0());
        y.place(rec("C1"), slot(1)).unwrap();
        y.place(rec("C2"), slot(2)).unwrap();
        assert!(matches!(y.remove(&slot(1)), Err(YardError::NotTopmost { above: 1, .. })));
        assert_eq!(y.remove(&slot(3)), Err(YardError::SlotEmpty(slot(3))));
        let c2 = y.remove(&slot(2)).unwrap();
        assert_eq!(c2.container_id, "C2");
        assert_eq!(c2.current_slot, None);
        let c1 = y.remove(&slot(1)).unwrap();
        assert_eq!(c1.container_id, "C1");
        assert!(y.occupancy().is_empty());
    }

    #[test]
    fn blocking_counts() {
        let mut y = YardState::new(layout(1, 1, 3), t0());
        for (i, id) in ["C1", "C2", "C3"].iter().enumerate() {
            y.place(rec(id), slot(i as u32 + 1)).unwrap();
        }
        assert_eq!(y.blocking_count("C1"), Ok(2));
        assert_eq!(y.blocking_count("C3"), Ok(0));
        assert_eq!(y.blockers("C1").unwrap(), vec!["C3", "C2"]);
        y.remove(&slot(3)).unwrap();
        assert_eq!(y.blocking_count("C1"), Ok(1));
        assert_eq!(y.blocking_count("C9"), Err(YardError::UnknownContainer("C9".into())));
    }

    #[test]
    fn heights_per_row() {
        let mut y = YardState::new(layout(2, 3, 3), t0());
        assert_eq!(y.stack_heights("A", 1).unwrap(), vec![0, 0, 0]);
        y.place(rec("C1"), SlotAddress::new("A", 1, 2, 1)).unwrap();
        y.place(rec("C2"), SlotAddress::new("A", 1, 2, 2)).unwrap();
        assert_eq!(y.stack_heights("A", 1).unwrap(), vec![0, 2, 0]);
        assert!(y.stack_heights("A", 3).is_err());
        assert!(y.stack_heights("B", 1).is_err());
    }

    #[test]
    fn relocation_counts_and_rolls_back() {
        let mut y = YardState::new(layout(1, 2, 2), t0());
        y.place(rec("C1"), slot(1)).unwrap();
        y.relocate(&slot(1), SlotAddress::new("A", 1, 2, 1)).unwrap();
        assert_eq!(y.container("C1").unwrap().rehandle_count, 1);
        let before = y.clone();
        let err = y.relocate(&SlotAddress::new("A", 1, 2, 1), SlotAddress::new("A", 1, 1, 2));
        assert_eq!(err, Err(YardError::FloatingPlacement(SlotAddress::new("A", 1, 1, 2))));
        assert_eq!(y, before);
    }

    #[test]
    fn snapshot_shape() {
        let mut y = YardState::new(layout(1, 2, 2), t0());
        y.place(rec("C1"), slot(1)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&y.snapshot().to_json()).unwrap();
        assert_eq!(json["clock"], "2024-03-01T08:00:00Z");
        assert_eq!(json["blocks"][0]["block_id"], "A");
        assert_eq!(json["blocks"][0]["bays"][0]["rows"][0]["stack"][0], "C1");
        assert_eq!(json["blocks"][0]["bays"][0]["rows"][1]["stack"], serde_json::json!([]));
        assert_eq!(json["containers"]["C1"]["current_slot"], "A.01.1.1");
        let back: Snapshot = serde_json::from_value(json).unwrap();
        assert_eq!(back, y.snapshot());
    }

    #[test]
    fn crane_metric() {
        let l = layout(10, 4, 4);
        let a: SlotAddress = "A.05.3.1".parse().unwrap();
        let b: SlotAddress = "A.08.1.4".parse().unwrap();
        let d = l.crane_distance(&a, &b, CraneMetric::Rectilinear, 0.0).unwrap();
        assert!((d - 25.3).abs() < 1e-9);
        let c = l.crane_distance(&a, &b, CraneMetric::Chebyshev, 0.0).unwrap();
        assert!((c - 19.5).abs() < 1e-9);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Place(u32, u32),
        Remove(u32, u32),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (1u32..=2, 1u32..=3).prop_map(|(b, r)| Op::Place(b, r)),
            (1u32..=2, 1u32..=3).prop_map(|(b, r)| Op::Remove(b, r)),
        ]
    }

    proptest! {
        #[test]
        fn invariants_hold_over_legal_sequences(ops in prop::collection::vec(op(), 0..80)) {
            let mut y = YardState::new(layout(2, 3, 3), t0());
            let mut next = 0;
            for op in ops {
                match op {
                    Op::Place(bay, row) => {
                        let s = StackId { block_id: "A".into(), bay, row };
                        let h = y.stack_height(&s);
                        let r = y.place(rec(&format!("C{next}")), s.slot(h + 1));
                        prop_assert_eq!(r.is_ok(), h < 3);
                        next += 1;
                    }
                    Op::Remove(bay, row) => {
                        let s = StackId { block_id: "A".into(), bay, row };
                        let h = y.stack_height(&s);
                        if h > 0 {
                            y.remove(&s.slot(h)).unwrap();
                        }
                    }
                }
                prop_assert!(y.check_invariants().is_ok());
                let total: u32 = (1..=2).flat_map(|bay| y.stack_heights("A", bay).unwrap()).sum();
                prop_assert_eq!(total as usize, y.container_count());
                for c in y.containers() {
                    let slot = c.current_slot.clone().unwrap();
                    prop_assert_eq!(
                        y.blocking_count(&c.container_id).unwrap(),
                        y.stack_height(&slot.stack()) - slot.tier
                    );
                }
            }
        }

        #[test]
        fn place_then_remove_restores_occupancy(
            fill in prop::collection::vec((1u32..=2, 1u32..=3), 0..12),
            target in (1u32..=2, 1u32..=3),
        ) {
            let mut y = YardState::new(layout(2, 3, 3), t0());
            for (i, (bay, row)) in fill.into_iter().enumerate() {
                let s = StackId { block_id: "A".into(), bay, row };
                let h = y.stack_height(&s);
                let _ = y.place(rec(&format!("C{i}")), s.slot(h + 1));
            }
            let s = StackId { block_id: "A".into(), bay: target.0, row: target.1 };
            let h = y.stack_height(&s);
            prop_assume!(h < 3);
            let before = y.occupancy();
            y.place(rec("X"), s.slot(h + 1)).unwrap();
            y.remove(&s.slot(h + 1)).unwrap();
            prop_assert_eq!(y.occupancy(), before);
        }
    }
}
