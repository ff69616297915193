//! Synthetic yard logs.
//!
//! Containers arrive over a span and leave on periodic vessel calls of their
//! destination group. The "operator" that produced the log stacks at random
//! within a random block and digs blockers out to random stacks of the same
//! block, so the log carries real `YARD_SHIFT`s.

use crate::engine::{counterfactual_run, EngineError, SimulationJob, StepKind};
use crate::events::{EventKind, EventLog, YardEvent};
use crate::strategy::StrategySpec;
use crate::time::Timestamp;
use crate::yard::{BlockSpec, LayoutError, SlotAddress, YardLayout};
use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

const PORTS: [&str; 8] = ["NLRTM", "DEHAM", "CNSHA", "USNYC", "SGSIN", "BEANR", "ESVLC", "BRSSZ"];
const ISO_TYPES: [&str; 3] = ["22G1", "45G1", "42G1"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub containers: usize,
    /// Destination groups; group `g` sails to the `g`-th port.
    pub groups: usize,
    pub start: Timestamp,
    /// Arrivals are uniform over `[start, start + arrival_span_hours)`.
    pub arrival_span_hours: i64,
    /// Group `g` calls at `first_call + (g + n·groups)·call_interval` for n ≥ 0.
    pub first_call_hours: i64,
    pub call_interval_hours: i64,
    /// A container takes the first call of its group at least this long after arrival.
    pub min_dwell_hours: i64,
    /// Loads of one call are spread uniformly over this many hours.
    pub loading_window_hours: i64,
    /// Insert a crane repositioning after every n moves of a crane; 0 disables.
    pub crane_pos_every: usize,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            containers: 200,
            groups: 4,
            start: Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap(),
            arrival_span_hours: 48,
            first_call_hours: 60,
            call_interval_hours: 48,
            min_dwell_hours: 0,
            loading_window_hours: 8,
            crane_pos_every: 10,
            seed: 1,
        }
    }
}

/// Blocks `A`, `B`, … of identical shape with 6.5 m bays and 2.9 m rows.
pub fn demo_layout(blocks: usize, bays: u32, rows: u32, tiers: u32) -> Result<YardLayout, LayoutError> {
    YardLayout::new(
        (0..blocks)
            .map(|i| BlockSpec {
                block_id: char::from(b'A' + (i % 26) as u8).to_string(),
                bay_count: bays,
                row_count: rows,
                max_tier: tiers,
                bay_pitch_m: 6.5,
                row_pitch_m: 2.9,
            })
            .collect(),
    )
}

fn equipment_for(slot: &SlotAddress) -> String {
    format!("RTG-{}", slot.block_id)
}

/// Generates a replayable log for `layout`.
pub fn generate(config: &WorkloadConfig, layout: &Arc<YardLayout>) -> Result<EventLog, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let blocks: Vec<&BlockSpec> = layout.blocks().iter().collect();
    let groups = config.groups.max(1) as i64;
    let cycle = groups * config.call_interval_hours;

    let mut demand = Vec::with_capacity(2 * config.containers);
    let mut seq = 0;
    for n in 0..config.containers {
        let id = format!("CNTR{:07}", n + 1);
        let group = rng.gen_range(0..groups);
        let arrival = config.start + Duration::minutes(rng.gen_range(0..config.arrival_span_hours.max(1) * 60));
        let earliest = arrival + Duration::hours(config.min_dwell_hours);
        let mut call = config.start + Duration::hours(config.first_call_hours + group * config.call_interval_hours);
        while call < earliest {
            call += Duration::hours(cycle.max(1));
        }
        let departure = call + Duration::minutes(rng.gen_range(0..config.loading_window_hours.max(1) * 60));
        let block = blocks.choose(&mut rng).expect("layout has blocks");
        let target = SlotAddress::new(block.block_id.clone(), 1, 1, 1);
        let arrival_kind = if rng.gen_bool(0.5) {
            EventKind::GateIn
        } else {
            EventKind::VesselDischarge
        };
        demand.push(
            YardEvent::new(seq, arrival, arrival_kind)
                .with_container(id.clone())
                .with_to(target.clone())
                .with_equipment(equipment_for(&target))
                .with_attr("iso_type", *ISO_TYPES.choose(&mut rng).unwrap())
                .with_attr("origin_port", PORTS[(group as usize + 4) % PORTS.len()])
                .with_attr("destination_port", PORTS[group as usize % PORTS.len()])
                .with_attr("departure_booked", true),
        );
        demand.push(
            YardEvent::new(seq + 1, departure, EventKind::VesselLoad)
                .with_container(id)
                .with_from(target.clone())
                .with_equipment(equipment_for(&target)),
        );
        seq += 2;
    }
    let demand = EventLog::new(demand);
    let (Some(from), Some(to)) = (demand.first_time(), demand.last_time()) else {
        return Ok(demand);
    };
    let job = SimulationJob::new("workload", from, to, StepKind::Event, StrategySpec::named("random_feasible"), config.seed)?;
    let operated = counterfactual_run(&demand, layout, &job)?;

    let mut out = Vec::with_capacity(operated.events.len() * 11 / 10);
    let mut moves: BTreeMap<String, usize> = BTreeMap::new();
    for e in operated.events.events() {
        let mut e = e.clone();
        e.synthetic = false;
        let slot = match e.kind {
            EventKind::GateOut | EventKind::VesselLoad => e.from_slot.clone(),
            _ => e.to_slot.clone(),
        }
        .expect("moves carry a slot");
        let eq = equipment_for(&slot);
        e.equipment_id = Some(eq.clone());
        let ts = e.timestamp;
        out.push(e);
        let n = moves.entry(eq.clone()).or_default();
        *n += 1;
        if config.crane_pos_every > 0 && n.is_multiple_of(config.crane_pos_every) {
            let spec = layout.block(&slot.block_id).expect("slot in layout");
            let park = SlotAddress::new(
                slot.block_id.clone(),
                rng.gen_range(1..=spec.bay_count),
                rng.gen_range(1..=spec.row_count),
                1,
            );
            out.push(YardEvent::new(0, ts, EventKind::CranePos).with_to(park).with_equipment(eq));
        }
    }
    Ok(EventLog::from_ordered(out))
}

/// The first `n` events of `log`, which stay replayable.
pub fn truncate(log: &EventLog, n: usize) -> EventLog {
    EventLog::from_ordered(log.events().iter().take(n).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::replay_to;
    use crate::events::TimeWindow;
    use crate::kpi::kpi_report;

    fn layout() -> Arc<YardLayout> {
        Arc::new(demo_layout(3, 8, 6, 4).unwrap())
    }

    #[test]
    fn generated_log_replays_and_empties() {
        let l = layout();
        let log = generate(&WorkloadConfig::default(), &l).unwrap();
        let end = log.last_time().unwrap();
        let y = replay_to(&log, &l, end).unwrap();
        assert_eq!(y.container_count(), 0);
        let w = TimeWindow::new(log.first_time().unwrap(), end).unwrap();
        let r = kpi_report(&log, &l, &w).unwrap();
        assert_eq!(r.productive_moves, 400);
        assert!(r.unproductive_moves > 0);
        assert!(log.events().iter().any(|e| e.kind == EventKind::CranePos));
        assert!(log.events().iter().all(|e| !e.synthetic));
    }

    #[test]
    fn generation_is_seeded() {
        let l = layout();
        let a = generate(&WorkloadConfig::default(), &l).unwrap();
        let b = generate(&WorkloadConfig::default(), &l).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let c = generate(&WorkloadConfig { seed: 2, ..WorkloadConfig::default() }, &l).unwrap();
        assert_ne!(a.to_jsonl(), c.to_jsonl());
    }

    #[test]
    fn truncation_keeps_a_prefix() {
        let l = layout();
        let log = generate(&WorkloadConfig::default(), &l).unwrap();
        let short = truncate(&log, 50);
        assert_eq!(short.len(), 50);
        assert_eq!(short.events(), &log.events()[..50]);
        replay_to(&short, &l, short.last_time().unwrap()).unwrap();
    }
}
