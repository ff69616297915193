//! Productivity KPIs over a window of a real or simulated log.

use crate::engine::{apply_event, EngineError, EventFault};
use crate::events::{EventKind, EventLog, TimeWindow, YardEvent};
use crate::time;
use crate::yard::{CraneMetric, SlotAddress, YardError, YardLayout, YardState};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MoveClass {
    Productive,
    Unproductive,
    NonMove,
}

pub fn classify_move(event: &YardEvent) -> MoveClass {
    match event.kind {
        EventKind::GateIn | EventKind::GateOut | EventKind::VesselDischarge | EventKind::VesselLoad => {
            MoveClass::Productive
        }
        EventKind::YardShift => MoveClass::Unproductive,
        EventKind::CranePos => MoveClass::NonMove,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("event {seq}: position {slot} of {equipment} is not in the layout")]
pub struct UnknownEquipmentLayout {
    pub seq: u64,
    pub equipment: String,
    pub slot: String,
}

/// How crane positions are turned into metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TravelOptions {
    pub metric: CraneMetric,
    /// Distance charged for a move between blocks.
    pub inter_block_m: f64,
}

/// Rounds to the millimetre so sums of pitches print as written.
fn round_mm(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Positions visited by each piece of equipment, in event order.
fn positions<'a>(events: impl IntoIterator<Item = &'a YardEvent>) -> BTreeMap<&'a str, Vec<(u64, &'a SlotAddress)>> {
    let mut out: BTreeMap<&str, Vec<(u64, &SlotAddress)>> = BTreeMap::new();
    for e in events {
        let Some(eq) = e.equipment_id.as_deref() else { continue };
        let track = out.entry(eq).or_default();
        for slot in [&e.from_slot, &e.to_slot].into_iter().flatten() {
            track.push((e.seq, slot));
        }
    }
    out
}

fn track_length(
    equipment: &str,
    track: &[(u64, &SlotAddress)],
    layout: &YardLayout,
    opts: TravelOptions,
) -> Result<f64, UnknownEquipmentLayout> {
    for (seq, slot) in track {
        if layout.block(&slot.block_id).is_none() {
            return Err(UnknownEquipmentLayout {
                seq: *seq,
                equipment: equipment.to_owned(),
                slot: slot.to_string(),
            });
        }
    }
    let sum: f64 = track
        .windows(2)
        .map(|w| {
            layout
                .crane_distance(w[0].1, w[1].1, opts.metric, opts.inter_block_m)
                .expect("blocks checked above")
        })
        .sum();
    Ok(round_mm(sum))
}

/// Distance travelled by one piece of equipment over time-ordered events.
/// Events of other equipment are ignored.
pub fn crane_travel(
    events: &[YardEvent],
    equipment: &str,
    layout: &YardLayout,
    opts: TravelOptions,
) -> Result<f64, UnknownEquipmentLayout> {
    let all = positions(events.iter().filter(|e| e.equipment_id.as_deref() == Some(equipment)));
    match all.get(equipment) {
        Some(track) => track_length(equipment, track, layout, opts),
        None => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub rehandles: u32,
    pub containers: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RehandleSummary {
    pub mean: f64,
    pub max: u32,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraneTravel {
    pub per_equipment: BTreeMap<String, f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub window: TimeWindow,
    pub total_moves: u64,
    pub productive_moves: u64,
    pub unproductive_moves: u64,
    pub unproductive_ratio: f64,
    /// In-window shifts of every container present at some point in the window.
    pub rehandles_per_container: RehandleSummary,
    /// Containers that departed within the window.
    pub mean_dwell_days: f64,
    /// Containers still in the yard at the end of the window.
    pub mean_current_dwell_days: f64,
    pub crane_travel_m: CraneTravel,
    pub occupancy_peak: BTreeMap<String, u64>,
}

impl KpiReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Histogram as `rehandles,containers` CSV.
    pub fn write_histogram_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rehandles", "containers"])?;
        for bin in &self.rehandles_per_container.histogram {
            w.write_record([bin.rehandles.to_string(), bin.containers.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// KPI report with rectilinear crane travel and free block changes.
pub fn kpi_report(log: &EventLog, layout: &Arc<YardLayout>, window: &TimeWindow) -> Result<KpiReport, EngineError> {
    kpi_report_with(log, layout, window, TravelOptions::default())
}

pub fn kpi_report_with(
    log: &EventLog,
    layout: &Arc<YardLayout>,
    window: &TimeWindow,
    opts: TravelOptions,
) -> Result<KpiReport, EngineError> {
    let events = log.events();
    let start = log.first_time().map_or(window.from, |t| t.min(window.from));
    let mut state = YardState::new(layout.clone(), start);
    let mut i = 0;
    while i < events.len() && events[i].timestamp < window.from {
        apply_event(&mut state, &events[i])?;
        i += 1;
    }
    let in_window: Vec<&YardEvent> = events[i..].iter().take_while(|e| e.timestamp <= window.to).collect();

    let block_counts = |s: &YardState| -> BTreeMap<String, u64> {
        layout
            .blocks()
            .iter()
            .map(|b| (b.block_id.clone(), s.block_container_count(&b.block_id) as u64))
            .collect()
    };
    let mut peak = block_counts(&state);
    let mut shifts: BTreeMap<String, u32> = state.containers().map(|c| (c.container_id.clone(), 0)).collect();
    let mut dwell = Vec::new();
    let (mut productive, mut unproductive) = (0u64, 0u64);

    for e in &in_window {
        let departed = apply_event(&mut state, e)?;
        match classify_move(e) {
            MoveClass::Productive => productive += 1,
            MoveClass::Unproductive => unproductive += 1,
            MoveClass::NonMove => {}
        }
        if let Some(id) = e.container_id.as_deref() {
            let n = shifts.entry(id.to_owned()).or_insert(0);
            if e.kind == EventKind::YardShift {
                *n += 1;
            }
        }
        if let Some(rec) = departed {
            dwell.push(time::days_between(&rec.arrival_time, &e.timestamp));
        }
        for (block, n) in block_counts(&state) {
            let p = peak.entry(block).or_insert(0);
            *p = (*p).max(n);
        }
    }

    let current: Vec<f64> = state.containers().map(|c| c.dwell_days(&window.to)).collect();

    let mut histogram: BTreeMap<u32, u64> = BTreeMap::new();
    for &n in shifts.values() {
        *histogram.entry(n).or_default() += 1;
    }
    let counted = shifts.len() as u64;
    let shift_sum: u64 = shifts.values().map(|&n| u64::from(n)).sum();

    let mut per_equipment = BTreeMap::new();
    for (eq, track) in positions(in_window.iter().copied()) {
        let m = track_length(eq, &track, layout, opts).map_err(|err| EngineError::ReplayHalted {
            seq: err.seq,
            cause: EventFault::Yard(YardError::AddressOutOfRange(err.slot)),
        })?;
        per_equipment.insert(eq.to_owned(), m);
    }
    let total_travel = round_mm(per_equipment.values().sum());

    let total = productive + unproductive;
    Ok(KpiReport {
        window: *window,
        total_moves: total,
        productive_moves: productive,
        unproductive_moves: unproductive,
        unproductive_ratio: if total == 0 { 0.0 } else { unproductive as f64 / total as f64 },
        rehandles_per_container: RehandleSummary {
            mean: if counted == 0 { 0.0 } else { shift_sum as f64 / counted as f64 },
            max: shifts.values().copied().max().unwrap_or(0),
            histogram: histogram
                .into_iter()
                .map(|(rehandles, containers)| HistogramBin { rehandles, containers })
                .collect(),
        },
        mean_dwell_days: time::round_tenth(mean(&dwell)),
        mean_current_dwell_days: time::round_tenth(mean(&current)),
        crane_travel_m: CraneTravel {
            per_equipment,
            total: total_travel,
        },
        occupancy_peak: peak,
    })
}

/// Per-metric differences, simulated minus real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiDeltas {
    pub total_moves: i64,
    pub productive_moves: i64,
    pub unproductive_moves: i64,
    pub unproductive_ratio: f64,
    pub rehandles_mean: f64,
    pub rehandles_max: i64,
    pub mean_dwell_days: f64,
    pub mean_current_dwell_days: f64,
    pub crane_travel_total_m: f64,
    pub crane_travel_m: BTreeMap<String, f64>,
    pub occupancy_peak: BTreeMap<String, i64>,
}

fn diff_maps<T: Copy + Default, D>(
    a: &BTreeMap<String, T>,
    b: &BTreeMap<String, T>,
    sub: impl Fn(T, T) -> D,
) -> BTreeMap<String, D> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_default();
            let y = b.get(k).copied().unwrap_or_default();
            (k.clone(), sub(y, x))
        })
        .collect()
}

impl KpiDeltas {
    pub fn between(real: &KpiReport, sim: &KpiReport) -> Self {
        let d = |a: u64, b: u64| b as i64 - a as i64;
        KpiDeltas {
            total_moves: d(real.total_moves, sim.total_moves),
            productive_moves: d(real.productive_moves, sim.productive_moves),
            unproductive_moves: d(real.unproductive_moves, sim.unproductive_moves),
            unproductive_ratio: sim.unproductive_ratio - real.unproductive_ratio,
            rehandles_mean: sim.rehandles_per_container.mean - real.rehandles_per_container.mean,
            rehandles_max: i64::from(sim.rehandles_per_container.max) - i64::from(real.rehandles_per_container.max),
            mean_dwell_days: sim.mean_dwell_days - real.mean_dwell_days,
            mean_current_dwell_days: sim.mean_current_dwell_days - real.mean_current_dwell_days,
            crane_travel_total_m: sim.crane_travel_m.total - real.crane_travel_m.total,
            crane_travel_m: diff_maps(&real.crane_travel_m.per_equipment, &sim.crane_travel_m.per_equipment, |s, r| s - r),
            occupancy_peak: diff_maps(&real.occupancy_peak, &sim.occupancy_peak, |s, r| s as i64 - r as i64),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.total_moves == 0
            && self.productive_moves == 0
            && self.unproductive_moves == 0
            && self.unproductive_ratio == 0.0
            && self.rehandles_mean == 0.0
            && self.rehandles_max == 0
            && self.mean_dwell_days == 0.0
            && self.mean_current_dwell_days == 0.0
            && self.crane_travel_total_m == 0.0
            && self.crane_travel_m.values().all(|&v| v == 0.0)
            && self.occupancy_peak.values().all(|&v| v == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiComparison {
    pub real: KpiReport,
    pub simulated: KpiReport,
    pub deltas: KpiDeltas,
}

impl KpiComparison {
    pub fn new(real: KpiReport, simulated: KpiReport) -> Self {
        let deltas = KpiDeltas::between(&real, &simulated);
        KpiComparison { real, simulated, deltas }
    }

    pub fn swapped(&self) -> Self {
        KpiComparison::new(self.simulated.clone(), self.real.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("comparison serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::parse_log_str;
    use crate::time::Timestamp;
    use crate::yard::BlockSpec;

    fn layout() -> Arc<YardLayout> {
        Arc::new(
            YardLayout::new(vec![BlockSpec {
                block_id: "A".into(),
                bay_count: 10,
                row_count: 4,
                max_tier: 4,
                bay_pitch_m: 6.5,
                row_pitch_m: 2.9,
            }])
            .unwrap(),
        )
    }

    fn ts(s: &str) -> Timestamp {
        time::parse(s).unwrap()
    }

    fn crane(seq: u64, slot: &str) -> YardEvent {
        YardEvent::new(seq, ts("2024-03-01T08:00:00Z"), EventKind::CranePos)
            .with_to(slot.parse().unwrap())
            .with_equipment("RTG-01")
    }

    #[test]
    fn classification() {
        let t = ts("2024-03-01T08:00:00Z");
        assert_eq!(classify_move(&YardEvent::new(0, t, EventKind::YardShift)), MoveClass::Unproductive);
        assert_eq!(classify_move(&YardEvent::new(0, t, EventKind::GateIn)), MoveClass::Productive);
        assert_eq!(classify_move(&YardEvent::new(0, t, EventKind::CranePos)), MoveClass::NonMove);
        assert_eq!(classify_move(&YardEvent::new(0, t, EventKind::VesselLoad)), MoveClass::Productive);
    }

    #[test]
    fn travel_examples() {
        let l = layout();
        let o = TravelOptions::default();
        let two = [crane(0, "A.05.3.1"), crane(1, "A.08.1.1")];
        assert_eq!(crane_travel(&two, "RTG-01", &l, o).unwrap(), 25.3);
        assert_eq!(crane_travel(&two[..1], "RTG-01", &l, o).unwrap(), 0.0);
        let back = [crane(0, "A.01.1.1"), crane(1, "A.04.1.1"), crane(2, "A.01.1.1")];
        assert_eq!(crane_travel(&back, "RTG-01", &l, o).unwrap(), 39.0);
        let cheb = TravelOptions { metric: CraneMetric::Chebyshev, inter_block_m: 0.0 };
        assert_eq!(crane_travel(&two, "RTG-01", &l, cheb).unwrap(), 19.5);
        let bad = [crane(0, "A.01.1.1"), crane(1, "Z.01.1.1")];
        assert_eq!(crane_travel(&bad, "RTG-01", &l, o).unwrap_err().seq, 1);
    }

    #[test]
    fn travel_uses_move_slots() {
        let t = ts("2024-03-01T08:00:00Z");
        let ev = [
            YardEvent::new(0, t, EventKind::YardShift)
                .with_container("C1")
                .with_from("A.05.3.1".parse().unwrap())
                .with_to("A.08.1.1".parse().unwrap())
                .with_equipment("RTG-01"),
            crane(1, "A.05.3.1"),
        ];
        assert_eq!(crane_travel(&ev, "RTG-01", &layout(), TravelOptions::default()).unwrap(), 50.6);
    }

    #[test]
    fn empty_window_is_zero() {
        let log = parse_log_str(r#"{"ts":"2024-03-01T08:00:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.1"}"#).unwrap();
        let w = TimeWindow::new(ts("2024-03-05T00:00:00Z"), ts("2024-03-06T00:00:00Z")).unwrap();
        let r = kpi_report(&log, &layout(), &w).unwrap();
        assert_eq!((r.total_moves, r.unproductive_moves, r.unproductive_ratio), (0, 0, 0.0));
        assert_eq!(r.crane_travel_m.total, 0.0);
        assert_eq!(r.occupancy_peak["A"], 1);
        assert_eq!(r.mean_current_dwell_days, 4.7);
    }

    #[test]
    fn unblocked_departures_have_no_rehandles() {
        let log = parse_log_str(concat!(
            r#"{"ts":"2024-03-01T00:00:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.1"}"#, "\n",
            r#"{"ts":"2024-03-01T00:00:00Z","kind":"GATE_IN","container":"C2","to":"A.01.2.1"}"#, "\n",
            r#"{"ts":"2024-03-02T12:00:00Z","kind":"GATE_OUT","container":"C1","from":"A.01.1.1"}"#, "\n",
            r#"{"ts":"2024-03-04T00:00:00Z","kind":"VESSEL_LOAD","container":"C2","from":"A.01.2.1"}"#,
        ))
        .unwrap();
        let w = TimeWindow::new(ts("2024-03-01T00:00:00Z"), ts("2024-03-05T00:00:00Z")).unwrap();
        let r = kpi_report(&log, &layout(), &w).unwrap();
        assert_eq!(r.rehandles_per_container.mean, 0.0);
        assert_eq!(r.rehandles_per_container.histogram, [HistogramBin { rehandles: 0, containers: 2 }]);
        assert_eq!(r.mean_dwell_days, 2.3);
        assert_eq!(r.productive_moves, 4);
        assert_eq!(r.occupancy_peak["A"], 2);
    }

    #[test]
    fn deltas_are_antisymmetric() {
        let log = parse_log_str(concat!(
            r#"{"ts":"2024-03-01T00:00:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.1","equipment":"R1"}"#, "\n",
            r#"{"ts":"2024-03-01T01:00:00Z","kind":"YARD_SHIFT","container":"C1","from":"A.01.1.1","to":"A.03.2.1","equipment":"R1"}"#,
        ))
        .unwrap();
        let l = layout();
        let w = TimeWindow::new(ts("2024-03-01T00:00:00Z"), ts("2024-03-02T00:00:00Z")).unwrap();
        let early = TimeWindow::new(ts("2024-03-01T00:00:00Z"), ts("2024-03-01T00:30:00Z")).unwrap();
        let a = kpi_report(&log, &l, &w).unwrap();
        let mut b = kpi_report(&log, &l, &early).unwrap();
        b.window = w;
        let cmp = KpiComparison::new(a, b);
        let sw = cmp.swapped();
        assert_eq!(cmp.deltas.unproductive_moves, -1);
        assert_eq!(sw.deltas.unproductive_moves, 1);
        assert_eq!(sw.deltas.crane_travel_total_m, -cmp.deltas.crane_travel_total_m);
        assert_eq!(sw.deltas.crane_travel_m["R1"], -cmp.deltas.crane_travel_m["R1"]);
        assert!(!cmp.deltas.is_zero());
    }

    #[test]
    fn histogram_csv() {
        let log = parse_log_str(r#"{"ts":"2024-03-01T00:00:00Z","kind":"GATE_IN","container":"C1","to":"A.01.1.1"}"#).unwrap();
        let w = TimeWindow::new(ts("2024-03-01T00:00:00Z"), ts("2024-03-02T00:00:00Z")).unwrap();
        let mut buf = Vec::new();
        kpi_report(&log, &layout(), &w).unwrap().write_histogram_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "rehandles,containers\n0,1\n");
    }
}
