//! Mirror replay and counterfactual simulation.
//!
//! Mirror mode folds the real log into yard states. Counterfactual mode keeps
//! the log's demand (who arrives and leaves, and when) but lets a strategy
//! choose every placement and dig out blockers itself, emitting synthetic
//! `YARD_SHIFT` events for each relocation.

use crate::events::{EventKind, EventLog, TimeWindow, YardEvent};
use crate::kpi::{self, KpiComparison};
use crate::strategy::{PlacementContext, StrategyError, StrategySpec};
use crate::time::{self, Timestamp};
use crate::yard::{ContainerRecord, SlotAddress, YardError, YardLayout, YardState};
use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

/// Why a single event could not be applied.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventFault {
    #[error(transparent)]
    Yard(#[from] YardError),
    #[error("slot {slot} holds {found:?}, event names {expected}")]
    ContainerMismatch {
        slot: SlotAddress,
        expected: String,
        found: Option<String>,
    },
    #[error("event at {at} precedes yard clock {clock}")]
    ClockRegression { at: String, clock: String },
    #[error("event is missing {0}")]
    MissingField(&'static str),
}

impl EventFault {
    pub fn code(&self) -> &'static str {
        match self {
            EventFault::Yard(y) => y.code(),
            EventFault::ContainerMismatch { .. } => "ContainerMismatch",
            EventFault::ClockRegression { .. } => "ClockRegression",
            EventFault::MissingField(_) => "MissingField",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("event {seq}: {fault}")]
pub struct ApplyError {
    pub seq: u64,
    pub fault: EventFault,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("replay halted at event {seq}: {cause}")]
    ReplayHalted { seq: u64, cause: EventFault },
    #[error("event {seq}: no feasible slot for {container}")]
    NoFeasibleSlot { seq: u64, container: String },
    #[error(transparent)]
    InvalidStrategy(StrategyError),
    #[error(transparent)]
    BadWindow(#[from] crate::events::BadWindow),
    #[error("simulated log covers a different window")]
    WindowMismatch,
    #[error("no events cover {at}")]
    NoDataAtTime { at: String },
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::ReplayHalted { .. } => "ReplayHalted",
            EngineError::NoFeasibleSlot { .. } => "NoFeasibleSlot",
            EngineError::InvalidStrategy(_) => "InvalidStrategy",
            EngineError::BadWindow(_) => "BadWindow",
            EngineError::WindowMismatch => "WindowMismatch",
            EngineError::NoDataAtTime { .. } => "NoDataAtTime",
        }
    }

    pub fn seq(&self) -> Option<u64> {
        match self {
            EngineError::ReplayHalted { seq, .. } | EngineError::NoFeasibleSlot { seq, .. } => Some(*seq),
            _ => None,
        }
    }
}

impl From<ApplyError> for EngineError {
    fn from(e: ApplyError) -> Self {
        EngineError::ReplayHalted {
            seq: e.seq,
            cause: e.fault,
        }
    }
}

fn record_from_arrival(event: &YardEvent, id: &str) -> ContainerRecord {
    let mut rec = ContainerRecord::new(id, event.timestamp);
    rec.iso_type = event.attr_str("iso_type").unwrap_or_default().to_owned();
    rec.origin_port = event.attr_str("origin_port").map(str::to_owned);
    rec.destination_port = event.attr_str("destination_port").map(str::to_owned);
    rec.departure_booked = event.departure_booked();
    rec.planned_departure = event.planned_departure();
    rec
}

fn take_checked(
    state: &mut YardState,
    slot: &SlotAddress,
    id: &str,
) -> Result<ContainerRecord, EventFault> {
    match state.container_at(slot) {
        Some(found) if found == id => Ok(state.remove(slot)?),
        Some(found) => Err(EventFault::ContainerMismatch {
            slot: slot.clone(),
            expected: id.to_owned(),
            found: Some(found.to_owned()),
        }),
        // let the yard report range or emptiness
        None => Err(state.remove(slot).map(|_| ()).unwrap_err().into()),
    }
}

/// Applies one event. Returns the record of a departing container.
pub fn apply_event(state: &mut YardState, event: &YardEvent) -> Result<Option<ContainerRecord>, ApplyError> {
    apply_inner(state, event).map_err(|fault| ApplyError {
        seq: event.seq,
        fault,
    })
}

fn apply_inner(state: &mut YardState, event: &YardEvent) -> Result<Option<ContainerRecord>, EventFault> {
    if event.timestamp < state.clock() {
        return Err(EventFault::ClockRegression {
            at: time::format(&event.timestamp),
            clock: time::format(&state.clock()),
        });
    }
    let id = event.container_id.as_deref();
    let need_id = || id.ok_or(EventFault::MissingField("container"));
    let need_from = || event.from_slot.as_ref().ok_or(EventFault::MissingField("from"));
    let need_to = || event.to_slot.as_ref().ok_or(EventFault::MissingField("to"));

    let departed = match event.kind {
        EventKind::GateIn | EventKind::VesselDischarge => {
            let id = need_id()?;
            state.place(record_from_arrival(event, id), need_to()?.clone())?;
            None
        }
        EventKind::GateOut | EventKind::VesselLoad => {
            let id = need_id()?;
            let mut rec = take_checked(state, need_from()?, id)?;
            rec.planned_departure.get_or_insert(event.timestamp);
            Some(rec)
        }
        EventKind::YardShift => {
            let id = need_id()?;
            let from = need_from()?;
            let to = need_to()?;
            match state.container_at(from).map(str::to_owned) {
                Some(found) if found == id => state.relocate(from, to.clone())?,
                Some(found) => {
                    return Err(EventFault::ContainerMismatch {
                        slot: from.clone(),
                        expected: id.to_owned(),
                        found: Some(found),
                    })
                }
                // let the yard report range or emptiness
                None => return Err(state.remove(from).map(|_| ()).unwrap_err().into()),
            }
            None
        }
        EventKind::CranePos => {
            let to = need_to()?;
            if !state.layout().contains(to) {
                return Err(YardError::AddressOutOfRange(to.to_string()).into());
            }
            None
        }
    };

    if let Some(eq) = event.equipment_id.as_deref() {
        let pos = match event.kind {
            EventKind::GateOut | EventKind::VesselLoad => event.from_slot.clone(),
            _ => event.to_slot.clone(),
        };
        if let Some(pos) = pos {
            state.set_equipment_position(eq, pos);
        }
    }
    state.advance_clock(event.timestamp);
    Ok(departed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepKind {
    #[default]
    Event,
    Hour,
    Day,
}

impl StepKind {
    fn length(self) -> Option<Duration> {
        match self {
            StepKind::Event => None,
            StepKind::Hour => Some(Duration::hours(1)),
            StepKind::Day => Some(Duration::days(1)),
        }
    }
}

impl std::str::FromStr for StepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EVENT" => Ok(StepKind::Event),
            "HOUR" => Ok(StepKind::Hour),
            "DAY" => Ok(StepKind::Day),
            _ => Err(format!("unknown step {s:?}; expected EVENT, HOUR or DAY")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayFrame {
    pub boundary: Timestamp,
    pub state: YardState,
}

fn initial_clock(log: &EventLog, floor: Timestamp) -> Timestamp {
    log.first_time().map_or(floor, |t| t.min(floor))
}

/// Yard state after every event at or before `at`, with the clock at `at`.
pub fn replay_to(log: &EventLog, layout: &Arc<YardLayout>, at: Timestamp) -> Result<YardState, EngineError> {
    let mut state = YardState::new(layout.clone(), initial_clock(log, at));
    for e in log.events().iter().take_while(|e| e.timestamp <= at) {
        apply_event(&mut state, e)?;
    }
    state.advance_clock(at);
    Ok(state)
}

/// Mirror state at `at`, refusing times past the end of the log.
///
/// A time before the first event yields the empty yard.
pub fn state_at(log: &EventLog, layout: &Arc<YardLayout>, at: Timestamp) -> Result<YardState, EngineError> {
    match log.last_time() {
        Some(last) if at <= last => replay_to(log, layout, at),
        _ => Err(EngineError::NoDataAtTime { at: time::format(&at) }),
    }
}

/// Replays `log` and emits a state at every step boundary inside `window`.
///
/// Events before the window are applied first (warm start). With
/// [`StepKind::Event`] there is one frame per in-window event, or a single
/// frame at `window.from` when the window holds none. Hour and day steps emit
/// frames at `from + n·step` and a final frame at `window.to`.
pub fn replay(
    log: &EventLog,
    layout: &Arc<YardLayout>,
    window: &TimeWindow,
    step: StepKind,
) -> Result<Vec<ReplayFrame>, EngineError> {
    let mut state = YardState::new(layout.clone(), initial_clock(log, window.from));
    let events = log.events();
    let mut i = 0;
    while i < events.len() && events[i].timestamp < window.from {
        apply_event(&mut state, &events[i])?;
        i += 1;
    }
    state.advance_clock(window.from);

    let mut frames = Vec::new();
    match step.length() {
        None => {
            while i < events.len() && events[i].timestamp <= window.to {
                apply_event(&mut state, &events[i])?;
                frames.push(ReplayFrame {
                    boundary: events[i].timestamp,
                    state: state.clone(),
                });
                i += 1;
            }
            if frames.is_empty() {
                frames.push(ReplayFrame {
                    boundary: window.from,
                    state,
                });
            }
        }
        Some(len) => {
            let mut boundary = window.from;
            loop {
                boundary = (boundary + len).min(window.to);
                while i < events.len() && events[i].timestamp <= boundary {
                    apply_event(&mut state, &events[i])?;
                    i += 1;
                }
                state.advance_clock(boundary);
                frames.push(ReplayFrame {
                    boundary,
                    state: state.clone(),
                });
                if boundary >= window.to {
                    break;
                }
            }
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJob {
    pub job_id: String,
    #[serde(flatten)]
    pub window: TimeWindow,
    pub step: StepKind,
    pub strategy: StrategySpec,
    pub seed: u64,
    pub status: JobStatus,
}

impl SimulationJob {
    /// Validates the window and the strategy parameters up front.
    pub fn new(
        job_id: impl Into<String>,
        from: Timestamp,
        to: Timestamp,
        step: StepKind,
        strategy: StrategySpec,
        seed: u64,
    ) -> Result<Self, EngineError> {
        let window = TimeWindow::new(from, to)?;
        strategy.build().map_err(EngineError::InvalidStrategy)?;
        Ok(SimulationJob {
            job_id: job_id.into(),
            window,
            step,
            strategy,
            seed,
            status: JobStatus::Pending,
        })
    }
}

/// Output of a counterfactual run: the real events before the window
/// followed by the simulated window.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedLog {
    pub window: TimeWindow,
    pub strategy: StrategySpec,
    pub seed: u64,
    pub events: EventLog,
}

impl SimulatedLog {
    pub fn synthetic_shifts(&self) -> usize {
        self.events.events().iter().filter(|e| e.synthetic).count()
    }

    pub fn to_jsonl(&self) -> String {
        self.events.to_jsonl()
    }
}

/// Departure time of each arrival (keyed by arrival seq), from the log.
fn departure_times(log: &EventLog) -> HashMap<u64, Timestamp> {
    let mut open: HashMap<&str, u64> = HashMap::new();
    let mut out = HashMap::new();
    for e in log.events() {
        let Some(id) = e.container_id.as_deref() else { continue };
        if e.kind.is_arrival() {
            open.insert(id, e.seq);
        } else if e.kind.is_departure() {
            if let Some(arrival) = open.remove(id) {
                out.insert(arrival, e.timestamp);
            }
        }
    }
    out
}

/// Re-runs the window's demand under `job.strategy`.
///
/// Containers in the yard at `window.from` start at their logged slots.
/// Logged shifts and crane positions inside the window are dropped unless the
/// strategy replays the log; every relocation the strategy needs is emitted as
/// a synthetic `YARD_SHIFT` just before the departure it unblocks.
pub fn counterfactual_run(
    log: &EventLog,
    layout: &Arc<YardLayout>,
    job: &SimulationJob,
) -> Result<SimulatedLog, EngineError> {
    let strategy = job.strategy.build().map_err(EngineError::InvalidStrategy)?;
    let window = job.window;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let mut state = YardState::new(layout.clone(), initial_clock(log, window.from));
    let mut out: Vec<YardEvent> = Vec::new();

    let events = log.events();
    let mut i = 0;
    while i < events.len() && events[i].timestamp < window.from {
        apply_event(&mut state, &events[i])?;
        out.push(events[i].clone());
        i += 1;
    }
    state.advance_clock(window.from);

    let in_window = events[i..].iter().take_while(|e| e.timestamp <= window.to);

    if strategy.replays_log() {
        for e in in_window {
            apply_event(&mut state, e)?;
            out.push(e.clone());
        }
    } else {
        let departures = departure_times(log);
        for e in in_window {
            match e.kind {
                EventKind::GateIn | EventKind::VesselDischarge => {
                    let id = e.container_id.as_deref().ok_or(EngineError::ReplayHalted {
                        seq: e.seq,
                        cause: EventFault::MissingField("container"),
                    })?;
                    let mut rec = record_from_arrival(e, id);
                    if rec.departure_booked && rec.planned_departure.is_none() {
                        rec.planned_departure = departures.get(&e.seq).copied();
                    }
                    let crane = e.equipment_id.as_deref().and_then(|q| state.equipment_position(q)).cloned();
                    let ctx = PlacementContext {
                        preferred_block: e.to_slot.as_ref().map(|s| s.block_id.as_str()),
                        crane_position: crane.as_ref(),
                    };
                    let slot = strategy
                        .choose_placement(&state, &rec, &ctx, &mut rng)
                        .map_err(|_| EngineError::NoFeasibleSlot {
                            seq: e.seq,
                            container: id.to_owned(),
                        })?;
                    let mut placed = e.clone();
                    placed.to_slot = Some(slot);
                    apply_event(&mut state, &placed)?;
                    if let Some(t) = rec.planned_departure {
                        let _ = state.set_planned_departure(id, t);
                    }
                    out.push(placed);
                }
                EventKind::GateOut | EventKind::VesselLoad => {
                    let halted = |fault: EventFault| EngineError::ReplayHalted { seq: e.seq, cause: fault };
                    let id = e.container_id.as_deref().ok_or_else(|| halted(EventFault::MissingField("container")))?;
                    let target = state
                        .container(id)
                        .and_then(|r| r.current_slot.clone())
                        .ok_or_else(|| halted(YardError::UnknownContainer(id.to_owned()).into()))?;
                    let forbidden = target.stack();
                    for blocker_id in state.blockers(id).map_err(|y| halted(y.into()))? {
                        let blocker = state.container(&blocker_id).expect("blocker in yard").clone();
                        let from = blocker.current_slot.clone().expect("blocker in yard");
                        let crane = e.equipment_id.as_deref().and_then(|q| state.equipment_position(q)).cloned();
                        let ctx = PlacementContext {
                            preferred_block: Some(&from.block_id),
                            crane_position: crane.as_ref(),
                        };
                        let to = strategy
                            .choose_relocation(&state, &blocker, &forbidden, &ctx, &mut rng)
                            .map_err(|_| EngineError::NoFeasibleSlot {
                                seq: e.seq,
                                container: blocker_id.clone(),
                            })?;
                        let mut shift = YardEvent::new(e.seq, e.timestamp, EventKind::YardShift)
                            .with_container(blocker_id)
                            .with_from(from)
                            .with_to(to);
                        shift.equipment_id = e.equipment_id.clone();
                        shift.synthetic = true;
                        apply_event(&mut state, &shift)?;
                        out.push(shift);
                    }
                    let mut departure = e.clone();
                    departure.from_slot = Some(target);
                    apply_event(&mut state, &departure)?;
                    out.push(departure);
                }
                EventKind::YardShift | EventKind::CranePos => {}
            }
        }
    }

    Ok(SimulatedLog {
        window,
        strategy: job.strategy.clone(),
        seed: job.seed,
        events: EventLog::from_ordered(out),
    })
}

/// KPI reports for the real and simulated logs over the same window.
pub fn compare_runs(
    real: &EventLog,
    simulated: &SimulatedLog,
    layout: &Arc<YardLayout>,
    window: &TimeWindow,
) -> Result<KpiComparison, EngineError> {
    if simulated.window != *window {
        return Err(EngineError::WindowMismatch);
    }
    let real = kpi::kpi_report(real, layout, window)?;
    let sim = kpi::kpi_report(&simulated.events, layout, window)?;
    Ok(KpiComparison::new(real, sim))
}

/// Runs a job end to end and returns its comparison against the real log.
pub fn run_job(log: &EventLog, layout: &Arc<YardLayout>, job: &SimulationJob) -> Result<KpiComparison, EngineError> {
    let sim = counterfactual_run(log, layout, job)?;
    compare_runs(log, &sim, layout, &job.window)
}
