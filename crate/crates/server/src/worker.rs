//! One live session. Commands are applied between sweeps, never during one,
//! so a session's trajectory depends only on its graph, configuration, seed
//! and the iterations at which commands arrived.

use std::sync::mpsc::{Receiver, TryRecvError};
use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;

use marll_core::corpus;
use marll_core::engine::Session;
use marll_core::eval::Algorithm;
use marll_core::graph::{parse_json_graph, Graph};
use marll_core::metrics;
use marll_core::params::Params;
use marll_core::rewards::RewardSpec;
use marll_core::Point;

use crate::protocol::{
    CreatePayload, CreatedPayload, DonePayload, ErrorCode, FramePayload, GraphSource, Kind, LiveMetrics, Message,
    MovePayload, NodePayload, ParamUpdate, ProtocolError, ResetPayload, SessionInfo, StepPayload,
};

/// Upper bound on one `control.step` batch.
pub const MAX_STEP_BATCH: u64 = 1_000_000;

pub struct Worker {
    id: String,
    graph: Arc<Graph>,
    session: Session,
    algorithm: Algorithm,
    params: Params,
    frame_every: u64,
    metrics: bool,
    interval_ms: u64,
    running: bool,
    pending: u64,
    closed: bool,
    seq: u64,
    last_frame: Option<u64>,
    request_seq: u64,
}

fn bad(code: ErrorCode, message: impl Into<String>) -> ProtocolError {
    ProtocolError::new(code, message)
}

fn core_error(code: ErrorCode) -> impl Fn(marll_core::Error) -> ProtocolError {
    move |e| bad(code, e.to_string())
}

impl Worker {
    /// Builds a session from a `session.create` payload.
    pub fn create(id: &str, payload: CreatePayload, max_nodes: usize) -> Result<Worker, ProtocolError> {
        let algorithm: Algorithm = payload.algorithm.parse().map_err(core_error(ErrorCode::BadPayload))?;
        let reward = algorithm
            .reward(&payload.params)
            .ok_or_else(|| bad(ErrorCode::BadPayload, format!("{algorithm} is not a MARL algorithm")))?;
        payload.params.validate().map_err(core_error(ErrorCode::OutOfRange))?;
        if payload.frame_every == 0 {
            return Err(bad(ErrorCode::OutOfRange, "frame_every must be at least 1"));
        }
        let (graph, given) = match &payload.graph {
            GraphSource::Id(name) => {
                let graph = corpus::builtin_with_limit(name, max_nodes)
                    .map_err(core_error(ErrorCode::OutOfRange))?
                    .ok_or_else(|| bad(ErrorCode::BadPayload, format!("unknown graph id {name:?}")))?;
                let n = graph.node_count();
                (graph, vec![None; n])
            }
            GraphSource::Document(doc) => {
                let doc = parse_json_graph(&doc.to_string()).map_err(core_error(ErrorCode::BadPayload))?;
                (doc.graph, doc.positions)
            }
        };
        if graph.node_count() > max_nodes {
            return Err(bad(ErrorCode::OutOfRange, format!("graph exceeds {max_nodes} nodes")));
        }
        let graph = Arc::new(graph);
        let session = Session::with_positions(graph.clone(), reward, payload.params.session(), payload.seed, &given)
            .map_err(core_error(ErrorCode::BadPayload))?;
        Ok(Worker {
            id: id.to_string(),
            graph,
            session,
            algorithm,
            params: payload.params,
            frame_every: payload.frame_every,
            metrics: payload.metrics,
            interval_ms: payload.interval_ms,
            running: !payload.paused,
            pending: 0,
            closed: false,
            seq: 0,
            last_frame: None,
            request_seq: 0,
        })
    }

    /// Sets the request `seq` echoed by `session.created`.
    pub fn answering(mut self, request_seq: u64) -> Self {
        self.request_seq = request_seq;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn frame_every(&self) -> u64 {
        self.frame_every
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    /// Whether the worker has sweeps to do without waiting for a command.
    pub fn is_busy(&self) -> bool {
        !self.closed && (self.running || self.pending > 0)
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Pause between sweeps while running freely.
    pub fn interval(&self) -> Option<Duration> {
        (self.running && self.interval_ms > 0).then(|| Duration::from_millis(self.interval_ms))
    }

    fn info(&self) -> SessionInfo {
        SessionInfo {
            algorithm: self.algorithm.id().to_string(),
            seed: self.session.seed(),
            params: self.params,
            reward: *self.session.reward(),
            frame_every: self.frame_every,
            paused: !self.running,
            metrics: self.metrics,
            interval_ms: self.interval_ms,
        }
    }

    fn message(&mut self, kind: Kind, payload: impl serde::Serialize) -> Message {
        self.seq += 1;
        Message::to_session(kind, &self.id, self.seq, payload)
    }

    fn error(&mut self, e: ProtocolError) -> Message {
        self.message(Kind::Error, e.payload())
    }

    /// `session.created` followed by the frame of the initial layout.
    pub fn start(&mut self) -> Vec<Message> {
        let created = CreatedPayload {
            request_seq: self.request_seq,
            config: self.info(),
            nodes: self.graph.node_count(),
            labels: self.graph.labels().to_vec(),
            edges: self.graph.edges().to_vec(),
        };
        let created = self.message(Kind::SessionCreated, created);
        vec![created, self.frame()]
    }

    pub fn frame(&mut self) -> Message {
        let snap = self.session.snapshot();
        let live = if self.metrics {
            metrics::report(self.session.layout(), &self.graph, &self.params.metrics)
                .ok()
                .map(|r| LiveMetrics { nc: r.nc, no: r.no, ne: r.ne, na: r.na })
        } else {
            None
        };
        let payload = FramePayload {
            t: snap.iteration,
            temperature: snap.temperature,
            positions: snap.positions,
            avg_displacement: snap.avg_displacement,
            displacement_rate: snap.displacement_rate,
            stress_ratio: snap.stress_ratio,
            energy: self.session.energy(),
            metrics: live,
            locked: snap.locked,
            running: self.running,
            epsilon: self.session.config().learn.epsilon,
            reward: *self.session.reward(),
        };
        self.last_frame = Some(snap.iteration);
        self.message(Kind::Frame, payload)
    }

    /// Applies one request addressed to this session.
    pub fn handle(&mut self, msg: &Message) -> Vec<Message> {
        match self.apply(msg) {
            Ok(out) => out,
            Err(e) => vec![self.error(e.with_seq(Some(msg.seq)))],
        }
    }

    fn apply(&mut self, msg: &Message) -> Result<Vec<Message>, ProtocolError> {
        fn payload<T: for<'de> serde::Deserialize<'de>>(msg: &Message) -> Result<T, ProtocolError> {
            let value = if msg.payload.is_null() { Value::Object(Default::default()) } else { msg.payload.clone() };
            serde_json::from_value(value).map_err(|e| bad(ErrorCode::BadPayload, format!("{}: {e}", msg.kind)))
        }
        let mut changed = true;
        match msg.kind {
            Kind::ControlPause => {
                self.running = false;
                self.pending = 0;
                changed = false;
            }
            Kind::ControlResume => {
                self.running = true;
                self.pending = 0;
                changed = false;
            }
            Kind::ControlStep => {
                let p: StepPayload = payload(msg)?;
                if !(1..=MAX_STEP_BATCH).contains(&p.count) {
                    return Err(bad(ErrorCode::OutOfRange, format!("step count must lie in 1..={MAX_STEP_BATCH}")));
                }
                self.running = false;
                self.pending = self.pending.saturating_add(p.count).min(MAX_STEP_BATCH);
                changed = false;
            }
            Kind::NodeLock => {
                let p: NodePayload = payload(msg)?;
                self.session.lock_node(p.node).map_err(core_error(ErrorCode::InvalidNode))?;
            }
            Kind::NodeUnlock => {
                let p: NodePayload = payload(msg)?;
                self.session.unlock_node(p.node).map_err(core_error(ErrorCode::InvalidNode))?;
            }
            Kind::NodeMove => {
                let p: MovePayload = payload(msg)?;
                if p.node >= self.graph.node_count() {
                    return Err(bad(ErrorCode::InvalidNode, format!("node index {} out of range", p.node)));
                }
                self.session
                    .set_position(p.node, Point::new(p.x, p.y))
                    .map_err(core_error(ErrorCode::OutOfRange))?;
                if p.lock {
                    self.session.lock_node(p.node).map_err(core_error(ErrorCode::InvalidNode))?;
                }
            }
            Kind::ParamSet => {
                let update: ParamUpdate = payload(msg)?;
                self.set_params(&update)?;
            }
            Kind::SessionReset => {
                let p: ResetPayload = payload(msg)?;
                self.reset(p)?;
            }
            Kind::SessionClose => {
                self.closed = true;
                self.running = false;
                self.pending = 0;
                return Ok(vec![self.message(Kind::SessionClosed, Value::Null)]);
            }
            other => {
                return Err(bad(ErrorCode::UnexpectedKind, format!("{other} is not a session command")));
            }
        }
        // While idle nobody else will report the change.
        Ok(if changed && !self.is_busy() { vec![self.frame()] } else { Vec::new() })
    }

    fn set_params(&mut self, update: &ParamUpdate) -> Result<(), ProtocolError> {
        let mut params = self.params;
        let mut frame_every = self.frame_every;
        for (name, value) in update {
            apply_param(&mut params, &mut frame_every, name, value)?;
        }
        params.validate().map_err(core_error(ErrorCode::OutOfRange))?;
        if frame_every == 0 {
            return Err(bad(ErrorCode::OutOfRange, "frame_every must be at least 1"));
        }
        let reward = self.algorithm.reward(&params).expect("sessions run MARL algorithms");
        // Validated above; these only fail on a bug.
        let fail = core_error(ErrorCode::OutOfRange);
        self.session.set_learn_config(params.learn).map_err(&fail)?;
        self.session.set_convergence(params.convergence).map_err(&fail)?;
        self.session.set_reward(reward).map_err(&fail)?;
        self.params = params;
        self.frame_every = frame_every;
        Ok(())
    }

    fn reset(&mut self, p: ResetPayload) -> Result<(), ProtocolError> {
        if !p.positions {
            self.session.reset_learning();
            return Ok(());
        }
        let locked = self.session.locked_nodes();
        let mut given = vec![None; self.graph.node_count()];
        for &v in &locked {
            given[v] = Some(self.session.positions()[v]);
        }
        let reward: RewardSpec = *self.session.reward();
        let mut fresh = Session::with_positions(
            self.graph.clone(),
            reward,
            *self.session.config(),
            self.session.seed(),
            &given,
        )
        .map_err(core_error(ErrorCode::BadPayload))?;
        for v in locked {
            fresh.lock_node(v).map_err(core_error(ErrorCode::InvalidNode))?;
        }
        self.session = fresh;
        Ok(())
    }

    /// Does at most one sweep of pending work and returns what to send.
    pub fn tick(&mut self) -> Vec<Message> {
        let mut out = Vec::new();
        if self.closed {
            return out;
        }
        if self.pending > 0 {
            self.pending -= 1;
            let t = self.session.step().iteration;
            if t % self.frame_every == 0 || self.pending == 0 {
                out.push(self.frame());
            }
        } else if self.running {
            if let Some(reason) = self.session.check_convergence() {
                self.running = false;
                let t = self.session.iteration();
                if self.last_frame != Some(t) {
                    out.push(self.frame());
                }
                out.push(self.message(Kind::SessionDone, DonePayload { t, reason }));
            } else {
                let t = self.session.step().iteration;
                if t % self.frame_every == 0 {
                    out.push(self.frame());
                }
            }
        }
        out
    }
}

fn number(name: &str, value: &Value) -> Result<f64, ProtocolError> {
    value
        .as_f64()
        .ok_or_else(|| bad(ErrorCode::BadPayload, format!("{name} must be a number")))
}

fn integer(name: &str, value: &Value) -> Result<u64, ProtocolError> {
    value
        .as_u64()
        .ok_or_else(|| bad(ErrorCode::OutOfRange, format!("{name} must be a non-negative integer")))
}

/// Parameter names accepted by `param.set`.
pub const PARAM_NAMES: &[&str] = &[
    "epsilon",
    "alpha",
    "gamma",
    "metropolis",
    "metropolis_scale",
    "omega",
    "omega1",
    "omega2",
    "omega3",
    "omega4",
    "omega5",
    "beta",
    "k",
    "lambda",
    "zeta",
    "mu",
    "p_hops",
    "stress_unit",
    "length",
    "radius",
    "metric_radius",
    "max_iterations",
    "avg_displacement",
    "displacement_rate",
    "stress_ratio",
    "frame_every",
];

/// Sets one named parameter. Ranges are checked afterwards, on the whole
/// update, so that e.g. the five weights can move together.
pub fn apply_param(params: &mut Params, frame_every: &mut u64, name: &str, value: &Value) -> Result<(), ProtocolError> {
    match name {
        "epsilon" => params.learn.epsilon = number(name, value)?,
        "alpha" => params.learn.alpha = number(name, value)?,
        "gamma" => params.learn.gamma = number(name, value)?,
        "metropolis_scale" => params.learn.metropolis_scale = number(name, value)?,
        "metropolis" => {
            params.learn.metropolis = value
                .as_bool()
                .ok_or_else(|| bad(ErrorCode::BadPayload, "metropolis must be a boolean"))?
        }
        "omega" => {
            params.omega = serde_json::from_value(value.clone())
                .map_err(|_| bad(ErrorCode::BadPayload, "omega must be an array of five numbers"))?
        }
        "omega1" | "omega2" | "omega3" | "omega4" | "omega5" => {
            let i = (name.as_bytes()[5] - b'1') as usize;
            params.omega[i] = number(name, value)?;
        }
        "beta" => params.beta = number(name, value)?,
        "k" => params.k = number(name, value)?,
        "lambda" => params.lambda = number(name, value)?,
        "zeta" => params.zeta = number(name, value)?,
        "mu" => params.mu = number(name, value)?,
        "p_hops" => {
            params.p_hops = u32::try_from(integer(name, value)?)
                .map_err(|_| bad(ErrorCode::OutOfRange, "p_hops is too large"))?
        }
        "stress_unit" => params.stress_unit = number(name, value)?,
        "length" => params.length = number(name, value)?,
        "radius" => params.radius = number(name, value)?,
        "metric_radius" => params.metrics.radius = number(name, value)?,
        "max_iterations" => params.convergence.max_iterations = integer(name, value)?,
        "avg_displacement" => params.convergence.avg_displacement = number(name, value)?,
        "displacement_rate" => params.convergence.displacement_rate = number(name, value)?,
        "stress_ratio" => params.convergence.stress_ratio = number(name, value)?,
        "frame_every" => *frame_every = integer(name, value)?,
        _ => return Err(bad(ErrorCode::InvalidParameter, format!("unknown parameter {name:?}"))),
    }
    Ok(())
}

/// Runs a worker until it is closed, its command channel disconnects, or
/// `emit` reports that nobody is listening. Runs on its own thread.
pub fn drive(mut worker: Worker, commands: Receiver<Message>, mut emit: impl FnMut(Message) -> bool) {
    for m in worker.start() {
        if !emit(m) {
            return;
        }
    }
    loop {
        if worker.is_busy() {
            loop {
                match commands.try_recv() {
                    Ok(cmd) => {
                        for m in worker.handle(&cmd) {
                            if !emit(m) {
                                return;
                            }
                        }
                    }
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => return,
                }
            }
        } else {
            match commands.recv() {
                Ok(cmd) => {
                    for m in worker.handle(&cmd) {
                        if !emit(m) {
                            return;
                        }
                    }
                }
                Err(_) => return,
            }
        }
        if worker.is_closed() {
            return;
        }
        for m in worker.tick() {
            if !emit(m) {
                return;
            }
        }
        if let Some(pause) = worker.interval() {
            std::thread::sleep(pause);
        }
    }
}
