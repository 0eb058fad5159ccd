//! Event loop for one mobile unit.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Poisson};

use crate::analytic::Scheme;
use crate::params::SystemParameters;
use crate::protocol::{
    Cause, HandoverMode, MessageKind, MuId, Network, NodeId, Prefix, TargetType, Trace, ZoneId,
};

use super::queue::{to_secs, to_time, EventQueue, SimTime};
use super::report::{HandoverRecord, TrafficCounters};
use super::topology::MixZoneTopology;
use super::trajectory::Motion;
use super::{SimConfig, SimError};

#[derive(Debug, Clone, Copy)]
enum Event {
    Sample,
    Trigger(ZoneId),
    LinkDown(u64),
    Attached(u64),
    Deliver { ho: u64, idx: usize },
    Expire(Prefix),
}

#[derive(Debug)]
struct Handover {
    from: ZoneId,
    to: ZoneId,
    mode: HandoverMode,
    t0: SimTime,
    t_down: Option<SimTime>,
    detach: Option<SimTime>,
    hack_at_source: Option<SimTime>,
    attach: Option<SimTime>,
    active: usize,
    trace: Trace,
    sent: Vec<Option<SimTime>>,
    /// Messages below this index belong to an abandoned attempt.
    dead_below: usize,
    outstanding: usize,
    done: bool,
    control_messages: u32,
    control_bytes: f64,
    signaling_load: f64,
    hack_before_link_down: Option<bool>,
    wireless_during_outage: bool,
}

/// Output of one vehicle's run.
pub(crate) struct MuRun {
    pub records: Vec<HandoverRecord>,
    pub traffic: TrafficCounters,
    pub trace: Vec<String>,
}

struct MuSim<'a> {
    p: &'a SystemParameters,
    topo: &'a MixZoneTopology,
    scheme: Scheme,
    mu: MuId,
    end: SimTime,
    sample_every: SimTime,
    net: Network,
    queue: EventQueue<Event>,
    motion: Motion,
    rng: ChaCha8Rng,
    serving: ZoneId,
    current: Option<u64>,
    trigger_pending: bool,
    handovers: BTreeMap<u64, Handover>,
    next_id: u64,
    traffic: TrafficCounters,
    traffic_mark: f64,
    records: Vec<HandoverRecord>,
    trace: Option<Vec<String>>,
}

pub(crate) fn simulate_mu(
    p: &SystemParameters,
    topo: &MixZoneTopology,
    cfg: &SimConfig,
    index: u32,
) -> Result<MuRun, SimError> {
    let mut mob_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mob_rng.set_stream(2 * index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2 * index as u64 + 1);
    let mut motion = Motion::new(p, mob_rng)?;
    let mu = index as MuId + 1;
    let serving = topo.nearest(motion.at(0.0));
    let mut net = Network::new(topo.ids(), cfg.pool_capacity);
    net.add_mu(mu, 0x0200_0000_0000 + mu);
    net.initial_attach(mu, serving, 0.0)?;

    let mut sim = MuSim {
        p,
        topo,
        scheme: cfg.scheme,
        mu,
        end: to_time(cfg.duration),
        sample_every: to_time(cfg.sample_interval).max(1),
        net,
        queue: EventQueue::new(),
        motion,
        rng,
        serving,
        current: None,
        trigger_pending: false,
        handovers: BTreeMap::new(),
        next_id: 0,
        traffic: TrafficCounters::default(),
        traffic_mark: 0.0,
        records: Vec::new(),
        trace: cfg.trace.then(Vec::new),
    };
    if p.mean_speed > 0.0 {
        sim.queue.schedule(0, Event::Sample);
    }
    sim.run()?;
    Ok(MuRun {
        records: sim.records,
        traffic: sim.traffic,
        trace: sim.trace.unwrap_or_default(),
    })
}

impl MuSim<'_> {
    fn run(&mut self) -> Result<(), SimError> {
        while let Some(t) = self.queue.peek_time() {
            if t > self.end {
                break;
            }
            let (now, ev) = self.queue.pop().unwrap();
            match ev {
                Event::Sample => self.on_sample(now),
                Event::Trigger(target) => self.on_trigger(now, target)?,
                Event::LinkDown(ho) => self.on_link_down(now, ho)?,
                Event::Attached(ho) => self.on_attached(now, ho)?,
                Event::Deliver { ho, idx } => self.on_deliver(now, ho, idx),
                Event::Expire(prefix) => self.on_expire(now, prefix)?,
            }
        }
        let end = to_secs(self.end);
        if let Some(ho) = self.current {
            let rate = self.rate(self.handovers[&ho].active);
            let n = self.poisson(rate * (end - self.traffic_mark));
            self.traffic.generated += n;
            self.traffic.in_flight += n;
            self.traffic_mark = end;
        } else {
            self.flush(end);
        }
        Ok(())
    }

    fn log(
        &mut self,
        now: SimTime,
        node: NodeId,
        event: &str,
        kind: &str,
        flags: &str,
        bytes: f64,
    ) {
        if let Some(t) = self.trace.as_mut() {
            t.push(format!(
                "{:.9}\t{node}\t{event}\t{kind}\t{flags}\t{bytes}",
                to_secs(now)
            ));
        }
    }

    fn log_state(&mut self, now: SimTime, event: &str) {
        self.log(now, NodeId::Mu(self.mu), event, "-", "-", 0.0);
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        if mean > 0.0 {
            Poisson::new(mean).unwrap().sample(&mut self.rng) as u64
        } else {
            0
        }
    }

    fn rate(&self, active: usize) -> f64 {
        self.p.session_packet_rate * active as f64
    }

    fn active_prefixes(&self) -> usize {
        self.net.mu(self.mu).map_or(1, |m| m.addresses().len())
    }

    /// Everything generated up to `t` outside a handover reaches the MU.
    fn flush(&mut self, t: f64) {
        if t <= self.traffic_mark {
            return;
        }
        let n = self.poisson(self.rate(self.active_prefixes()) * (t - self.traffic_mark));
        self.traffic.generated += n;
        self.traffic.delivered += n;
        self.traffic_mark = t;
    }

    fn rss(&mut self, z: ZoneId, t: f64) -> f64 {
        let pos = self.motion.at(t);
        self.topo.rss_from(self.p, z, pos)
    }

    /// Handover condition at `t`, with the strongest zone.
    fn condition(&mut self, t: f64) -> (bool, ZoneId) {
        let pos = self.motion.at(t);
        let best = self.topo.nearest(pos);
        if best == self.serving {
            return (false, best);
        }
        let rs = self.topo.rss_from(self.p, self.serving, pos);
        let rb = self.topo.rss_from(self.p, best, pos);
        (rs < self.p.rss_handover_threshold && rb > rs, best)
    }

    fn on_sample(&mut self, now: SimTime) {
        if self.current.is_some() || self.trigger_pending {
            return;
        }
        let t = to_secs(now);
        self.motion.forget_before(t);
        let (hit, target) = self.condition(t);
        if hit {
            self.trigger_pending = true;
            self.queue.schedule(now, Event::Trigger(target));
            return;
        }
        let next = now + self.sample_every;
        let tn = to_secs(next);
        let (hit, target) = self.condition(tn);
        if !hit {
            self.queue.schedule(next, Event::Sample);
            return;
        }
        // interpolate both conditions linearly between the two samples
        let serving = self.serving;
        let g0 = self.rss(target, t) - self.rss(serving, t);
        let g1 = self.rss(target, tn) - self.rss(serving, tn);
        let h0 = self.p.rss_handover_threshold - self.rss(serving, t);
        let h1 = self.p.rss_handover_threshold - self.rss(serving, tn);
        let cross = |a: f64, b: f64| if a > 0.0 { 0.0 } else { -a / (b - a) };
        let f = cross(g0, g1).max(cross(h0, h1)).clamp(0.0, 1.0);
        self.trigger_pending = true;
        self.queue
            .schedule(now + to_time(f * (tn - t)), Event::Trigger(target));
    }

    fn on_trigger(&mut self, now: SimTime, target: ZoneId) -> Result<(), SimError> {
        self.trigger_pending = false;
        if target == self.serving || self.current.is_some() {
            self.queue.schedule(now, Event::Sample);
            return Ok(());
        }
        let t0 = to_secs(now);
        self.flush(t0);
        let id = self.next_id;
        self.next_id += 1;
        let mut ho = Handover {
            from: self.serving,
            to: target,
            mode: HandoverMode::Ddmm,
            t0: now,
            t_down: None,
            detach: None,
            hack_at_source: None,
            attach: None,
            active: self.active_prefixes(),
            trace: Trace::new(),
            sent: Vec::new(),
            dead_below: 0,
            outstanding: 0,
            done: false,
            control_messages: 0,
            control_bytes: 0.0,
            signaling_load: 0.0,
            hack_before_link_down: None,
            wireless_during_outage: false,
        };
        self.log_state(now, "trigger");
        let mut start = false;
        match self.scheme {
            Scheme::Ddmm => {}
            Scheme::ReFdmm => ho.mode = HandoverMode::Reactive,
            Scheme::PreFdmm => {
                let audible = self.rss(ho.from, t0) >= self.p.rss_min;
                if audible {
                    let out = self.net.begin_predictive(self.mu, target, t0, 0)?;
                    ho.mode = HandoverMode::Predictive;
                    ho.sent = vec![None; out.trace.len()];
                    ho.trace = out.trace;
                    start = true;
                } else {
                    ho.mode = HandoverMode::Reactive;
                }
            }
        }
        self.handovers.insert(id, ho);
        self.current = Some(id);
        if start {
            self.start(id, Cause::Start, 0, now);
        }
        self.queue
            .schedule(now + to_time(self.p.phi), Event::LinkDown(id));
        Ok(())
    }

    fn attach_time(&self) -> SimTime {
        to_time(self.p.l2_latency + self.p.auth_latency)
    }

    fn on_link_down(&mut self, now: SimTime, id: u64) -> Result<(), SimError> {
        let attach = self.attach_time();
        let ho = self.handovers.get_mut(&id).unwrap();
        ho.t_down = Some(now);
        self.log_state(now, "link_down");
        let ho = self.handovers.get_mut(&id).unwrap();
        if ho.mode == HandoverMode::Predictive {
            ho.hack_before_link_down = Some(ho.hack_at_source.is_some());
        }
        if ho.detach.is_some() {
            return Ok(());
        }
        ho.detach = Some(now);
        match ho.mode {
            HandoverMode::Predictive if ho.hack_at_source.is_none() => {
                ho.dead_below = ho.trace.len();
                ho.mode = HandoverMode::Reactive;
                self.net.abort_predictive(self.mu)?;
                self.queue.schedule(now + attach, Event::Attached(id));
            }
            HandoverMode::Predictive => {}
            _ => self.queue.schedule(now + attach, Event::Attached(id)),
        }
        Ok(())
    }

    fn on_attached(&mut self, now: SimTime, id: u64) -> Result<(), SimError> {
        self.log_state(now, "attach");
        let t = to_secs(now);
        let (mode, to) = {
            let ho = self.handovers.get_mut(&id).unwrap();
            ho.attach = Some(now);
            (ho.mode, ho.to)
        };
        let (more, mode) = match mode {
            HandoverMode::Ddmm => (self.net.ddmm_handover(self.mu, to, t)?.trace, mode),
            HandoverMode::Reactive => {
                let out = self.net.reactive_handover(self.mu, to, t)?;
                (out.trace, out.mode)
            }
            HandoverMode::Predictive => (self.net.complete_predictive(self.mu, t)?, mode),
            m => unreachable!("handover mode {m:?} is never scheduled"),
        };
        let ho = self.handovers.get_mut(&id).unwrap();
        ho.mode = mode;
        let base = ho.trace.len();
        ho.trace.append(more);
        ho.sent.resize(ho.trace.len(), None);
        self.start(id, Cause::Attach, base, now);
        if mode == HandoverMode::Predictive {
            self.complete(id, now);
        }
        Ok(())
    }

    fn start(&mut self, id: u64, cause: Cause, from: usize, now: SimTime) {
        let idxs: Vec<_> = self.handovers[&id].trace.events[from..]
            .iter()
            .enumerate()
            .filter(|(_, e)| e.cause == cause)
            .map(|(i, _)| from + i)
            .collect();
        for i in idxs {
            self.send(id, i, now);
        }
    }

    fn hops(&self, a: NodeId, b: NodeId) -> u32 {
        match (a, b) {
            (NodeId::Mu(_), _) | (_, NodeId::Mu(_)) => self.topo.hops_mu_mz,
            (NodeId::Lbs, NodeId::Zone(z)) | (NodeId::Zone(z), NodeId::Lbs) => {
                self.topo.hops_to_lbs(z)
            }
            (NodeId::Zone(x), NodeId::Zone(y)) => self.topo.hops_between(x, y),
            (NodeId::Lbs, NodeId::Lbs) => 0,
        }
    }

    fn wired(&self, size: f64, hops: u32) -> f64 {
        (8.0 * size / self.p.wired_bandwidth + self.p.wired_prop_delay) * hops as f64
    }

    /// Wireless transfer, each hop retried until it gets through.
    fn wireless(&mut self, size: f64) -> f64 {
        let per_try = 8.0 * size / self.p.wireless_bandwidth + self.p.wireless_prop_delay;
        let pf = self.p.wireless_fail_prob;
        let mut total = 0.0;
        for _ in 0..self.topo.hops_mu_mz {
            let retries = if pf > 0.0 {
                Geometric::new(1.0 - pf).unwrap().sample(&mut self.rng)
            } else {
                0
            };
            total += per_try * (retries + 1) as f64;
        }
        total
    }

    fn processing(&self, to: NodeId, kind: MessageKind) -> f64 {
        match (to, kind) {
            (NodeId::Lbs, MessageKind::Pbu) => self.p.proc_time_lbs,
            (
                NodeId::Zone(_),
                MessageKind::Rs | MessageKind::Pba | MessageKind::Hi | MessageKind::Pbu,
            ) => self.p.proc_time_mz,
            _ => 0.0,
        }
    }

    fn send(&mut self, id: u64, idx: usize, at: SimTime) {
        let (from, to, kind, flags) = {
            let e = &self.handovers[&id].trace.events[idx];
            (e.from, e.to, e.msg.kind, e.msg.flag_label())
        };
        let size = self.p.control_packet_size;
        let hops = self.hops(from, to);
        let delay = if matches!(from, NodeId::Mu(_)) || matches!(to, NodeId::Mu(_)) {
            self.wireless(size)
        } else {
            self.wired(size, hops)
        };
        let ho = self.handovers.get_mut(&id).unwrap();
        ho.sent[idx] = Some(at);
        ho.outstanding += 1;
        ho.control_messages += 1;
        ho.control_bytes += size;
        ho.signaling_load += size * hops as f64;
        self.queue
            .schedule(at + to_time(delay), Event::Deliver { ho: id, idx });
        self.log(at, from, "send", kind.as_str(), &flags, size);
    }

    fn on_deliver(&mut self, now: SimTime, id: u64, idx: usize) {
        let Some(ho) = self.handovers.get_mut(&id) else {
            return;
        };
        ho.outstanding -= 1;
        let e = ho.trace.events[idx].clone();
        let live = idx >= ho.dead_below && !ho.done;
        let in_outage = ho.t_down.is_some_and(|d| now > d) && ho.attach.is_none();
        let mut event = "recv";
        if idx < ho.dead_below {
            event = "drop";
        } else if in_outage && e.is_wireless() {
            if e.msg.kind == MessageKind::HandoverCommand {
                event = "lost";
            } else {
                ho.wireless_during_outage = true;
            }
        }
        let (mode, from, to) = (ho.mode, ho.from, ho.to);
        let drop = idx < ho.dead_below;
        self.log(
            now,
            e.to,
            event,
            e.msg.kind.as_str(),
            &e.msg.flag_label(),
            self.p.control_packet_size,
        );
        if drop {
            self.reap(id);
            return;
        }
        if live {
            match (mode, e.msg.kind) {
                (HandoverMode::Predictive, MessageKind::Hack) if e.to == NodeId::Zone(from) => {
                    self.handovers.get_mut(&id).unwrap().hack_at_source = Some(now);
                }
                (HandoverMode::Predictive, MessageKind::HandoverCommand) => {
                    // the target admits the MU once the command is out; a
                    // command arriving after link-down is only used for timing
                    let ho = self.handovers.get_mut(&id).unwrap();
                    if ho.detach.is_none() {
                        ho.detach = Some(now);
                    }
                    let residual =
                        to_time(self.p.l2_latency + self.p.auth_latency - self.p.scan_time);
                    self.queue.schedule(now + residual, Event::Attached(id));
                }
                (HandoverMode::Ddmm | HandoverMode::FreshAttach, MessageKind::Ra) => {
                    self.complete(id, now)
                }
                (HandoverMode::Reactive, MessageKind::Hack)
                    if e.msg.t_flag == Some(TargetType::ReportedServer)
                        && e.to == NodeId::Zone(to) =>
                {
                    self.complete(id, now)
                }
                _ => {}
            }
        }
        let children: Vec<_> = self.handovers[&id]
            .trace
            .events
            .iter()
            .enumerate()
            .skip(idx + 1)
            .filter(|(_, c)| c.cause == Cause::Message(idx))
            .map(|(j, _)| j)
            .collect();
        let at = now + to_time(self.processing(e.to, e.msg.kind));
        for j in children {
            self.send(id, j, at);
        }
        self.reap(id);
    }

    fn reap(&mut self, id: u64) {
        if self.handovers[&id].done && self.handovers[&id].outstanding == 0 {
            self.handovers.remove(&id);
        }
    }

    fn complete(&mut self, id: u64, now: SimTime) {
        let p = self.p;
        let (from, to) = (self.handovers[&id].from, self.handovers[&id].to);
        let data_hops = self.topo.hops_between(from, to);
        let d_mz_d = self.wired(p.data_packet_size, data_hops);
        let d_mu_d = self.wireless(p.data_packet_size);
        let ho = &self.handovers[&id];
        let detach = to_secs(ho.detach.expect("detached before completion"));
        let t = to_secs(now);
        let recovered = match ho.mode {
            HandoverMode::Ddmm | HandoverMode::FreshAttach => {
                let ra = ho
                    .trace
                    .events
                    .iter()
                    .rposition(|e| e.msg.kind == MessageKind::Ra)
                    .and_then(|i| ho.sent[i])
                    .expect("RA sent");
                to_secs(ra) + d_mz_d + d_mu_d
            }
            HandoverMode::Reactive => t + d_mz_d + d_mu_d,
            _ => t + d_mu_d,
        };
        let mode = ho.mode;
        let active = ho.active;
        let rate = self.rate(active);
        let (lost, buffered) = if mode == HandoverMode::Predictive {
            let tunnel = to_secs(ho.hack_at_source.expect("predictive"));
            let t_down = ho.t_down.map(to_secs).unwrap_or(f64::INFINITY);
            let attach = to_secs(ho.attach.expect("attached"));
            let start = tunnel.max(self.traffic_mark);
            let n = self.poisson(rate * (start.min(t_down) - self.traffic_mark).max(0.0));
            let untunneled = self.poisson(rate * (tunnel - t_down).max(0.0));
            let window = (attach - d_mz_d - start).max(0.0);
            let n_buf = self.poisson(rate * window);
            let cap = (p.buffer_size / p.data_packet_size).floor() as u64;
            let buffered = n_buf.min(cap);
            let lost = untunneled + (n_buf - buffered);
            self.traffic.generated += n + untunneled + n_buf;
            self.traffic.delivered += n + buffered;
            self.traffic.lost += lost;
            self.traffic.peak_buffered = self.traffic.peak_buffered.max(buffered);
            self.traffic_mark = self.traffic_mark.max(attach - d_mz_d);
            (lost, buffered)
        } else {
            let before = self.poisson(rate * (detach - self.traffic_mark).max(0.0));
            let lost = self.poisson(rate * (recovered - detach.max(self.traffic_mark)).max(0.0));
            self.traffic.generated += before + lost;
            self.traffic.delivered += before;
            self.traffic.lost += lost;
            self.traffic_mark = self.traffic_mark.max(recovered);
            (lost, 0)
        };

        let pos = self.motion.at(t);
        let failed = self.topo.nearest(pos) != to;
        let ho = self.handovers.get_mut(&id).unwrap();
        ho.done = true;
        let record = HandoverRecord {
            mu: self.mu,
            time: to_secs(ho.t0),
            from,
            to,
            scheme: self.scheme,
            mode,
            latency: t - detach,
            session_recovery: recovered - detach,
            active_prefixes: active,
            packets_lost: lost,
            bytes_lost: lost as f64 * p.data_packet_size,
            packets_buffered: buffered,
            control_messages: ho.control_messages,
            control_bytes: ho.control_bytes,
            signaling_load: ho.signaling_load,
            failed,
            hack_before_link_down: ho.hack_before_link_down,
            wireless_during_outage: ho.wireless_during_outage,
        };
        self.records.push(record);
        self.log_state(now, "handover_done");
        self.current = None;
        self.serving = to;
        if let Some(old) = self.net.mu(self.mu).and_then(|m| m.plnps.last().copied()) {
            let life = Exp::new(p.foreign_prefix_decay_rate)
                .unwrap()
                .sample(&mut self.rng);
            self.queue
                .schedule(now + to_time(life), Event::Expire(old.prefix));
        }
        self.queue.schedule(now, Event::Sample);
    }

    fn on_expire(&mut self, now: SimTime, prefix: Prefix) -> Result<(), SimError> {
        if self.current.is_none() {
            self.flush(to_secs(now));
        }
        if self.net.expire_prefix(self.mu, prefix)? {
            self.log_state(now, "prefix_expired");
        }
        Ok(())
    }
}
