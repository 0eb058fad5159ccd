use std::collections::{BTreeMap, BTreeSet};

use super::message::{
    Anchor, MessageKind, MobilityMessage, MobilityOption, MuId, NodeId, TargetType, ZoneId,
    LBS_ADDR,
};
use super::state::{
    BindingState, Lbs, LocalBinding, MixZone, MobileUnit, NextHop, PendingHandover,
};
use super::{Cause, ProtocolError, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HandoverMode {
    Ddmm,
    Predictive,
    Reactive,
    /// Target equals the serving zone; only a layer-2 handover happens.
    IntraZone,
    /// The reported server had no context, so the session was restarted.
    FreshAttach,
    /// HI went unanswered twice; the caller must fall back to reactive.
    HiTimeout,
}

impl HandoverMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HandoverMode::Ddmm => "ddmm",
            HandoverMode::Predictive => "predictive",
            HandoverMode::Reactive => "reactive",
            HandoverMode::IntraZone => "intra-zone",
            HandoverMode::FreshAttach => "fresh-attach",
            HandoverMode::HiTimeout => "hi-timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverOutcome {
    pub mode: HandoverMode,
    pub trace: Trace,
}

/// All mix zones, the LBS server and the mobile units of one session
/// domain.
#[derive(Debug, Clone)]
pub struct Network {
    zones: BTreeMap<ZoneId, MixZone>,
    lbs: Lbs,
    mus: BTreeMap<MuId, MobileUnit>,
    context_size: usize,
}

fn mu_node(mu: MuId) -> NodeId {
    NodeId::Mu(mu)
}

fn zone_node(z: ZoneId) -> NodeId {
    NodeId::Zone(z)
}

impl Network {
    pub fn new(zones: impl IntoIterator<Item = ZoneId>, pool_capacity: u16) -> Self {
        Network {
            zones: zones
                .into_iter()
                .map(|z| (z, MixZone::new(z, pool_capacity)))
                .collect(),
            lbs: Lbs::default(),
            mus: BTreeMap::new(),
            context_size: 32,
        }
    }

    /// Size of the opaque context blob returned by a reported server.
    pub fn with_context_size(mut self, bytes: usize) -> Self {
        self.context_size = bytes;
        self
    }

    pub fn add_mu(&mut self, id: MuId, lla_iid: u64) {
        self.mus.insert(id, MobileUnit::new(id, lla_iid));
    }

    pub fn mu(&self, id: MuId) -> Option<&MobileUnit> {
        self.mus.get(&id)
    }

    pub fn zone(&self, id: ZoneId) -> Option<&MixZone> {
        self.zones.get(&id)
    }

    pub fn zone_mut(&mut self, id: ZoneId) -> Option<&mut MixZone> {
        self.zones.get_mut(&id)
    }

    pub fn zones(&self) -> impl Iterator<Item = &MixZone> {
        self.zones.values()
    }

    pub fn lbs(&self) -> &Lbs {
        &self.lbs
    }

    pub fn lbs_mut(&mut self) -> &mut Lbs {
        &mut self.lbs
    }

    fn check_zone(&self, z: ZoneId) -> Result<(), ProtocolError> {
        if self.zones.contains_key(&z) {
            Ok(())
        } else {
            Err(ProtocolError::UnknownZone(z))
        }
    }

    fn get_mu(&self, id: MuId) -> Result<&MobileUnit, ProtocolError> {
        self.mus.get(&id).ok_or(ProtocolError::UnknownMu(id))
    }

    fn serving_of(&self, id: MuId) -> Result<ZoneId, ProtocolError> {
        self.get_mu(id)?
            .serving
            .ok_or(ProtocolError::NotAttached(id))
    }

    fn zone_at(&mut self, z: ZoneId) -> &mut MixZone {
        self.zones.get_mut(&z).expect("zone checked by caller")
    }

    fn lla_option(&self, mu: MuId) -> Option<MobilityOption> {
        let iid = self.mus[&mu].lla_iid;
        (iid != 0).then_some(MobilityOption::MuLlaIid(iid))
    }

    fn pbu(&self, mu: MuId, zone: ZoneId, lnp: super::Prefix) -> MobilityMessage {
        MobilityMessage::new(MessageKind::Pbu, mu)
            .with(MobilityOption::Lnp(lnp))
            .with(MobilityOption::MzAddr(zone.addr()))
    }

    /// Removes every route and tunnel for the MU's prefixes.
    fn clear_routes(&mut self, mu: MuId) {
        let m = &self.mus[&mu];
        let prefixes: BTreeSet<_> = m
            .addresses()
            .into_iter()
            .chain(m.pending.map(|p| p.nlnp))
            .collect();
        let mut touched: BTreeSet<ZoneId> = m.plnps.iter().map(|a| a.zone).collect();
        touched.extend(m.serving);
        if let Some(p) = m.pending {
            touched.insert(p.target);
        }
        for z in touched {
            let zone = self.zone_at(z);
            zone.routes.retain(|p, _| !prefixes.contains(p));
            zone.tunnels.retain(|(_, p)| !prefixes.contains(p));
        }
    }

    fn link(&mut self, a: ZoneId, b: ZoneId, prefix: super::Prefix) {
        self.zone_at(a).tunnels.insert((b, prefix));
        self.zone_at(b).tunnels.insert((a, prefix));
        self.zone_at(a).routes.insert(prefix, NextHop::Tunnel(b));
        self.zone_at(b).routes.insert(prefix, NextHop::Tunnel(a));
    }

    /// Rebuilds routes and tunnels from the MU's current prefix state.
    fn install_routes(&mut self, mu: MuId) {
        let m = self.mus[&mu].clone();
        let Some(s) = m.serving else { return };
        if let Some(lnp) = m.lnp {
            self.zone_at(s).routes.insert(lnp, NextHop::Mu(mu));
        }
        for a in &m.plnps {
            if a.zone == s {
                self.zone_at(s).routes.insert(a.prefix, NextHop::Mu(mu));
            } else {
                self.link(s, a.zone, a.prefix);
            }
        }
        if let (Some(p), Some(lnp)) = (m.pending, m.lnp) {
            // Old LNP is tunnelled to the target ahead of re-attachment.
            self.link(p.source, p.target, lnp);
            self.zone_at(p.target)
                .routes
                .insert(p.nlnp, NextHop::Mu(mu));
        }
    }

    /// Drops all state for the MU and returns its prefixes to their pools.
    fn release_session(&mut self, mu: MuId) {
        self.clear_routes(mu);
        let m = self.mus[&mu].clone();
        if let Some(p) = m.pending {
            let t = self.zone_at(p.target);
            t.pool.release(p.nlnp);
            t.bindings.remove(&mu);
        }
        if let (Some(s), Some(lnp)) = (m.serving, m.lnp) {
            let z = self.zone_at(s);
            z.pool.release(lnp);
            z.bindings.remove(&mu);
        }
        for a in &m.plnps {
            self.zone_at(a.zone).pool.release(a.prefix);
        }
        self.lbs.remove(mu);
        let m = self.mus.get_mut(&mu).unwrap();
        m.serving = None;
        m.lnp = None;
        m.plnps.clear();
        m.pending = None;
    }

    /// Moves the session of `mu` from its serving zone to `new`, which has
    /// allocated `nlnp`; the old LNP becomes a pLNP anchored at the old zone.
    fn rehome(&mut self, mu: MuId, new: ZoneId, nlnp: super::Prefix, now: f64) {
        self.clear_routes(mu);
        let m = self.mus.get_mut(&mu).unwrap();
        let old = m.serving.expect("attached");
        let old_lnp = m.lnp.expect("attached");
        m.plnps.push(Anchor {
            zone: old,
            prefix: old_lnp,
        });
        m.lnp = Some(nlnp);
        m.serving = Some(new);
        m.pending = None;
        self.zone_at(old).bindings.remove(&mu);
        self.zone_at(new).bindings.insert(
            mu,
            LocalBinding {
                lnp: nlnp,
                state: BindingState::Confirmed,
                created_at: now,
            },
        );
        self.install_routes(mu);
    }

    /// RS/PBU/PBA/RA registration at `zone`. Repeating it for an MU already
    /// served there yields the same trace and leaves state unchanged; an MU
    /// bound elsewhere starts a fresh session.
    pub fn initial_attach(
        &mut self,
        mu: MuId,
        zone: ZoneId,
        now: f64,
    ) -> Result<Trace, ProtocolError> {
        self.check_zone(zone)?;
        let m = self.get_mu(mu)?.clone();
        let rebind = m.serving == Some(zone)
            && m.pending.is_none()
            && self.lbs.entry(mu).is_some_and(|e| e.serving_mz == zone);
        let lnp = if rebind {
            m.lnp.expect("attached")
        } else {
            let lnp = self.zone_at(zone).pool.allocate()?;
            if m.serving.is_some() || self.lbs.entry(mu).is_some() {
                self.release_session(mu);
            }
            lnp
        };

        let mut trace = Trace::new();
        let mut rs = MobilityMessage::new(MessageKind::Rs, mu);
        let mut pbu = self.pbu(mu, zone, lnp);
        if let Some(o) = self.lla_option(mu) {
            rs = rs.with(o.clone());
            pbu = pbu.with(o);
        }
        let i = trace.push(mu_node(mu), zone_node(zone), rs, Cause::Start);
        let i = trace.push(zone_node(zone), NodeId::Lbs, pbu.clone(), Cause::Message(i));
        let pba = if rebind {
            self.lbs.update(&pbu)?.1
        } else {
            self.lbs.register(&pbu, now)?.1
        };
        let i = trace.push(NodeId::Lbs, zone_node(zone), pba, Cause::Message(i));
        let ra = MobilityMessage::new(MessageKind::Ra, mu).with(MobilityOption::Lnp(lnp));
        trace.push(zone_node(zone), mu_node(mu), ra, Cause::Message(i));

        if !rebind {
            self.zone_at(zone).bindings.insert(
                mu,
                LocalBinding {
                    lnp,
                    state: BindingState::Confirmed,
                    created_at: now,
                },
            );
            let m = self.mus.get_mut(&mu).unwrap();
            m.serving = Some(zone);
            m.lnp = Some(lnp);
            self.install_routes(mu);
        }
        Ok(trace)
    }

    /// Plain DDMM handover: the MU solicits the new zone after attaching,
    /// which registers with the LBS; the LBS refreshes every anchoring zone.
    pub fn ddmm_handover(
        &mut self,
        mu: MuId,
        new: ZoneId,
        now: f64,
    ) -> Result<HandoverOutcome, ProtocolError> {
        self.check_zone(new)?;
        let serving = self.serving_of(mu)?;
        if self.mus[&mu].pending.is_some() {
            return Err(ProtocolError::HandoverInProgress(mu));
        }
        if new == serving {
            return Ok(HandoverOutcome {
                mode: HandoverMode::IntraZone,
                trace: Trace::new(),
            });
        }
        let nlnp = self.zone_at(new).pool.allocate()?;
        let mut trace = Trace::new();
        let mut rs = MobilityMessage::new(MessageKind::Rs, mu);
        if let Some(o) = self.lla_option(mu) {
            rs = rs.with(o);
        }
        let rs_i = trace.push(mu_node(mu), zone_node(new), rs, Cause::Attach);
        let pbu = self.pbu(mu, new, nlnp);
        let pbu_i = trace.push(
            zone_node(new),
            NodeId::Lbs,
            pbu.clone(),
            Cause::Message(rs_i),
        );
        let (entry, pba) = self.lbs.update(&pbu)?;
        let pba_i = trace.push(NodeId::Lbs, zone_node(new), pba, Cause::Message(pbu_i));
        self.refresh_anchors(&mut trace, mu, new, &entry.anchored, pbu_i);
        let ra = MobilityMessage::new(MessageKind::Ra, mu).with(MobilityOption::Lnp(nlnp));
        trace.push(zone_node(new), mu_node(mu), ra, Cause::Message(pba_i));
        self.rehome(mu, new, nlnp, now);
        Ok(HandoverOutcome {
            mode: HandoverMode::Ddmm,
            trace,
        })
    }

    /// LBS-initiated PBU/PBA with every zone in `anchors`.
    fn refresh_anchors(
        &self,
        trace: &mut Trace,
        mu: MuId,
        serving: ZoneId,
        anchors: &[Anchor],
        cause: usize,
    ) {
        for a in anchors {
            let pbu = MobilityMessage::new(MessageKind::Pbu, mu)
                .with(MobilityOption::MzAddr(serving.addr()))
                .with(MobilityOption::PlnpList(vec![*a]));
            let i = trace.push(NodeId::Lbs, zone_node(a.zone), pbu, Cause::Message(cause));
            let pba =
                MobilityMessage::new(MessageKind::Pba, mu).with(MobilityOption::PlnpList(vec![*a]));
            trace.push(zone_node(a.zone), NodeId::Lbs, pba, Cause::Message(i));
        }
    }

    /// First half of a predictive handover, up to the handover command.
    /// `hi_losses` is the number of HI transmissions that go unanswered;
    /// one loss is recovered by a single retry, two end in
    /// [`HandoverMode::HiTimeout`] without any state change.
    pub fn begin_predictive(
        &mut self,
        mu: MuId,
        target: ZoneId,
        now: f64,
        hi_losses: u32,
    ) -> Result<HandoverOutcome, ProtocolError> {
        self.check_zone(target)?;
        let s = self.serving_of(mu)?;
        let m = self.mus[&mu].clone();
        if m.pending.is_some() {
            return Err(ProtocolError::HandoverInProgress(mu));
        }
        if target == s {
            return Ok(HandoverOutcome {
                mode: HandoverMode::IntraZone,
                trace: Trace::new(),
            });
        }
        let lnp = m.lnp.expect("attached");

        let mut trace = Trace::new();
        let report = MobilityMessage::new(MessageKind::L2Report, mu)
            .with(MobilityOption::MzAddr(target.addr()));
        let r = trace.push(mu_node(mu), zone_node(s), report, Cause::Start);
        let mut plnps = m.plnps.clone();
        plnps.push(Anchor {
            zone: s,
            prefix: lnp,
        });
        let mut hi = MobilityMessage::handover(MessageKind::Hi, mu, TargetType::ServingZone)
            .with(MobilityOption::PlnpList(plnps))
            .with(MobilityOption::LbsAddr(LBS_ADDR));
        if let Some(o) = self.lla_option(mu) {
            hi = hi.with(o);
        }
        let mut hi_i = trace.push(
            zone_node(s),
            zone_node(target),
            hi.clone(),
            Cause::Message(r),
        );
        if hi_losses >= 1 {
            hi_i = trace.push(zone_node(s), zone_node(target), hi, Cause::Timeout(hi_i));
        }
        if hi_losses >= 2 {
            return Ok(HandoverOutcome {
                mode: HandoverMode::HiTimeout,
                trace,
            });
        }

        let nlnp = self.zone_at(target).pool.allocate()?;
        let hack = MobilityMessage::handover(MessageKind::Hack, mu, TargetType::ServingZone)
            .with(MobilityOption::Lnp(nlnp));
        let h = trace.push(zone_node(target), zone_node(s), hack, Cause::Message(hi_i));
        let cmd =
            MobilityMessage::new(MessageKind::HandoverCommand, mu).with(MobilityOption::Lnp(nlnp));
        trace.push(zone_node(s), mu_node(mu), cmd, Cause::Message(h));

        self.zone_at(target).bindings.insert(
            mu,
            LocalBinding {
                lnp: nlnp,
                state: BindingState::Temporal,
                created_at: now,
            },
        );
        self.clear_routes(mu);
        self.mus.get_mut(&mu).unwrap().pending = Some(PendingHandover {
            source: s,
            target,
            nlnp,
        });
        self.install_routes(mu);
        Ok(HandoverOutcome {
            mode: HandoverMode::Predictive,
            trace,
        })
    }

    /// Second half of a predictive handover, after the MU attached to the
    /// target: PBU/PBA with the LBS and every previously anchoring zone.
    pub fn complete_predictive(&mut self, mu: MuId, now: f64) -> Result<Trace, ProtocolError> {
        let m = self.get_mu(mu)?.clone();
        let p = m.pending.ok_or(ProtocolError::NoPendingHandover(mu))?;
        let mut trace = Trace::new();
        let pbu = self.pbu(mu, p.target, p.nlnp);
        let i = trace.push(zone_node(p.target), NodeId::Lbs, pbu.clone(), Cause::Attach);
        let (_, pba) = self.lbs.update(&pbu)?;
        trace.push(NodeId::Lbs, zone_node(p.target), pba, Cause::Message(i));
        self.refresh_anchors(&mut trace, mu, p.target, &m.plnps, i);
        self.rehome(mu, p.target, p.nlnp, now);
        Ok(trace)
    }

    /// Undoes [`Network::begin_predictive`]: the target forgets the
    /// temporary binding and the tunnel is torn down.
    pub fn abort_predictive(&mut self, mu: MuId) -> Result<(), ProtocolError> {
        let p = self
            .get_mu(mu)?
            .pending
            .ok_or(ProtocolError::NoPendingHandover(mu))?;
        self.clear_routes(mu);
        let t = self.zone_at(p.target);
        t.bindings.remove(&mu);
        t.pool.release(p.nlnp);
        self.mus.get_mut(&mu).unwrap().pending = None;
        self.install_routes(mu);
        Ok(())
    }

    /// Full predictive handover without losses.
    pub fn predictive_handover(
        &mut self,
        mu: MuId,
        target: ZoneId,
        now: f64,
    ) -> Result<HandoverOutcome, ProtocolError> {
        let mut out = self.begin_predictive(mu, target, now, 0)?;
        if out.mode == HandoverMode::Predictive {
            let rest = self.complete_predictive(mu, now)?;
            out.trace.append(rest);
        }
        Ok(out)
    }

    /// Reactive handover after the MU attached to `new` without warning.
    /// The reported server is the MU's previous serving zone. A pending
    /// predictive handover is abandoned first.
    pub fn reactive_handover(
        &mut self,
        mu: MuId,
        new: ZoneId,
        now: f64,
    ) -> Result<HandoverOutcome, ProtocolError> {
        self.check_zone(new)?;
        let reported = self.serving_of(mu)?;
        if self.mus[&mu].pending.is_some() {
            self.abort_predictive(mu)?;
        }
        if new == reported {
            return Ok(HandoverOutcome {
                mode: HandoverMode::IntraZone,
                trace: Trace::new(),
            });
        }
        let m = self.mus[&mu].clone();
        let mut trace = Trace::new();
        let hi = MobilityMessage::handover(MessageKind::Hi, mu, TargetType::ReportedServer)
            .with(MobilityOption::ContextRequest(Vec::new()))
            .with(MobilityOption::MzAddr(new.addr()));
        let hi_i = trace.push(zone_node(new), zone_node(reported), hi, Cause::Attach);

        let has_context = self.zones[&reported]
            .bindings
            .get(&mu)
            .is_some_and(|b| b.state == BindingState::Confirmed);
        if !has_context {
            let nack = MobilityMessage::handover(MessageKind::Hack, mu, TargetType::ReportedServer)
                .nacked();
            trace.push(
                zone_node(reported),
                zone_node(new),
                nack,
                Cause::Message(hi_i),
            );
            self.release_session(mu);
            let fresh = self.initial_attach(mu, new, now)?;
            trace.append(fresh);
            return Ok(HandoverOutcome {
                mode: HandoverMode::FreshAttach,
                trace,
            });
        }

        let nlnp = self.zone_at(new).pool.allocate()?;
        let mut hack = MobilityMessage::handover(MessageKind::Hack, mu, TargetType::ReportedServer)
            .with(MobilityOption::Lnp(m.lnp.expect("attached")));
        if let Some(o) = self.lla_option(mu) {
            hack = hack.with(o);
        }
        hack = hack
            .with(MobilityOption::LbsAddr(LBS_ADDR))
            .with(MobilityOption::ContextRequest(vec![0; self.context_size]));
        if !m.plnps.is_empty() {
            hack = hack.with(MobilityOption::PlnpList(m.plnps.clone()));
        }
        let hack_i = trace.push(
            zone_node(reported),
            zone_node(new),
            hack,
            Cause::Message(hi_i),
        );
        for a in m.plnps.iter().filter(|a| a.zone != new) {
            let hi = MobilityMessage::handover(MessageKind::Hi, mu, TargetType::AnchoredZone)
                .with(MobilityOption::PlnpList(vec![*a]));
            let i = trace.push(
                zone_node(new),
                zone_node(a.zone),
                hi,
                Cause::Message(hack_i),
            );
            let ack = MobilityMessage::handover(MessageKind::Hack, mu, TargetType::AnchoredZone)
                .with(MobilityOption::PlnpList(vec![*a]));
            trace.push(zone_node(a.zone), zone_node(new), ack, Cause::Message(i));
        }
        let pbu = self.pbu(mu, new, nlnp);
        let pbu_i = trace.push(
            zone_node(new),
            NodeId::Lbs,
            pbu.clone(),
            Cause::Message(hack_i),
        );
        let (_, pba) = self.lbs.update(&pbu)?;
        trace.push(NodeId::Lbs, zone_node(new), pba, Cause::Message(pbu_i));
        self.rehome(mu, new, nlnp, now);
        Ok(HandoverOutcome {
            mode: HandoverMode::Reactive,
            trace,
        })
    }

    /// Expires an anchored pLNP: its tunnel is torn down and the prefix
    /// returns to the anchoring zone's pool. Returns false if the prefix
    /// is not one of the MU's pLNPs.
    pub fn expire_prefix(
        &mut self,
        mu: MuId,
        prefix: super::Prefix,
    ) -> Result<bool, ProtocolError> {
        let m = self.get_mu(mu)?;
        let Some(a) = m.plnps.iter().find(|a| a.prefix == prefix).copied() else {
            return Ok(false);
        };
        self.clear_routes(mu);
        self.mus
            .get_mut(&mu)
            .unwrap()
            .plnps
            .retain(|x| x.prefix != prefix);
        self.lbs.remove_anchor(mu, prefix);
        self.zone_at(a.zone).pool.release(prefix);
        self.install_routes(mu);
        Ok(true)
    }

    /// Checks the cross-node consistency rules, returning the first
    /// violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut owner = BTreeMap::new();
        for m in self.mus.values() {
            let Some(s) = m.serving else {
                if self.lbs.entry(m.id).is_some() {
                    return Err(format!("MU{} detached but bound at the LBS", m.id));
                }
                continue;
            };
            let e = self
                .lbs
                .entry(m.id)
                .ok_or_else(|| format!("MU{} has no LBS entry", m.id))?;
            if e.serving_mz != s || Some(e.lnp) != m.lnp || e.anchored != m.plnps {
                return Err(format!("MU{} disagrees with its LBS entry", m.id));
            }
            if e.state != BindingState::Confirmed {
                return Err(format!("MU{} LBS entry not confirmed", m.id));
            }
            let confirmed: Vec<_> = self
                .zones
                .values()
                .filter(|z| {
                    z.bindings
                        .get(&m.id)
                        .is_some_and(|b| b.state == BindingState::Confirmed)
                })
                .map(|z| z.id)
                .collect();
            if confirmed != [s] {
                return Err(format!("MU{} confirmed at {confirmed:?}", m.id));
            }
            let mut seen = BTreeSet::new();
            let anchors = std::iter::once((s, m.lnp.unwrap()))
                .chain(m.plnps.iter().map(|a| (a.zone, a.prefix)))
                .chain(m.pending.map(|p| (p.target, p.nlnp)));
            for (z, p) in anchors {
                if !seen.insert(p) {
                    return Err(format!("MU{} holds {p} twice", m.id));
                }
                if !self.zones[&z].pool.is_allocated(p) {
                    return Err(format!("{p} not allocated from {z}"));
                }
                if let Some(other) = owner.insert(p, m.id) {
                    return Err(format!("{p} held by MU{other} and MU{}", m.id));
                }
            }
            for a in m.plnps.iter().filter(|a| a.zone != s) {
                let ok = self.zones[&a.zone].tunnels.contains(&(s, a.prefix))
                    && self.zones[&s].tunnels.contains(&(a.zone, a.prefix));
                if !ok {
                    return Err(format!("no tunnel {s}<->{} for {}", a.zone, a.prefix));
                }
            }
        }
        for z in self.zones.values() {
            for &(peer, prefix) in &z.tunnels {
                if peer == z.id {
                    return Err(format!("self tunnel at {}", z.id));
                }
                let mu = owner
                    .get(&prefix)
                    .ok_or_else(|| format!("tunnel for unowned {prefix}"))?;
                let m = &self.mus[mu];
                let s = m.serving.unwrap();
                let anchored = m.plnps.iter().any(|a| {
                    a.prefix == prefix
                        && ((a.zone == z.id && peer == s) || (a.zone == peer && z.id == s))
                });
                let pending = m.pending.is_some_and(|p| {
                    m.lnp == Some(prefix)
                        && ((p.source, p.target) == (z.id, peer)
                            || (p.source, p.target) == (peer, z.id))
                });
                if !anchored && !pending {
                    return Err(format!("stray tunnel {}<->{peer} for {prefix}", z.id));
                }
            }
        }
        Ok(())
    }
}
