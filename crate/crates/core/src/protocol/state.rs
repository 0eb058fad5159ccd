use std::collections::{BTreeMap, BTreeSet};

use super::message::{
    Anchor, MessageKind, MobilityMessage, MobilityOption, MuId, OptionKind, Prefix, ZoneId,
};
use super::ProtocolError;

/// Prefixes a mix zone may hand out. Pools of different zones are disjoint
/// by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixPool {
    zone: ZoneId,
    capacity: u16,
    in_use: BTreeSet<u16>,
}

impl PrefixPool {
    pub fn new(zone: ZoneId, capacity: u16) -> Self {
        PrefixPool {
            zone,
            capacity,
            in_use: BTreeSet::new(),
        }
    }

    /// Lowest free prefix.
    pub fn allocate(&mut self) -> Result<Prefix, ProtocolError> {
        let index = (0..self.capacity)
            .find(|i| !self.in_use.contains(i))
            .ok_or(ProtocolError::PoolExhausted(self.zone))?;
        self.in_use.insert(index);
        Ok(Prefix::for_zone(self.zone, index))
    }

    pub fn release(&mut self, prefix: Prefix) -> bool {
        self.owns(prefix) && self.in_use.remove(&prefix.index())
    }

    pub fn owns(&self, prefix: Prefix) -> bool {
        prefix.zone() == Some(self.zone) && prefix.index() < self.capacity
    }

    pub fn is_allocated(&self, prefix: Prefix) -> bool {
        self.owns(prefix) && self.in_use.contains(&prefix.index())
    }

    pub fn allocated(&self) -> usize {
        self.in_use.len()
    }

    pub fn capacity(&self) -> u16 {
        self.capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingState {
    Temporal,
    Confirmed,
}

/// Mix-zone side binding for an MU it serves (or is about to serve).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBinding {
    pub lnp: Prefix,
    pub state: BindingState,
    pub created_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    Mu(MuId),
    Tunnel(ZoneId),
}

/// Bidirectional tunnel endpoint as seen from `local`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tunnel {
    pub local: ZoneId,
    pub peer: ZoneId,
    pub prefix: Prefix,
}

#[derive(Debug, Clone)]
pub struct MixZone {
    pub id: ZoneId,
    pub pool: PrefixPool,
    pub bindings: BTreeMap<MuId, LocalBinding>,
    pub tunnels: BTreeSet<(ZoneId, Prefix)>,
    pub routes: BTreeMap<Prefix, NextHop>,
}

impl MixZone {
    pub fn new(id: ZoneId, pool_capacity: u16) -> Self {
        MixZone {
            id,
            pool: PrefixPool::new(id, pool_capacity),
            bindings: BTreeMap::new(),
            tunnels: BTreeSet::new(),
            routes: BTreeMap::new(),
        }
    }

    pub fn tunnel_table(&self) -> impl Iterator<Item = Tunnel> + '_ {
        self.tunnels.iter().map(|&(peer, prefix)| Tunnel {
            local: self.id,
            peer,
            prefix,
        })
    }

    /// Drops the context held for `mu`, as after a server restart.
    pub fn forget(&mut self, mu: MuId) -> bool {
        self.bindings.remove(&mu).is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingCacheEntry {
    pub mu_id: MuId,
    pub lnp: Prefix,
    pub serving_mz: ZoneId,
    /// Earlier zones still anchoring a prefix, oldest first.
    pub anchored: Vec<Anchor>,
    pub created_at: f64,
    pub state: BindingState,
}

#[derive(Debug, Clone, Default)]
pub struct Lbs {
    cache: BTreeMap<MuId, BindingCacheEntry>,
}

fn pbu_fields(pbu: &MobilityMessage) -> Result<(Prefix, ZoneId), ProtocolError> {
    let lnp = pbu
        .lnp()
        .ok_or(ProtocolError::MissingOption(OptionKind::Lnp))?;
    let zone = match pbu.option(OptionKind::MzAddr) {
        Some(MobilityOption::MzAddr(a)) => ZoneId::from_addr(*a),
        _ => None,
    }
    .ok_or(ProtocolError::MissingOption(OptionKind::MzAddr))?;
    Ok((lnp, zone))
}

fn pba_for(entry: &BindingCacheEntry) -> MobilityMessage {
    let mut pba =
        MobilityMessage::new(MessageKind::Pba, entry.mu_id).with(MobilityOption::Lnp(entry.lnp));
    if !entry.anchored.is_empty() {
        pba = pba.with(MobilityOption::PlnpList(entry.anchored.clone()));
    }
    pba
}

impl Lbs {
    pub fn entry(&self, mu: MuId) -> Option<&BindingCacheEntry> {
        self.cache.get(&mu)
    }

    pub fn entries(&self) -> impl Iterator<Item = &BindingCacheEntry> {
        self.cache.values()
    }

    /// Registration of a fresh session; replaces any previous entry.
    pub fn register(
        &mut self,
        pbu: &MobilityMessage,
        now: f64,
    ) -> Result<(BindingCacheEntry, MobilityMessage), ProtocolError> {
        let (lnp, zone) = pbu_fields(pbu)?;
        let entry = BindingCacheEntry {
            mu_id: pbu.mu_id,
            lnp,
            serving_mz: zone,
            anchored: Vec::new(),
            created_at: now,
            state: BindingState::Confirmed,
        };
        self.cache.insert(pbu.mu_id, entry.clone());
        let pba = pba_for(&entry);
        Ok((entry, pba))
    }

    /// Handover update: the sender becomes the serving zone and the
    /// previous one is appended to the anchored list with its prefix.
    pub fn update(
        &mut self,
        pbu: &MobilityMessage,
    ) -> Result<(BindingCacheEntry, MobilityMessage), ProtocolError> {
        let (lnp, zone) = pbu_fields(pbu)?;
        let Some(entry) = self.cache.get_mut(&pbu.mu_id) else {
            let pba = MobilityMessage::new(MessageKind::Pba, pbu.mu_id).nacked();
            return Err(ProtocolError::BindingMiss {
                mu_id: pbu.mu_id,
                pba: Box::new(pba),
            });
        };
        if entry.serving_mz != zone || entry.lnp != lnp {
            let old = Anchor {
                zone: entry.serving_mz,
                prefix: entry.lnp,
            };
            if old.prefix != lnp && !entry.anchored.iter().any(|a| a.prefix == old.prefix) {
                entry.anchored.push(old);
            }
            entry.serving_mz = zone;
            entry.lnp = lnp;
        }
        entry.state = BindingState::Confirmed;
        let entry = entry.clone();
        let pba = pba_for(&entry);
        Ok((entry, pba))
    }

    pub fn remove_anchor(&mut self, mu: MuId, prefix: Prefix) -> bool {
        match self.cache.get_mut(&mu) {
            Some(e) => {
                let before = e.anchored.len();
                e.anchored.retain(|a| a.prefix != prefix);
                e.anchored.len() != before
            }
            None => false,
        }
    }

    pub fn remove(&mut self, mu: MuId) -> Option<BindingCacheEntry> {
        self.cache.remove(&mu)
    }
}

/// Predictive handover between HACK and re-attachment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingHandover {
    pub source: ZoneId,
    pub target: ZoneId,
    pub nlnp: Prefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileUnit {
    pub id: MuId,
    /// Link-layer interface id; 0 means none is known.
    pub lla_iid: u64,
    pub serving: Option<ZoneId>,
    pub lnp: Option<Prefix>,
    pub plnps: Vec<Anchor>,
    pub pending: Option<PendingHandover>,
}

impl MobileUnit {
    pub fn new(id: MuId, lla_iid: u64) -> Self {
        MobileUnit {
            id,
            lla_iid,
            serving: None,
            lnp: None,
            plnps: Vec::new(),
            pending: None,
        }
    }

    /// Prefixes the MU has addresses from: its LNP and every live pLNP.
    pub fn addresses(&self) -> Vec<Prefix> {
        self.lnp
            .into_iter()
            .chain(self.plnps.iter().map(|a| a.prefix))
            .collect()
    }
}
