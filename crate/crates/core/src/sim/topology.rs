use std::collections::BTreeMap;

use crate::params::{derive_topology_counts, zone_pitch, SystemParameters};
use crate::protocol::ZoneId;

use super::SimError;

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: ZoneId,
    pub col: u32,
    pub row: u32,
    pub center: Point,
}

/// Mix-zone cells laid out on a lattice with pitch `2r - l`; each point is
/// served by the nearest centre.
#[derive(Debug, Clone)]
pub struct MixZoneTopology {
    pub zones: Vec<Zone>,
    pub cols: u32,
    pub rows: u32,
    pub pitch_x: f64,
    pub pitch_y: f64,
    pub radius: f64,
    pub hops_mu_mz: u32,
    pub hops_lbs_mz: u32,
    pub hops_mz_mz: u32,
    /// Access-network id reported by the MU to the zone it belongs to.
    pub an_to_zone: BTreeMap<u32, ZoneId>,
}

/// Received power at `distance` metres, log-distance path loss.
pub fn rss(p: &SystemParameters, distance: f64) -> Result<f64, SimError> {
    if !(distance > 0.0) {
        return Err(SimError::Distance(distance));
    }
    Ok(rss_unchecked(p, distance))
}

pub(crate) fn rss_unchecked(p: &SystemParameters, distance: f64) -> f64 {
    let d = distance.max(1e-3);
    p.rss_ref_power - 10.0 * p.path_loss_exponent * (d / p.rss_ref_distance).log10()
}

/// Distance at which the RSS falls to `level` dBm.
pub fn distance_for_rss(p: &SystemParameters, level: f64) -> f64 {
    p.rss_ref_distance * 10f64.powf((p.rss_ref_power - level) / (10.0 * p.path_loss_exponent))
}

pub fn build_topology(p: &SystemParameters) -> Result<MixZoneTopology, SimError> {
    let counts = derive_topology_counts(p)?;
    let (pitch_x, pitch_y) = zone_pitch(p)?;
    let (cols, rows) = (counts.zones_per_row, counts.zones_per_col);
    if cols == 0 || rows == 0 {
        return Err(SimError::NoZones);
    }
    let mut zones = Vec::with_capacity((cols * rows) as usize);
    for row in 0..rows {
        for col in 0..cols {
            zones.push(Zone {
                id: ZoneId(row * cols + col),
                col,
                row,
                center: Point::new((col as f64 + 0.5) * pitch_x, (row as f64 + 0.5) * pitch_y),
            });
        }
    }
    let an_to_zone = zones.iter().map(|z| (z.id.0, z.id)).collect();
    Ok(MixZoneTopology {
        zones,
        cols,
        rows,
        pitch_x,
        pitch_y,
        radius: p.mix_zone_radius,
        hops_mu_mz: p.hops_mu_mz,
        hops_lbs_mz: p.hops_lbs_mz,
        hops_mz_mz: p.effective_hops_mz_mz(),
        an_to_zone,
    })
}

impl MixZoneTopology {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zone(&self, id: ZoneId) -> &Zone {
        &self.zones[id.0 as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.zones.iter().map(|z| z.id)
    }

    pub fn nearest(&self, pt: Point) -> ZoneId {
        let col = ((pt.x / self.pitch_x).floor().max(0.0) as u32).min(self.cols - 1);
        let row = ((pt.y / self.pitch_y).floor().max(0.0) as u32).min(self.rows - 1);
        ZoneId(row * self.cols + col)
    }

    /// Lattice distance: neighbours, diagonal ones included, are 1 apart.
    pub fn lattice_distance(&self, a: ZoneId, b: ZoneId) -> u32 {
        let (a, b) = (self.zone(a), self.zone(b));
        a.col.abs_diff(b.col).max(a.row.abs_diff(b.row))
    }

    pub fn neighbours(&self, id: ZoneId) -> Vec<ZoneId> {
        self.ids()
            .filter(|&o| self.lattice_distance(id, o) == 1)
            .collect()
    }

    pub fn hops_between(&self, a: ZoneId, b: ZoneId) -> u32 {
        self.hops_mz_mz * self.lattice_distance(a, b)
    }

    pub fn hops_to_lbs(&self, _z: ZoneId) -> u32 {
        self.hops_lbs_mz
    }

    /// Largest distance from any point of a cell to its centre.
    pub fn cell_reach(&self) -> f64 {
        0.5 * self.pitch_x.hypot(self.pitch_y)
    }

    /// True when every point is within hearing range (RSS at least
    /// `rss_min`) of its serving zone.
    pub fn covers_area(&self, p: &SystemParameters) -> bool {
        self.cell_reach() <= distance_for_rss(p, p.rss_min)
    }

    /// Serving RSS at `pt` for zone `z`.
    pub fn rss_from(&self, p: &SystemParameters, z: ZoneId, pt: Point) -> f64 {
        rss_unchecked(p, self.zone(z).center.dist(pt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::defaults;
    use std::collections::BTreeSet;

    #[test]
    fn default_lattice() {
        let t = build_topology(&defaults()).unwrap();
        assert_eq!((t.cols, t.rows), (19, 13));
        assert_eq!(t.len(), 247);
        assert!(t.covers_area(&defaults()));
        assert_eq!(t.hops_mz_mz, 5);
    }

    #[test]
    fn large_radius_zone_count() {
        let mut p = defaults();
        p.mix_zone_radius = 6000.0;
        let t = build_topology(&p).unwrap();
        assert!(t.len() <= 12, "{}", t.len());
    }

    #[test]
    fn one_zone_covers_everything() {
        let mut p = defaults();
        p.mix_zone_radius = 20_000.0;
        let t = build_topology(&p).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.neighbours(ZoneId(0)).is_empty());
    }

    #[test]
    fn hops_symmetric_and_zero_on_diagonal() {
        let t = build_topology(&defaults()).unwrap();
        for a in t.ids().step_by(17) {
            assert_eq!(t.hops_between(a, a), 0);
            for b in t.ids().step_by(13) {
                assert_eq!(t.hops_between(a, b), t.hops_between(b, a));
            }
        }
        assert_eq!(t.neighbours(ZoneId(0)).len(), 3);
        assert_eq!(t.neighbours(ZoneId(20)).len(), 8);
    }

    #[test]
    fn prefix_pools_disjoint() {
        let t = build_topology(&defaults()).unwrap();
        let mut seen = BTreeSet::new();
        for z in t.ids() {
            for i in 0..4 {
                assert!(seen.insert(crate::protocol::Prefix::for_zone(z, i)));
            }
        }
    }

    #[test]
    fn nearest_is_the_closest_centre() {
        let t = build_topology(&defaults()).unwrap();
        for (x, y) in [
            (0.0, 0.0),
            (1899.0, 1901.0),
            (35_999.0, 23_999.0),
            (9_500.0, 400.0),
        ] {
            let pt = Point::new(x, y);
            let n = t.nearest(pt);
            let best = t
                .zones
                .iter()
                .min_by(|a, b| a.center.dist(pt).total_cmp(&b.center.dist(pt)))
                .unwrap();
            assert!((t.zone(n).center.dist(pt) - best.center.dist(pt)).abs() < 1e-9);
        }
    }

    #[test]
    fn rss_model() {
        let mut p = defaults();
        assert_eq!(rss(&p, p.rss_ref_distance).unwrap(), p.rss_ref_power);
        p.path_loss_exponent = 2.0;
        let r = rss(&p, 10.0 * p.rss_ref_distance).unwrap();
        assert!((r - (p.rss_ref_power - 20.0)).abs() < 1e-12);
        assert!(rss(&p, 0.0).is_err());
        assert!(rss(&p, 500.0).unwrap() > rss(&p, 501.0).unwrap());
        let d = distance_for_rss(&p, -85.0);
        assert!((rss(&p, d).unwrap() + 85.0).abs() < 1e-9);
    }
}
