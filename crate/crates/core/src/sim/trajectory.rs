//! City Section Mobility: the vehicle repeatedly picks a random road
//! intersection, drives there along the roads and pauses.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::params::{derive_topology_counts, SystemParameters};

use super::topology::Point;
use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEpoch {
    pub src: Point,
    pub dst: Point,
    /// Corner points from `src` to `dst`, both included.
    pub path: Vec<Point>,
    pub pause: f64,
}

impl TrajectoryEpoch {
    pub fn length(&self) -> f64 {
        self.path.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// Draws epochs from a road grid.
#[derive(Debug, Clone)]
pub struct CsmGenerator {
    nx: u32,
    ny: u32,
    sx: f64,
    sy: f64,
    max_pause: f64,
    pos: Point,
    rng: ChaCha8Rng,
}

impl CsmGenerator {
    pub fn new(p: &SystemParameters, rng: ChaCha8Rng) -> Result<Self, SimError> {
        let c = derive_topology_counts(p)?;
        let mut g = CsmGenerator {
            nx: c.road_count_x,
            ny: c.road_count_y,
            sx: p.road_spacing_x,
            sy: p.road_spacing_y,
            max_pause: p.max_pause,
            pos: Point::new(0.0, 0.0),
            rng,
        };
        g.pos = g.intersection();
        Ok(g)
    }

    fn intersection(&mut self) -> Point {
        let i = self.rng.random_range(0..self.nx);
        let j = self.rng.random_range(0..self.ny);
        Point::new(i as f64 * self.sx, j as f64 * self.sy)
    }

    pub fn position(&self) -> Point {
        self.pos
    }

    pub fn next_epoch(&mut self) -> TrajectoryEpoch {
        let src = self.pos;
        let dst = self.intersection();
        let corner = if self.rng.random_bool(0.5) {
            Point::new(dst.x, src.y)
        } else {
            Point::new(src.x, dst.y)
        };
        let mut path = vec![src];
        for pt in [corner, dst] {
            if *path.last().unwrap() != pt {
                path.push(pt);
            }
        }
        let pause = self.rng.random_range(0.0..=self.max_pause);
        self.pos = dst;
        TrajectoryEpoch {
            src,
            dst,
            path,
            pause,
        }
    }
}

pub fn gen_trajectory(
    p: &SystemParameters,
    seed: u64,
    n_epochs: usize,
) -> Result<Vec<TrajectoryEpoch>, SimError> {
    let mut g = CsmGenerator::new(p, ChaCha8Rng::seed_from_u64(seed))?;
    Ok((0..n_epochs).map(|_| g.next_epoch()).collect())
}

/// Straight piece of motion (or a pause when `from == to`).
#[derive(Debug, Clone, Copy)]
struct Leg {
    t0: f64,
    t1: f64,
    from: Point,
    to: Point,
}

/// Position of a vehicle as a function of time, generated lazily.
#[derive(Debug, Clone)]
pub struct Motion {
    gen: CsmGenerator,
    speed: f64,
    legs: Vec<Leg>,
    horizon: f64,
    first: usize,
    pub epochs: u64,
    pub distance: f64,
}

impl Motion {
    pub fn new(p: &SystemParameters, rng: ChaCha8Rng) -> Result<Self, SimError> {
        Ok(Motion {
            gen: CsmGenerator::new(p, rng)?,
            speed: p.mean_speed,
            legs: Vec::new(),
            horizon: 0.0,
            first: 0,
            epochs: 0,
            distance: 0.0,
        })
    }

    fn extend_to(&mut self, t: f64) {
        if self.speed <= 0.0 {
            self.horizon = f64::INFINITY;
            return;
        }
        while self.horizon <= t {
            let e = self.gen.next_epoch();
            self.epochs += 1;
            for w in e.path.windows(2) {
                let d = w[0].dist(w[1]);
                self.distance += d;
                let t1 = self.horizon + d / self.speed;
                self.legs.push(Leg {
                    t0: self.horizon,
                    t1,
                    from: w[0],
                    to: w[1],
                });
                self.horizon = t1;
            }
            let t1 = self.horizon + e.pause;
            self.legs.push(Leg {
                t0: self.horizon,
                t1,
                from: e.dst,
                to: e.dst,
            });
            self.horizon = t1;
        }
    }

    /// Position at time `t`. Queries must not go back further than the
    /// earliest time not yet released by [`Motion::forget_before`].
    pub fn at(&mut self, t: f64) -> Point {
        self.extend_to(t);
        if self.legs.is_empty() {
            return self.gen.position();
        }
        let legs = &self.legs[self.first..];
        let i = legs.partition_point(|l| l.t1 < t).min(legs.len() - 1);
        let l = legs[i];
        if l.t1 <= l.t0 {
            return l.to;
        }
        let f = ((t - l.t0) / (l.t1 - l.t0)).clamp(0.0, 1.0);
        Point::new(
            l.from.x + f * (l.to.x - l.from.x),
            l.from.y + f * (l.to.y - l.from.y),
        )
    }

    /// Drops legs that ended before `t`.
    pub fn forget_before(&mut self, t: f64) {
        let legs = &self.legs[self.first..];
        let n = legs.partition_point(|l| l.t1 < t);
        self.first += n;
        if self.first > 4096 {
            self.legs.drain(..self.first);
            self.first = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::mobility_stats;
    use crate::params::defaults;

    #[test]
    fn epochs_stay_on_roads() {
        let p = defaults();
        for e in gen_trajectory(&p, 3, 200).unwrap() {
            for pt in &e.path {
                assert_eq!(pt.x % p.road_spacing_x, 0.0);
                assert_eq!(pt.y % p.road_spacing_y, 0.0);
            }
            for w in e.path.windows(2) {
                assert!(w[0].x == w[1].x || w[0].y == w[1].y);
            }
            assert!(e.path.len() <= 3);
            assert!(e.pause >= 0.0 && e.pause <= p.max_pause);
        }
    }

    #[test]
    fn same_seed_same_epochs() {
        let p = defaults();
        assert_eq!(
            gen_trajectory(&p, 11, 50).unwrap(),
            gen_trajectory(&p, 11, 50).unwrap()
        );
        assert_ne!(
            gen_trajectory(&p, 11, 50).unwrap(),
            gen_trajectory(&p, 12, 50).unwrap()
        );
    }

    #[test]
    fn epoch_statistics_match_closed_form() {
        let p = defaults();
        let epochs = gen_trajectory(&p, 42, 100_000).unwrap();
        let n = epochs.len() as f64;
        let mean_len = epochs.iter().map(TrajectoryEpoch::length).sum::<f64>() / n;
        let mean_pause = epochs.iter().map(|e| e.pause).sum::<f64>() / n;
        let el = mobility_stats(&p).unwrap().epoch_length;
        assert!((mean_len / el - 1.0).abs() < 0.02, "{mean_len} vs {el}");
        assert!((mean_pause / (p.max_pause / 2.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn motion_follows_epochs() {
        let p = defaults();
        let mut m = Motion::new(&p, ChaCha8Rng::seed_from_u64(5)).unwrap();
        let start = m.at(0.0);
        let mut last = start;
        for k in 1..2000 {
            let pt = m.at(k as f64 * 0.5);
            assert!(pt.dist(last) <= p.mean_speed * 0.5 + 1e-6);
            last = pt;
            m.forget_before(k as f64 * 0.5);
        }
        assert!(m.epochs > 0);
    }
}
