//! City Section Mobility trajectories over the road grid and the mix-zone
//! lattice they cross.

use fdmm::analytic::mobility_stats;
use fdmm::defaults;
use fdmm::sim::{build_topology, gen_trajectory, rss};

fn main() {
    let p = defaults();
    let topo = build_topology(&p).unwrap();
    println!(
        "{} mix zones ({} x {}), pitch {:.0} x {:.0} m",
        topo.len(),
        topo.cols,
        topo.rows,
        topo.pitch_x,
        topo.pitch_y
    );
    for d in [100.0, 500.0, 1000.0, 2000.0] {
        println!("  rss at {d:6.0} m: {:7.2} dBm", rss(&p, d).unwrap());
    }

    let epochs = gen_trajectory(&p, 7, 20_000).unwrap();
    let n = epochs.len() as f64;
    let mean_len = epochs.iter().map(|e| e.length()).sum::<f64>() / n;
    let mean_pause = epochs.iter().map(|e| e.pause).sum::<f64>() / n;
    let steps: u64 = epochs
        .iter()
        .map(|e| topo.lattice_distance(topo.nearest(e.src), topo.nearest(e.dst)) as u64)
        .sum();
    let m = mobility_stats(&p).unwrap();
    println!(
        "mean epoch length {mean_len:.1} m (model {:.1})",
        m.epoch_length
    );
    println!(
        "mean pause        {mean_pause:.2} s (model {:.2})",
        m.pause_time
    );
    println!("zone steps/epoch  {:.3}", steps as f64 / n);

    let first = &epochs[0];
    println!(
        "first epoch: {:?} -> {:?} via {} point(s)",
        first.src,
        first.dst,
        first.path.len()
    );
}
