use bimi_lab::env::gridseq::{GridSeqConfig, Target};
use bimi_lab::env::GridSeqEnv;

fn t(kind: &str, color: &str, room: usize) -> Target {
    Target { kind: kind.into(), color: color.into(), room }
}

fn main() {
    // rooms [1, 0, 2]: first target in the middle room, second right next to
    // the spawn (bait for order-insensitive reward models), third far right
    for seed in 0..600u64 {
        let cfg = GridSeqConfig {
            rows: 1, cols: 3, room_size: 5,
            targets: vec![t("ball", "red", 1), t("key", "blue", 0), t("box", "green", 2)],
            seed, max_steps: 160,
        };
        let Ok(env) = GridSeqEnv::new(&cfg) else { continue };
        let cells = env.target_cells();
        let (c1, c2, c3) = (cells[0].1, cells[1].1, cells[2].1);
        let d2_spawn = (c2.0 - 1).abs() + (c2.1 - 1).abs();
        let Some(plan) = bimi_lab::env::solver::solve_gridseq(&env, 0) else { continue };
        if d2_spawn <= 3 && plan.len() <= 44 && c1.0 >= 8 && c3.0 >= 14 {
            println!("seed {seed}: t1 {c1:?} t2 {c2:?} t3 {c3:?} d2spawn {d2_spawn} plan {}", plan.len());
        }
        if seed == 599 { break }
    }
}
