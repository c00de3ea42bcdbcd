use bimi_lab::agent::trainer::{train, TrainSetup};
use bimi_lab::agent::{RewardSourceConfig, TrainConfig};
use bimi_lab::env::EnvConfig;
use bimi_lab::scorer::oracle::{OracleConfig, OracleKind};

fn main() {
    let env = EnvConfig::load(std::path::Path::new("experiments/gridseq-env.json")).unwrap();
    let e = env.build().unwrap();
    println!("{}", e.render());
    println!("targets: {:?}", e.target_cells());
    let walkthrough = e.default_walkthrough();
    for i in &walkthrough.instructions { println!("  {} -> {:?}", i.text, i.events); }
    let train_cfg = TrainConfig {
        nproc: 8, nstep: 256, epochs: 150, eval_every: 10, eval_episodes: 10, hidden: 64,
        ..TrainConfig::gridseq_profile()
    };
    let setup = TrainSetup {
        env, walkthrough,
        reward: RewardSourceConfig::Oracle {
            oracle: OracleConfig::new(OracleKind::Perfect, 2),
            beta: 0.5, gamma: 0.95,
        },
        threshold: None, train: train_cfg, seed: 2,
        manifest: serde_json::json!({}),
    };
    let rec = train(&setup, None).unwrap();
    for ev in &rec.evals {
        println!("epoch {:>3}: score={:.3} sr={:.2} ret={:.2} s_k={:?}", ev.epoch, ev.score, ev.success_rate, ev.mean_return, ev.success_rates);
    }
    for m in rec.metrics.iter().step_by(10) {
        println!("m{:>3}: r_e={:.4} r_v={:.4} r_t={:.4} pi={:.4} v={:.4} H={:.3} eps={}", m.epoch, m.mean_r_e, m.mean_r_v, m.mean_r_t, m.policy_loss, m.value_loss, m.entropy, m.episodes);
    }
}
