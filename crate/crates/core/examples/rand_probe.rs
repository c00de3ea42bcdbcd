use bimi_lab::env::{Action, EnvConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env_cfg = EnvConfig::load(std::path::Path::new("experiments/gridseq-env.json")).unwrap();
    let mut env = env_cfg.build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut t1, mut t2, mut t3) = (0, 0, 0);
    let episodes = 2000;
    for _ in 0..episodes {
        env.reset(0);
        loop {
            let a = Action::from_index(rng.gen_range(0..6)).unwrap();
            let sr = env.step(a).unwrap();
            if sr.done {
                let f = &sr.state.flags;
                if f[0] { t1 += 1 }
                if f[1] { t2 += 1 }
                if f[2] { t3 += 1 }
                break;
            }
        }
    }
    println!("episodes {episodes}: t1 {t1} t2 {t2} t3 {t3}");
}
