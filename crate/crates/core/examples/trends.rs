//! Prints the headline directional measures of both simulated studies.
//!
//! cargo run --release -p curvecast-core --example trends -- [participants] [seed] [agent toml]
//!
//! The optional third argument overrides agent parameters, for example
//! `'undershoot_sd = 0.06'`.

use std::time::Instant;

use curvecast::agent::AgentParams;
use curvecast::analysis::{fitts_by_group, summarize, GroupKey};
use curvecast::experiment::{run, ExperimentPlan};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().map_or(12, |s| s.parse().expect("participants"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let agent: AgentParams = toml::from_str(&args.next().unwrap_or_default()).expect("agent parameters");

    let t0 = Instant::now();
    let mut plan = ExperimentPlan::study1(n, seed);
    plan.agent = agent;
    let s1 = run(&plan).expect("study 1");
    println!("study 1: {} trials in {:.1?}", s1.len(), t0.elapsed());
    for s in summarize(&s1, &[GroupKey::Distance]) {
        println!("  d={}R  MT {:.3} s  error {:.2}%  n={}", s.key[0].1, s.mean_mt_s, 100.0 * (1.0 - s.accuracy), s.n_trials);
    }
    let at_r: Vec<_> = s1.iter().filter(|r| r.distance_multiple == 1.0).cloned().collect();
    for f in fitts_by_group(&at_r, &[]).expect("fit") {
        println!("  fit at d=R: MT = {:.3} + {:.3}·ID  R² {:.3}", f.fit.intercept_s, f.fit.slope_s_per_bit, f.fit.r_squared);
        for (id, mt) in f.points {
            println!("    ID {id:.2}  MT {mt:.3}");
        }
    }

    let t0 = Instant::now();
    let mut plan = ExperimentPlan::study2(2 * n, seed);
    plan.agent = agent;
    let s2 = run(&plan).expect("study 2");
    println!("study 2: {} trials in {:.1?}", s2.len(), t0.elapsed());
    for s in summarize(&s2, &[GroupKey::Technique]) {
        println!("  {:<11} MT {:.3} s  accuracy {:.2}%  n={}", s.key[0].1, s.mean_mt_s, 100.0 * s.accuracy, s.n_trials);
    }
}
