// Memorization with and without a knowledge base, on random bit strings.
//
// cargo run --release --example memorization_sim

use kard::sim::{run_simulation, run_sweep, sweep_csv, SimConfig, Sweep};

pub fn run_example() -> anyhow::Result<()> {
    let config = SimConfig {
        trials: 50,
        tests_per_trial: 200,
        ..SimConfig::default()
    };
    let r = run_simulation(&config)?;
    println!("m = {} (formula {:.2})", r.m, r.m_raw);
    println!(
        "error: knowledge-augmented {:.4}, best prefix learner {:.4} (closed form {:.4}), verbatim {:.4}",
        r.err_phi.rate, r.err_opt.rate, r.err_opt_analytic, r.err_naive.rate
    );
    println!(
        "bits: knowledge-augmented {:.0} (budget {}), verbatim {:.0}",
        r.mean_bits_phi, r.bit_budget, r.bits_naive
    );

    let sweep: Sweep = "R=0:400:100".parse()?;
    let small = SimConfig {
        trials: 10,
        ..config
    };
    print!("\n{}", sweep_csv(sweep.param, &run_sweep(&small, &sweep)?));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
