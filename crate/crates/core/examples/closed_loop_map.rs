//! Prints the largest real part of the full 10-state closed-loop spectrum
//! over a coarse (beta, d) grid, next to the verdict of the 4x4 sway model.
//!
//!     cargo run --release -p cranesim --example closed_loop_map

use cranesim::control::ControllerGains;
use cranesim::stability::{full_closed_loop_abscissa, is_hurwitz, linearized_a};
use cranesim::CraneParameters;

fn main() -> cranesim::Result<()> {
    let params = CraneParameters::NK1000;
    let gains = ControllerGains::nk1000();
    let ropes = [0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 20.0];

    print!("{:>6}", "beta");
    for d in ropes {
        print!("{:>10}", format!("d={d}"));
    }
    println!("   4x4 model");
    for i in 0..8 {
        let beta = 0.05 + 0.2 * i as f64;
        print!("{beta:>6.2}");
        let mut verdicts = Vec::new();
        for d in ropes {
            print!("{:>+10.4}", full_closed_loop_abscissa(&params, &gains, beta, d)?);
            verdicts.push(is_hurwitz(&linearized_a(&params, &gains, beta, d)?).verdict.to_string());
        }
        verdicts.dedup();
        println!("   {}", verdicts.join("/"));
    }
    Ok(())
}
