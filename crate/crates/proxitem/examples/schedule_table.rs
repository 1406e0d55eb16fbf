//! Dumps the coefficient schedule for a given inverse condition number,
//! including the four identity residuals and the stationary limits the
//! coefficients converge to.
//!
//! Run with `cargo run --example schedule_table [q] [horizon]`.

use proxitem::bench::cmd_schedule;

fn main() {
    let mut args = std::env::args().skip(1);
    let q: f64 = args
        .next()
        .map(|s| s.parse().expect("q must be a number in (0, 1)"))
        .unwrap_or(0.25);
    let horizon: usize = args
        .next()
        .map(|s| s.parse().expect("horizon must be a nonnegative integer"))
        .unwrap_or(15);
    match cmd_schedule(q, horizon) {
        Ok(csv) => print!("{csv}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    }
}
