//! Fitting a CSV time series written by `ringstar experiment`.
//!
//! Usage: `cargo run --example fit_series -- <series.csv> <decaying_cosine|power_law|loglinear> <t_min> <t_max>`

use ringstar::fitting::{fit_decaying_cosine, fit_loglinear, fit_power_law, CosineFitOptions};
use ringstar::observables::TimeSeries;
use ringstar::Error;

fn main() -> ringstar::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() != 4 {
        return Err(Error::InvalidInput("expected <series.csv> <model> <t_min> <t_max>".into()));
    }
    let series = TimeSeries::from_csv(&std::fs::read_to_string(&args[0])?)?;
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad time {s:?}")));
    let window = (parse(&args[2])?, parse(&args[3])?);
    let fit = match args[1].as_str() {
        "decaying_cosine" => fit_decaying_cosine(&series, window, CosineFitOptions::default())?,
        "power_law" => fit_power_law(&series, window)?,
        "loglinear" => fit_loglinear(&series, window)?,
        other => return Err(Error::InvalidInput(format!("unknown model {other:?}")).into()),
    };
    println!("{}", fit.to_json());
    Ok(())
}
