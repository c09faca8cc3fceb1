use serde::Serialize;
use std::fmt::Write as _;
use tickphys::invstat::{
    entry_time_distribution, exit_times, first_passage_hist, fit_first_passage, optimal_horizon, power_law_fit, Clock,
    ExitTimeConfig, MoveDirection, PowerLawFit,
};

use crate::args::{ClockArg, DirectionArg, InvstatArgs};
use crate::error::{data, CliError};
use crate::input;
use crate::manifest::Run;

#[derive(Serialize)]
struct FitJson {
    target: i64,
    alpha: Option<f64>,
    nu: Option<f64>,
    beta: Option<f64>,
    tau0: Option<f64>,
    sse: Option<f64>,
    tau_star: f64,
    tau_star_source: String,
    boundary_mode: bool,
    samples: usize,
    censored: usize,
    fit_error: Option<String>,
}

pub fn run(a: InvstatArgs) -> Result<(), CliError> {
    if a.target.iter().any(|&r| r == 0) {
        return Err(CliError::Usage("--target values must be nonzero".into()));
    }
    if a.bins_per_decade == 0 || !(a.entry_bin > 0.0) {
        return Err(CliError::Usage("--bins-per-decade and --entry-bin must be positive".into()));
    }
    let hours = input::session_hours(&a.session)?;
    let config = ExitTimeConfig {
        target: 1,
        direction: match a.direction {
            DirectionArg::Up => MoveDirection::Up,
            DirectionArg::Down => MoveDirection::Down,
            DirectionArg::Both => MoveDirection::Both,
        },
        clock: match a.clock {
            ClockArg::Tick => Clock::TickTime,
            ClockArg::Wall => Clock::WallTime,
        },
        intraday_only: !a.cross_days,
    };

    let bytes = input::read(&a.input)?;
    let ticks = input::ticks(&bytes, hours)?;
    let session_s = ticks.days[0].session.length_ns() as f64 * 1e-9;

    let mut run = Run::start("invstat", &a.out, Some(&bytes));
    run.param("input", a.input.display())
        .param("target", a.target.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","))
        .param("direction", format!("{:?}", a.direction).to_lowercase())
        .param("clock", format!("{:?}", a.clock).to_lowercase())
        .param("bins_per_decade", a.bins_per_decade)
        .param("intraday_only", config.intraday_only)
        .param("days", ticks.days.len())
        .param("dropped_events", ticks.dropped);

    let mut fit_failures = Vec::new();
    let mut scaling = String::from("R,tau_star\n");
    let mut points = Vec::new();
    for &r in &a.target {
        let cfg = ExitTimeConfig { target: r, ..config };
        let exits = exit_times(&ticks.days, &cfg).map_err(data)?;
        let pdf = first_passage_hist(&exits, a.bins_per_decade).map_err(data)?;
        let fitted = fit_first_passage(&pdf);
        let fit_error = fitted.as_ref().err().map(|e| e.to_string());
        if let Some(e) = &fit_error {
            fit_failures.push(format!("R={r}: {e}"));
        }
        let fit = fitted.as_ref().ok();
        let horizon = optimal_horizon(&pdf, fit);
        run.write(&format!("pdf_R{r}.csv"), &pdf.to_csv())?;
        run.write_json(
            &format!("fit_R{r}.json"),
            &FitJson {
                target: r,
                alpha: fit.map(|f| f.alpha),
                nu: fit.map(|f| f.nu),
                beta: fit.map(|f| f.beta),
                tau0: fit.map(|f| f.tau0),
                sse: fit.map(|f| f.sse),
                tau_star: horizon.tau_star,
                tau_star_source: format!("{:?}", horizon.source).to_lowercase(),
                boundary_mode: horizon.boundary_mode,
                samples: exits.samples.len(),
                censored: exits.censored,
                fit_error,
            },
        )?;
        let entries = entry_time_distribution(&exits.samples, a.entry_bin, session_s);
        run.write(&format!("entry_times_R{r}.csv"), &entries.to_csv("t_lo", "t_hi"))?;
        let _ = writeln!(scaling, "{r},{}", horizon.tau_star);
        points.push((r.unsigned_abs() as f64, horizon.tau_star));
    }
    run.write("scaling.csv", &scaling)?;
    if points.len() >= 3 && points.iter().all(|p| p.1 > 0.0) {
        let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let fit: PowerLawFit = power_law_fit(&x, &y).map_err(data)?;
        run.write_json("scaling_fit.json", &fit)?;
    }
    run.finish()?;
    if fit_failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Fit(format!("model fit failed ({})", fit_failures.join("; "))))
    }
}
