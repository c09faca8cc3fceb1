use serde::Serialize;
use tickphys::obrelax::{
    compare_models, imbalance_series, mean_relax_vs_kappa, mean_relaxation_from_fit, relax_at, relaxation_hist,
    RelaxClock, RelaxModel,
};

use crate::args::{RelaxArgs, RelaxClockArg};
use crate::commands::{parse_range, tag};
use crate::error::{data, CliError};
use crate::input;
use crate::manifest::Run;

#[derive(Serialize)]
struct FitJson {
    kappa: f64,
    samples: usize,
    censored: usize,
    zero_trades: usize,
    tau_tilde: Option<f64>,
    alpha: Option<f64>,
    sse_stretched: Option<f64>,
    gamma: Option<f64>,
    sse_power: Option<f64>,
    mean_tau: Option<f64>,
    preferred: Option<String>,
    fit_error: Option<String>,
}

pub fn run(a: RelaxArgs) -> Result<(), CliError> {
    if a.kappa.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
        return Err(CliError::Usage("--kappa values must lie in (0, 1)".into()));
    }
    if a.kappa.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--kappa values must be strictly increasing".into()));
    }
    if a.depth == Some(0) || a.bins_per_decade == 0 {
        return Err(CliError::Usage("--depth and --bins-per-decade must be positive".into()));
    }
    let tail: Vec<f64> = parse_range("--tail-range", &a.tail_range, 2)?;
    let kfit: Vec<f64> = parse_range("--kappa-fit-range", &a.kappa_fit_range, 2)?;
    let hours = input::session_hours(&a.session)?;
    let clock = match a.clock {
        RelaxClockArg::Ticks => RelaxClock::Ticks,
        RelaxClockArg::Trades => RelaxClock::Trades,
    };

    let bytes = input::read(&a.input)?;
    let mut book = input::book(&bytes)?;
    let depth = a.depth.unwrap_or(book.depth);
    if depth > book.depth {
        return Err(CliError::Usage(format!("--depth {depth} exceeds the file depth {}", book.depth)));
    }
    let hours = input::book_in_session(&mut book, hours)?;
    let mut series = imbalance_series(&book.snapshots, depth).map_err(data)?;
    series.split_sessions(&hours);

    let mut run = Run::start("relax", &a.out, Some(&bytes));
    run.param("input", a.input.display())
        .param("kappa", a.kappa.iter().map(|k| tag(*k)).collect::<Vec<_>>().join(","))
        .param("depth", depth)
        .param("clock", format!("{:?}", a.clock).to_lowercase())
        .param("bins_per_decade", a.bins_per_decade)
        .param("tail_range", &a.tail_range)
        .param("sessions", series.session_starts.len());

    let mut fit_failures = Vec::new();
    for &k in &a.kappa {
        let samples = relax_at(&series, k);
        let mut out = FitJson {
            kappa: k,
            samples: samples.len(),
            censored: samples.iter().filter(|s| s.censored).count(),
            zero_trades: 0,
            tau_tilde: None,
            alpha: None,
            sse_stretched: None,
            gamma: None,
            sse_power: None,
            mean_tau: None,
            preferred: None,
            fit_error: None,
        };
        match relaxation_hist(&samples, clock, a.bins_per_decade) {
            Ok(h) => {
                out.zero_trades = h.zero_trades;
                run.write(&format!("pdf_k{}.csv", tag(k)), &h.pdf.to_csv())?;
                match compare_models(&h.pdf, (tail[0], tail[1])) {
                    Ok(c) => {
                        out.tau_tilde = Some(c.stretched.tau_tilde);
                        out.alpha = Some(c.stretched.alpha);
                        out.sse_stretched = Some(c.sse_stretched);
                        out.gamma = Some(c.power.gamma);
                        out.sse_power = Some(c.sse_power);
                        out.mean_tau = Some(mean_relaxation_from_fit(&c.stretched));
                        out.preferred = Some(
                            match c.preferred {
                                RelaxModel::StretchedExp => "stretched_exp",
                                RelaxModel::PowerLaw => "power_law",
                            }
                            .into(),
                        );
                    }
                    Err(e) => out.fit_error = Some(e.to_string()),
                }
            }
            Err(e) => out.fit_error = Some(e.to_string()),
        }
        if let Some(e) = &out.fit_error {
            fit_failures.push(format!("kappa={k}: {e}"));
        }
        run.write_json(&format!("fit_k{}.json", tag(k)), &out)?;
    }

    let table = mean_relax_vs_kappa(&series, &a.kappa, clock, (kfit[0], kfit[1])).map_err(data)?;
    run.write("mean_vs_kappa.csv", &table.to_csv())?;
    if let Some(fit) = &table.fit {
        run.write_json("mean_vs_kappa_fit.json", fit)?;
    }
    run.finish()?;
    if fit_failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Fit(format!("fit failed ({})", fit_failures.join("; "))))
    }
}
