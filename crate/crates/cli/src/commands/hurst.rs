use tickphys::hurst::{hurst_pdf, local_hurst, DfaConfig};

use crate::args::HurstArgs;
use crate::commands::parse_range;
use crate::error::{data, CliError};
use crate::input;
use crate::manifest::Run;

pub fn run(a: HurstArgs) -> Result<(), CliError> {
    let mut config = match &a.boxes {
        Some(b) => {
            let v: Vec<usize> = parse_range("--boxes", b, 3)?;
            DfaConfig::geometric(v[0], v[1], v[2])
        }
        None => DfaConfig::for_window(a.window),
    };
    config.poly_order = a.order;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.shift == 0 || a.window == 0 {
        return Err(CliError::Usage("--window and --shift must be positive".into()));
    }
    if a.pdf_bins == 0 {
        return Err(CliError::Usage("--pdf-bins must be positive".into()));
    }
    let hours = input::session_hours(&a.session)?;

    let bytes = input::read(&a.input)?;
    let series = input::regular_series(&bytes, a.interval, hours)?;
    let hs = local_hurst(&series, a.window, a.shift, &config).map_err(data)?;

    let mut run = Run::start("hurst", &a.out, Some(&bytes));
    run.param("input", a.input.display())
        .param("window", a.window)
        .param("shift", a.shift)
        .param("order", a.order)
        .param(
            "boxes",
            format!("{}:{}:{}", config.box_sizes[0], config.max_box(), config.box_sizes.len()),
        );
    run.write("hurst.csv", &hs.to_csv())?;
    run.write_json("hurst_summary.json", &hs.summary())?;
    run.write("hurst_pdf.csv", &hurst_pdf(&hs, a.pdf_bins).to_csv("h_lo", "h_hi"))?;
    run.finish()
}
