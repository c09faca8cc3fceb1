use tickphys::selftest::{run_suite, SelftestOptions};

use crate::args::SelftestArgs;
use crate::error::CliError;
use crate::manifest::Run;

pub fn run(a: SelftestArgs) -> Result<(), CliError> {
    let mut run = Run::start("selftest", &a.out, None);
    let suite = run_suite(&SelftestOptions::default());
    for r in &suite.results {
        println!("{}", r.line());
    }
    run.write("report.json", &suite.report_json())?;
    for art in &suite.artifacts {
        run.write(&art.name, &art.contents)?;
    }
    run.finish()?;
    let failed = suite.results.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Fit(format!("{failed} of {} criteria failed", suite.results.len())))
    }
}
