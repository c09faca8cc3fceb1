use tickphys::hurst::{hurst_pdf, local_hurst, DfaConfig};
use tickphys::invstat::{
    exit_times, first_passage_hist, fit_first_passage, optimal_horizon, ExitTimeConfig, HorizonSource,
};
use tickphys::market_data::{DaySlice, RegularSeries};
use tickphys::obrelax::{
    fit_stretched_exp, mean_relax_vs_kappa, relax_at, relaxation_hist, ImbalanceSeries, RelaxClock,
};
use tickphys::synth::{gen_brownian, gen_fbm, gen_tick_walk, FbmSpec};

#[test]
fn local_hurst_on_persistent_fbm() {
    let path = gen_fbm(&FbmSpec::new(1 << 15, 0.7, 11)).unwrap();
    let series = RegularSeries::from_values(path, 1).unwrap();
    let hs = local_hurst(&series, 4096, 512, &DfaConfig::for_window(4096)).unwrap();
    let s = hs.summary();
    assert!((s.mean - 0.7).abs() < 0.08, "mean {}", s.mean);
    let pdf = hurst_pdf(&hs, 20);
    assert_eq!(pdf.counts.iter().sum::<u64>() as usize, hs.len());
}

#[test]
fn tick_walk_to_optimal_horizon() {
    let prices = gen_tick_walk(1 << 18, 0.0, 21).unwrap();
    let day = DaySlice::from_prices(&prices, 1_000_000);
    let exits = exit_times(&[day], &ExitTimeConfig::up(6)).unwrap();
    assert!(exits.samples.iter().all(|s| s.tau >= 6 && s.tau % 2 == 0));
    let pdf = first_passage_hist(&exits, 10).unwrap();
    let fit = fit_first_passage(&pdf).unwrap();
    let h = optimal_horizon(&pdf, Some(&fit));
    assert_eq!(h.source, HorizonSource::Fit);
    // the walk needs at least 6 steps and peaks well before a few hundred
    assert!(h.tau_star > 6.0 && h.tau_star < 300.0, "tau* {}", h.tau_star);
    assert!((fit.model().tail_exponent() - 1.5).abs() < 0.3, "{fit:?}");
}

#[test]
fn imbalance_relaxation_pipeline() {
    let x = gen_brownian(1 << 17, 1.0, 31).unwrap();
    let sd = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let series = ImbalanceSeries::from_sigma_hat(x.iter().map(|v| (v / sd).tanh()).collect());

    let samples = relax_at(&series, 0.1);
    assert!(samples.len() > 100);
    let hist = relaxation_hist(&samples, RelaxClock::Ticks, 5).unwrap();
    let fit = fit_stretched_exp(&hist.pdf).unwrap();
    assert!(fit.alpha > 0.0 && fit.alpha <= 1.0 && fit.tau_tilde > 0.0);

    let table = mean_relax_vs_kappa(&series, &[0.1, 0.2, 0.3, 0.4], RelaxClock::Ticks, (0.1, 0.6)).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.fit.is_some());
    assert!(table.to_csv().starts_with("kappa,mean_tau,count,censored\n"));
}
