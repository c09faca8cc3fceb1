use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tickphys::market_data::{write_book, write_ticks, BookFile, BookSnapshot, DaySlice, Level, RegularSeries, TickFile, TickSize};
use tickphys::synth::{gen_brownian, gen_fbm, gen_tick_walk, FbmSpec};

use crate::args::{Model, SynthArgs};
use crate::error::{data, CliError};
use crate::manifest::Run;

const DAY_NS: i64 = 86_400_000_000_000;
/// 2000-01-03 00:00 UTC, the day synthetic tick files are stamped on.
const EPOCH_NS: i64 = 946_857_600_000_000_000;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Event spacing that keeps `n` events inside one UTC day.
fn spacing(n: usize) -> i64 {
    (DAY_NS / n.max(1) as i64).max(1)
}

pub fn run(a: SynthArgs) -> Result<(), CliError> {
    let tick_size = TickSize::parse(&a.tick_size)
        .ok_or_else(|| CliError::Usage(format!("--tick-size: cannot parse {:?}", a.tick_size)))?;
    if a.n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    if matches!(a.model, Model::Fbm) && a.hurst.is_none() {
        return Err(CliError::Usage("--model fbm needs --hurst".into()));
    }
    if matches!(a.model, Model::Book) && a.depth == 0 {
        return Err(CliError::Usage("--depth must be positive".into()));
    }

    let mut run = Run::start("synth", &a.out, None);
    run.param("model", format!("{:?}", a.model).to_lowercase())
        .param("n", a.n)
        .param("seed", a.seed);
    match a.model {
        Model::Fbm | Model::Brownian => {
            let (name, values) = if let Model::Fbm = a.model {
                let h = a.hurst.unwrap_or_default();
                run.param("hurst", h).param("scale", a.scale);
                let spec = FbmSpec {
                    scale: a.scale,
                    ..FbmSpec::new(a.n, h, a.seed)
                };
                ("fbm.csv", gen_fbm(&spec).map_err(usage)?)
            } else {
                run.param("scale", a.scale);
                ("brownian.csv", gen_brownian(a.n, a.scale, a.seed).map_err(usage)?)
            };
            let series = RegularSeries::from_values(values, 1).map_err(data)?;
            run.write(name, &series.to_csv())?;
        }
        Model::Tickwalk => {
            run.param("p_zero", a.p_zero).param("tick_size", &a.tick_size);
            let walk = gen_tick_walk(a.n, a.p_zero, a.seed).map_err(usage)?;
            let day = DaySlice::from_prices(&walk, spacing(a.n));
            let file = TickFile {
                tick_size,
                events: day.events,
            };
            run.write("tickwalk.csv", &write_ticks(&file))?;
        }
        Model::Book => {
            run.param("p_zero", a.p_zero)
                .param("tick_size", &a.tick_size)
                .param("depth", a.depth);
            let file = synthetic_book(a.n, a.p_zero, a.depth, a.seed, tick_size).map_err(usage)?;
            run.write("book.csv", &write_book(&file))?;
        }
    }
    run.finish()
}

/// Book snapshots whose imbalance follows `tanh(x/20)` of a tick walk `x`,
/// with random level volumes and trade counts; the mid price follows the
/// same walk.
fn synthetic_book(
    n: usize,
    p_zero: f64,
    depth: usize,
    seed: u64,
    tick_size: TickSize,
) -> Result<BookFile, tickphys::synth::SynthError> {
    let walk = gen_tick_walk(n, p_zero, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb00c);
    let dt = spacing(n);
    let snapshots = walk
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = (x as f64 / 20.0).tanh();
            let mut level = |price: i64, weight: f64| Level {
                price,
                volume: (rng.gen_range(20.0..200.0) * weight).round().max(1.0) as u64,
            };
            let mid = 10_000 + x;
            let bids = (0..depth as i64).map(|k| level(mid - k, 1.0 + s)).collect();
            let asks = (0..depth as i64).map(|k| level(mid + 1 + k, 1.0 - s)).collect();
            BookSnapshot {
                timestamp_ns: EPOCH_NS + i as i64 * dt,
                bids,
                asks,
                trade_count_delta: rng.gen_range(0..4),
            }
        })
        .collect();
    Ok(BookFile {
        tick_size,
        depth,
        snapshots,
    })
}
