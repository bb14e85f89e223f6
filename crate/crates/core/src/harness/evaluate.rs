//! Evaluation episodes and paired policy comparison.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{
    histogram, observed_range, write_histogram_csv, write_metrics_csv, DailyMetrics, Metric,
    MetricContext, MetricsAccumulator, Summary,
};
use super::policy::Policy;
use crate::environment::{write_trace_csv, Environment, TraceRow};
use crate::error::{Error, Result};
use crate::thermal::ThermalState;
use crate::weather::with_path;

/// Independent random streams for one evaluation day. Day `d` under seed `s`
/// gets the same streams whichever policy runs it, so weather, schedule and
/// initial state match across policies.
pub struct DayStreams {
    /// Weather, schedule and initial temperatures.
    pub exo: ChaCha8Rng,
    /// Occupant comfort votes.
    pub comfort: ChaCha8Rng,
    /// Policy-internal randomness.
    pub policy: ChaCha8Rng,
}

impl DayStreams {
    pub fn new(seed: u64, day: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(day.wrapping_mul(4).wrapping_add(id));
            rng
        };
        Self { exo: stream(0), comfort: stream(1), policy: stream(2) }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub rows: Vec<TraceRow>,
    /// Accumulated online while stepping.
    pub metrics: DailyMetrics,
    pub final_state: ThermalState,
}

/// Runs one day. `start` continues from a previous day's thermal state;
/// `None` draws a fresh initial state.
pub fn run_episode(
    policy: &Policy,
    env: &mut Environment,
    ctx: &MetricContext,
    streams: &mut DayStreams,
    start: Option<ThermalState>,
) -> Result<EpisodeResult> {
    policy.check(env)?;
    let (mut state, _) = match start {
        Some(x) => env.reset_from(x, &mut streams.exo)?,
        None => env.reset(&mut streams.exo)?,
    };
    let mut acc = MetricsAccumulator::new(*ctx);
    let mut rows = Vec::with_capacity(ctx.steps);
    loop {
        let u = policy.action(&state, env, &mut streams.policy)?;
        let step = env.step(u, &mut streams.comfort)?;
        let row = TraceRow::from_step(&step);
        acc.push(&row);
        rows.push(row);
        state = step.state;
        if step.done {
            break;
        }
    }
    Ok(EpisodeResult { rows, metrics: acc.finish()?, final_state: state.thermal })
}

/// Consecutive days with the thermal state carried over, as in a week-long run.
pub fn run_days(
    policy: &Policy,
    env: &Environment,
    ctx: &MetricContext,
    seed: u64,
    days: usize,
) -> Result<Vec<EpisodeResult>> {
    let mut env = env.clone();
    let mut out: Vec<EpisodeResult> = Vec::with_capacity(days);
    for day in 0..days {
        let start = out.last().map(|r| r.final_state);
        let mut streams = DayStreams::new(seed, day as u64);
        out.push(run_episode(policy, &mut env, ctx, &mut streams, start)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub name: String,
    pub days: Vec<DailyMetrics>,
    /// Traces of the first few days, if requested.
    pub traces: Vec<Vec<TraceRow>>,
}

impl PolicyRun {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.days.iter().map(|m| metric.of(m)).collect()
    }

    pub fn summary(&self, metric: Metric) -> Result<Summary> {
        Summary::of(&self.values(metric))
    }
}

/// Independent days per policy, each from a fresh initial state, with day
/// `d` seeded identically for every policy.
pub fn compare(
    policies: &[Policy],
    env: &Environment,
    ctx: &MetricContext,
    days: usize,
    seed: u64,
    keep_traces: usize,
) -> Result<Vec<PolicyRun>> {
    if policies.is_empty() {
        return Err(Error::Empty("no policies to compare".into()));
    }
    if days == 0 {
        return Err(Error::param("days", "must be at least 1"));
    }
    policies
        .iter()
        .map(|policy| {
            let mut env = env.clone();
            let mut run = PolicyRun { name: policy.name().into(), days: Vec::with_capacity(days), traces: Vec::new() };
            for day in 0..days {
                let mut streams = DayStreams::new(seed, day as u64);
                let r = run_episode(policy, &mut env, ctx, &mut streams, None)?;
                run.days.push(r.metrics);
                if day < keep_traces {
                    run.traces.push(r.rows);
                }
            }
            Ok(run)
        })
        .collect()
}

pub const HISTOGRAM_METRICS: [Metric; 3] = [Metric::EnergyKj, Metric::ComfortScore, Metric::Return];

/// Writes `metrics_<policy>.csv`, `hist_<metric>_<policy>.csv`, `summary.csv`
/// and any kept traces. Histograms share bins across policies: equal-width
/// over the range observed in all runs together.
pub fn write_comparison(runs: &[PolicyRun], dir: &Path, bins: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for run in runs {
        write_metrics_csv(&run.days, &dir.join(format!("metrics_{}.csv", run.name)))?;
        for (day, rows) in run.traces.iter().enumerate() {
            write_trace_csv(rows, &dir.join(format!("trace_{}_{day}.csv", run.name)))?;
        }
    }
    for metric in HISTOGRAM_METRICS {
        let range = observed_range(runs.iter().flat_map(|r| r.values(metric)));
        let (lo, hi) = range.unwrap_or((0.0, 0.0));
        for run in runs {
            let h = histogram(&run.values(metric), lo, hi, bins)?;
            write_histogram_csv(&h, &dir.join(format!("hist_{}_{}.csv", metric.name(), run.name)))?;
        }
    }
    write_summary_csv(runs, &dir.join("summary.csv"))
}

#[derive(serde::Serialize)]
struct SummaryRow<'a> {
    policy: &'a str,
    metric: &'a str,
    n: usize,
    mean: f64,
    std: f64,
    ci_lo: f64,
    ci_hi: f64,
}

pub fn write_summary_csv(runs: &[PolicyRun], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for run in runs {
        for metric in Metric::ALL {
            let s = run.summary(metric)?;
            w.serialize(SummaryRow {
                policy: &run.name,
                metric: metric.name(),
                n: s.n,
                mean: s.mean,
                std: s.std,
                ci_lo: s.ci_lo,
                ci_hi: s.ci_hi,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::GreedyParams;
    use crate::harness::config::Settings;
    use crate::harness::metrics::daily_metrics;

    fn setup() -> (Environment, MetricContext) {
        let s = Settings::default();
        let env = s.environment().unwrap();
        let ctx = MetricContext::new(s.dt, env.config());
        (env, ctx)
    }

    fn one_day(policy: &Policy, seed: u64) -> EpisodeResult {
        let (mut env, ctx) = setup();
        run_episode(policy, &mut env, &ctx, &mut DayStreams::new(seed, 0), None).unwrap()
    }

    #[test]
    fn zero_policy_uses_no_energy() {
        let r = one_day(&Policy::Zero, 3);
        assert_eq!(r.rows.len(), 144);
        assert_eq!(r.metrics.energy_kj, 0.0);
    }

    #[test]
    fn online_metrics_match_trace_metrics() {
        let (_, ctx) = setup();
        for policy in [Policy::Zero, Policy::Random, Policy::Greedy(GreedyParams::default())] {
            for seed in 0..5 {
                let r = one_day(&policy, seed);
                let m = daily_metrics(&r.rows, &ctx).unwrap();
                assert_eq!(m, r.metrics);
                assert!(m.comfort_score <= m.occupied_steps);
            }
        }
    }

    #[test]
    fn days_are_paired_across_policies() {
        let a = one_day(&Policy::Zero, 11);
        let b = one_day(&Policy::Random, 11);
        assert_eq!(a.rows[0].t_air, b.rows[0].t_air);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.t_out, x.q_solar, x.occupied), (y.t_out, y.q_solar, y.occupied));
        }
    }

    #[test]
    fn self_comparison_is_identical() {
        let (env, ctx) = setup();
        let g = Policy::Greedy(GreedyParams::default());
        let runs = compare(&[g.clone(), g], &env, &ctx, 5, 9, 0).unwrap();
        assert_eq!(runs[0].days, runs[1].days);
        assert_eq!(runs[0].days.len(), 5);
    }

    #[test]
    fn chained_days_carry_the_state() {
        let (env, ctx) = setup();
        let week = run_days(&Policy::Zero, &env, &ctx, 4, 7).unwrap();
        assert_eq!(week.len(), 7);
        for pair in week.windows(2) {
            assert_eq!(pair[1].rows[0].t_air, pair[0].final_state.t_air);
            assert_eq!(pair[1].rows[0].t_wall, pair[0].final_state.t_wall);
        }
    }

    #[test]
    fn mismatched_actor_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = crate::neural::MlpParams::init(
            &[3, 4, 1],
            crate::neural::Activation::Relu,
            crate::neural::Activation::Identity,
            &mut rng,
        )
        .unwrap();
        assert!(Policy::ddpg(net, 1000.0).is_err());
    }
}
