//! Daily metrics, summary statistics and histogram counts.

use std::path::Path;

use serde::Serialize;

use crate::environment::{EnvConfig, TraceRow};
use crate::error::{Error, Result};
use crate::occupant::Comfort;
use crate::weather::with_path;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DailyMetrics {
    /// Σ|u|·dt / 1000 over the day.
    pub energy_kj: f64,
    /// Occupied steps with the comfortable label.
    pub comfort_score: usize,
    pub occupied_steps: usize,
    /// Occupied steps with the air temperature outside the band.
    pub constraint_violations: usize,
    /// Sum of rewards; not part of the daily CSV.
    pub total_return: f64,
}

/// What a metric computation needs beyond the trace itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricContext {
    pub dt: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// Number of rows in a complete trace.
    pub steps: usize,
}

impl MetricContext {
    pub fn new(dt: f64, cfg: &EnvConfig) -> Self {
        Self {
            dt,
            band_lo: cfg.band_lo,
            band_hi: cfg.band_hi,
            steps: cfg.episode_len,
        }
    }
}

/// Online accumulator; fed one row at a time during an episode.
#[derive(Debug, Clone, Copy)]
pub struct MetricsAccumulator {
    ctx: MetricContext,
    rows: usize,
    metrics: DailyMetrics,
}

impl MetricsAccumulator {
    pub fn new(ctx: MetricContext) -> Self {
        Self { ctx, rows: 0, metrics: DailyMetrics::default() }
    }

    pub fn push(&mut self, row: &TraceRow) {
        let m = &mut self.metrics;
        m.energy_kj += row.u.abs() * self.ctx.dt / 1000.0;
        m.total_return += row.reward;
        if row.occupied != 0 {
            m.occupied_steps += 1;
            if row.comfort == Comfort::Comfortable.label() {
                m.comfort_score += 1;
            }
            if row.t_air < self.ctx.band_lo || row.t_air > self.ctx.band_hi {
                m.constraint_violations += 1;
            }
        }
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(self) -> Result<DailyMetrics> {
        if self.rows != self.ctx.steps {
            return Err(Error::Shape(format!(
                "incomplete trace: {} rows, expected {}",
                self.rows, self.ctx.steps
            )));
        }
        Ok(self.metrics)
    }
}

pub fn daily_metrics(rows: &[TraceRow], ctx: &MetricContext) -> Result<DailyMetrics> {
    let mut acc = MetricsAccumulator::new(*ctx);
    for r in rows {
        acc.push(r);
    }
    acc.finish()
}

/// The per-day quantities that get summaries and histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    EnergyKj,
    ComfortScore,
    OccupiedSteps,
    Violations,
    Return,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::EnergyKj,
        Metric::ComfortScore,
        Metric::OccupiedSteps,
        Metric::Violations,
        Metric::Return,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::EnergyKj => "energy_kj",
            Metric::ComfortScore => "comfort_score",
            Metric::OccupiedSteps => "occupied_steps",
            Metric::Violations => "violations",
            Metric::Return => "return",
        }
    }

    pub fn of(self, m: &DailyMetrics) -> f64 {
        match self {
            Metric::EnergyKj => m.energy_kj,
            Metric::ComfortScore => m.comfort_score as f64,
            Metric::OccupiedSteps => m.occupied_steps as f64,
            Metric::Violations => m.constraint_violations as f64,
            Metric::Return => m.total_return,
        }
    }
}

/// Mean, sample standard deviation and normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("summary of no values".into()));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * std / (n as f64).sqrt();
        Ok(Self { n, mean, std, ci_lo: mean - half, ci_hi: mean + half })
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Equal-width bins over `[lo, hi]`; the last bin is closed. A degenerate
/// range is widened to `[lo, lo + 1]`.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<HistBin>> {
    if bins == 0 {
        return Err(Error::param("hist_bins", "must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::param("histogram range", "must be finite with lo <= hi"));
    }
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistBin> = (0..bins)
        .map(|i| HistBin {
            bin_lo: lo + width * i as f64,
            bin_hi: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in values {
        if !(lo..=hi).contains(&v) {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    Ok(out)
}

/// Smallest and largest finite value, if any.
pub fn observed_range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

#[derive(Serialize)]
struct MetricsCsvRow {
    day: usize,
    energy_kj: f64,
    comfort_score: usize,
    occupied_steps: usize,
    violations: usize,
}

pub fn write_metrics_csv(days: &[DailyMetrics], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for (day, m) in days.iter().enumerate() {
        w.serialize(MetricsCsvRow {
            day,
            energy_kj: m.energy_kj,
            comfort_score: m.comfort_score,
            occupied_steps: m.occupied_steps,
            violations: m.constraint_violations,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_histogram_csv(bins: &[HistBin], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(steps: usize) -> MetricContext {
        MetricContext { dt: 600.0, band_lo: 20.0, band_hi: 30.0, steps }
    }

    fn row(u: f64, occupied: bool, comfort: u8, t_air: f64) -> TraceRow {
        TraceRow {
            k: 0,
            t_air,
            t_wall: t_air,
            t_out: 25.0,
            q_solar: 0.0,
            occupied: occupied as u8,
            comfort,
            u,
            reward: -1.0,
        }
    }

    #[test]
    fn three_step_examples() {
        let rows = [row(100.0, true, 2, 22.0), row(-100.0, true, 1, 22.0), row(0.0, true, 2, 22.0)];
        let m = daily_metrics(&rows, &ctx(3)).unwrap();
        assert_eq!(m.comfort_score, 2);
        assert_eq!(m.occupied_steps, 3);
        assert!((m.energy_kj - 120.0).abs() < 1e-12);
        assert_eq!(m.total_return, -3.0);
    }

    #[test]
    fn unoccupied_steps_do_not_count() {
        let rows = [row(0.0, false, 2, 40.0), row(0.0, false, 2, 10.0)];
        let m = daily_metrics(&rows, &ctx(2)).unwrap();
        assert_eq!((m.comfort_score, m.occupied_steps, m.constraint_violations), (0, 0, 0));
    }

    #[test]
    fn violations_use_the_closed_band() {
        let rows = [
            row(0.0, true, 2, 20.0),
            row(0.0, true, 2, 30.0),
            row(0.0, true, 0, 19.99),
            row(0.0, true, 1, 30.01),
        ];
        assert_eq!(daily_metrics(&rows, &ctx(4)).unwrap().constraint_violations, 2);
    }

    #[test]
    fn incomplete_trace_is_rejected() {
        let rows = vec![row(0.0, true, 2, 22.0); 143];
        assert!(daily_metrics(&rows, &ctx(144)).is_err());
    }

    #[test]
    fn full_power_day() {
        let rows = vec![row(-1000.0, false, 2, 22.0); 144];
        assert_eq!(daily_metrics(&rows, &ctx(144)).unwrap().energy_kj, 86400.0);
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.ci_hi - s.mean - 1.96 * s.std / 2.0).abs() < 1e-12);
        let single = Summary::of(&[7.0]).unwrap();
        assert_eq!((single.std, single.ci_lo, single.ci_hi), (0.0, 7.0, 7.0));
        assert!(Summary::of(&[]).is_err());
    }

    #[test]
    fn histogram_counts_every_value() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let h = histogram(&v, 0.0, 100.0, 20).unwrap();
        assert_eq!(h.len(), 20);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 101);
        assert_eq!(h[19].bin_hi, 100.0);
        assert_eq!(h[19].count, 6);
        let flat = histogram(&[3.0, 3.0], 3.0, 3.0, 20).unwrap();
        assert_eq!(flat[0].count, 2);
        assert_eq!(flat[19].bin_hi, 4.0);
    }

    #[test]
    fn observed_range_skips_nan() {
        assert_eq!(observed_range([2.0, f64::NAN, -1.0, 5.0]), Some((-1.0, 5.0)));
        assert_eq!(observed_range([f64::NAN]), None);
    }
}
