//! Outdoor weather as time-of-day augmented Markov chains.
//!
//! Outdoor temperature and solar radiation are each binned and modelled by a
//! separate chain whose state is the pair (bin, step of day). Chains are
//! estimated by counting transitions in daily traces and sampled one day at
//! a time.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::occupant::STEPS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let spec = Self { lo, hi, n };
        spec.validate()?;
        Ok(spec)
    }

    /// Outdoor temperature: [10, 40] °C in 6 bins.
    pub fn temperature() -> Self {
        Self { lo: 10.0, hi: 40.0, n: 6 }
    }

    /// Solar radiation: [0, 900] W in 9 bins.
    pub fn solar() -> Self {
        Self { lo: 0.0, hi: 900.0, n: 9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::param("bins", format!("need lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.n == 0 {
            return Err(Error::param("bins", "bin count must be at least 1"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn index(&self, value: f64) -> usize {
        let raw = ((value - self.lo) / self.width()).floor();
        if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.n - 1)
        }
    }
}

/// Bin index and bin center for `value`. Lower edges are inclusive and values
/// outside the range clamp to the edge bins.
pub fn discretize(value: f64, spec: &BinSpec) -> (usize, f64) {
    let i = spec.index(value);
    (i, spec.center(i))
}

/// Which weather quantity a chain describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    OutdoorTemperature,
    Solar,
}

impl Quantity {
    fn of(self, r: &WeatherRecord) -> f64 {
        match self {
            Quantity::OutdoorTemperature => r.t_out,
            Quantity::Solar => r.q_solar,
        }
    }
}

/// Transition probabilities indexed by step of day and bin. Row `(k, i)` is
/// the distribution of the bin at step `(k + 1) mod 144`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChain {
    n_bins: usize,
    transition: Vec<f64>,
    initial: Vec<f64>,
}

impl TimeChain {
    /// Chain that never leaves its starting bin.
    pub fn identity(n_bins: usize) -> Self {
        let mut transition = vec![0.0; STEPS_PER_DAY * n_bins * n_bins];
        for k in 0..STEPS_PER_DAY {
            for i in 0..n_bins {
                transition[(k * n_bins + i) * n_bins + i] = 1.0;
            }
        }
        Self {
            n_bins,
            transition,
            initial: vec![1.0 / n_bins as f64; n_bins],
        }
    }

    /// Chain pinned to bin `bin` forever.
    pub fn constant(n_bins: usize, bin: usize) -> Self {
        let mut chain = Self::identity(n_bins);
        chain.initial = (0..n_bins).map(|j| if j == bin { 1.0 } else { 0.0 }).collect();
        chain
    }

    pub fn from_parts(n_bins: usize, transition: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        if n_bins == 0 || transition.len() != STEPS_PER_DAY * n_bins * n_bins || initial.len() != n_bins
        {
            return Err(Error::Shape(format!(
                "chain with {n_bins} bins needs {} transition entries and {n_bins} initial entries",
                STEPS_PER_DAY * n_bins * n_bins
            )));
        }
        let chain = Self { n_bins, transition, initial };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self
            .transition
            .chunks(self.n_bins)
            .chain(std::iter::once(self.initial.as_slice()));
        for (r, row) in rows.enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Numeric(format!("chain row {r} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Numeric(format!("chain row {r} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, k: usize, i: usize) -> &[f64] {
        let start = (k * self.n_bins + i) * self.n_bins;
        &self.transition[start..start + self.n_bins]
    }

    /// Empirical distribution of bins at step 0.
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw_categorical(&self.initial, rng)
    }

    /// Bin at step `k + 1` given bin `i` at step `k`.
    pub fn next_bin<R: Rng + ?Sized>(&self, k: usize, i: usize, rng: &mut R) -> usize {
        draw_categorical(self.row(k % STEPS_PER_DAY, i), rng)
    }

    /// One row per nonzero-or-zero entry: `(k, i, j, p)`.
    pub fn entries(&self) -> impl Iterator<Item = ChainEntry> + '_ {
        let n = self.n_bins;
        self.transition.iter().enumerate().map(move |(idx, &p)| ChainEntry {
            k: idx / (n * n),
            i: (idx / n) % n,
            j: idx % n,
            p,
        })
    }
}

fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left u above the cumulative sum; take the last supported bin
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub day: usize,
    pub k: usize,
    pub t_out: f64,
    pub q_solar: f64,
}

/// Ten-minute weather records for one or more whole days.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherTrace {
    pub records: Vec<WeatherRecord>,
}

impl WeatherTrace {
    /// Groups records by day, checking each day runs k = 0..143 in order.
    pub fn days(&self) -> Result<BTreeMap<usize, Vec<WeatherRecord>>> {
        let mut days: BTreeMap<usize, Vec<WeatherRecord>> = BTreeMap::new();
        for r in &self.records {
            if !(r.t_out.is_finite() && r.q_solar.is_finite()) {
                return Err(Error::NonFinite(format!("weather record day {} k {}", r.day, r.k)));
            }
            days.entry(r.day).or_default().push(*r);
        }
        for (day, recs) in &days {
            if recs.len() != STEPS_PER_DAY || recs.iter().enumerate().any(|(k, r)| r.k != k) {
                return Err(Error::Format(format!(
                    "day {day} must hold steps 0..{} in order",
                    STEPS_PER_DAY - 1
                )));
            }
        }
        Ok(days)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| with_path(e, path))?;
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<WeatherRecord>, _>>()?;
        Ok(Self { records })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub(crate) fn with_path(e: csv::Error, path: &Path) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Counts bin transitions between consecutive steps, wrapping step 143 of
/// day `d` into step 0 of day `d + 1` when that day is present. Rows never
/// observed fall back to staying in the same bin.
pub fn estimate_chain(trace: &WeatherTrace, quantity: Quantity, spec: &BinSpec) -> Result<TimeChain> {
    spec.validate()?;
    if trace.records.is_empty() {
        return Err(Error::Empty("weather trace has no records".into()));
    }
    let days = trace.days()?;
    let n = spec.n;
    let mut counts = vec![0.0f64; STEPS_PER_DAY * n * n];
    let mut initial = vec![0.0f64; n];

    for (day, recs) in &days {
        let bins: Vec<usize> = recs.iter().map(|r| spec.index(quantity.of(r))).collect();
        initial[bins[0]] += 1.0;
        for k in 0..STEPS_PER_DAY - 1 {
            counts[(k * n + bins[k]) * n + bins[k + 1]] += 1.0;
        }
        if let Some(next) = days.get(&(day + 1)) {
            let j = spec.index(quantity.of(&next[0]));
            counts[((STEPS_PER_DAY - 1) * n + bins[STEPS_PER_DAY - 1]) * n + j] += 1.0;
        }
    }

    for (r, row) in counts.chunks_mut(n).enumerate() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|c| *c /= total);
        } else {
            row[r % n] = 1.0;
        }
    }
    let total: f64 = initial.iter().sum();
    initial.iter_mut().for_each(|c| *c /= total);

    TimeChain::from_parts(n, counts, initial)
}

/// Bin path over one day starting from `initial_bin` at step 0.
pub fn sample_day_bins<R: Rng + ?Sized>(chain: &TimeChain, initial_bin: usize, rng: &mut R) -> Result<Vec<usize>> {
    if initial_bin >= chain.n_bins() {
        return Err(Error::OutOfRange(format!(
            "initial bin {initial_bin} of {}",
            chain.n_bins()
        )));
    }
    let mut bins = Vec::with_capacity(STEPS_PER_DAY);
    let mut current = initial_bin;
    bins.push(current);
    for k in 0..STEPS_PER_DAY - 1 {
        current = chain.next_bin(k, current, rng);
        bins.push(current);
    }
    Ok(bins)
}

/// One day of bin-center values (144 entries).
pub fn sample_day<R: Rng + ?Sized>(
    chain: &TimeChain,
    spec: &BinSpec,
    initial_bin: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if chain.n_bins() != spec.n {
        return Err(Error::Shape(format!(
            "chain has {} bins, bin layout has {}",
            chain.n_bins(),
            spec.n
        )));
    }
    Ok(sample_day_bins(chain, initial_bin, rng)?
        .into_iter()
        .map(|i| spec.center(i))
        .collect())
}

/// Parameters of the synthetic summer weather generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub t_mean: f64,
    pub t_swing: f64,
    /// Step of day of the temperature maximum.
    pub t_peak_k: f64,
    pub t_day_sd: f64,
    pub t_noise_sd: f64,
    pub solar_peak: f64,
    pub sunrise_k: f64,
    pub sunset_k: f64,
    pub solar_noise_sd: f64,
    /// Lower bound of the per-day clear-sky factor, drawn uniformly up to 1.
    pub min_clearness: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            t_mean: 27.0,
            t_swing: 6.0,
            t_peak_k: 90.0,
            t_day_sd: 1.5,
            t_noise_sd: 0.5,
            solar_peak: 700.0,
            sunrise_k: 39.0,
            sunset_k: 126.0,
            solar_noise_sd: 30.0,
            min_clearness: 0.75,
        }
    }
}

/// Sinusoidal July-like weather with noise, clipped to the default bin ranges.
pub fn synth_trace<R: Rng + ?Sized>(days: usize, params: &SynthParams, rng: &mut R) -> Result<WeatherTrace> {
    if days == 0 {
        return Err(Error::param("days", "need at least one day"));
    }
    let t_spec = BinSpec::temperature();
    let s_spec = BinSpec::solar();
    let normal = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::param("synth", e.to_string()));
    let day_offset = normal(params.t_day_sd)?;
    let t_noise = normal(params.t_noise_sd)?;
    let s_noise = normal(params.solar_noise_sd)?;

    let mut records = Vec::with_capacity(days * STEPS_PER_DAY);
    for day in 0..days {
        let offset = day_offset.sample(rng);
        let clearness = rng.random_range(params.min_clearness..=1.0);
        for k in 0..STEPS_PER_DAY {
            let phase = 2.0 * PI * (k as f64 - params.t_peak_k) / STEPS_PER_DAY as f64;
            let t_out = (params.t_mean + params.t_swing * phase.cos() + offset + t_noise.sample(rng))
                .clamp(t_spec.lo, t_spec.hi);

            let kf = k as f64;
            let q_solar = if kf > params.sunrise_k && kf < params.sunset_k {
                let x = (kf - params.sunrise_k) / (params.sunset_k - params.sunrise_k);
                (params.solar_peak * clearness * (PI * x).sin() + s_noise.sample(rng))
                    .clamp(s_spec.lo, s_spec.hi)
            } else {
                0.0
            };
            records.push(WeatherRecord { day, k, t_out, q_solar });
        }
    }
    Ok(WeatherTrace { records })
}

pub fn write_chain_csv(chain: &TimeChain, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for e in chain.entries() {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct InitialEntry {
    i: usize,
    p: f64,
}

pub fn write_initial_csv(chain: &TimeChain, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(e, path))?;
    for (i, &p) in chain.initial().iter().enumerate() {
        w.serialize(InitialEntry { i, p })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `k,i,j,p` transition file and an `i,p` initial distribution file.
pub fn read_chain_csv(transitions: &Path, initial: &Path) -> Result<TimeChain> {
    let mut reader = csv::Reader::from_path(transitions).map_err(|e| with_path(e, transitions))?;
    let entries = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ChainEntry>, _>>()?;
    let mut reader = csv::Reader::from_path(initial).map_err(|e| with_path(e, initial))?;
    let init = reader
        .deserialize()
        .collect::<std::result::Result<Vec<InitialEntry>, _>>()?;

    let n = init.len();
    if n == 0 {
        return Err(Error::Empty(format!("{}", initial.display())));
    }
    let mut transition = vec![f64::NAN; STEPS_PER_DAY * n * n];
    for e in entries {
        if e.k >= STEPS_PER_DAY || e.i >= n || e.j >= n {
            return Err(Error::OutOfRange(format!("chain entry k={} i={} j={}", e.k, e.i, e.j)));
        }
        transition[(e.k * n + e.i) * n + e.j] = e.p;
    }
    let mut initial_p = vec![f64::NAN; n];
    for e in init {
        if e.i >= n {
            return Err(Error::OutOfRange(format!("initial entry {}", e.i)));
        }
        initial_p[e.i] = e.p;
    }
    TimeChain::from_parts(n, transition, initial_p)
}
