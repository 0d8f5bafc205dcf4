//! Uniform-grid time series: resampling raw samples onto a fixed grid,
//! integer-step shifting, day segmentation and numerical differentiation.

use chrono::{DateTime, Duration, NaiveDate, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventList;

/// Default sampling interval of the source data (5 minutes).
pub const DEFAULT_STEP_SECONDS: i64 = 300;

/// A raw timestamped sample before gridding.
pub type Sample = (DateTime<Utc>, f64);

/// One model time unit expressed in minutes.
///
/// Derivatives and integrals are taken per time unit. With the default of
/// 5 minutes one grid step spans exactly one unit, so dt = 1 in
/// [`differentiate`] and in the simulation integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeUnit {
    minutes: f64,
}

impl TimeUnit {
    pub fn from_minutes(minutes: f64) -> Result<Self> {
        if !(minutes.is_finite() && minutes > 0.0) {
            return Err(Error::Config {
                key: "time.unit_minutes".into(),
                msg: format!("must be a positive number, got {minutes}"),
            });
        }
        Ok(Self { minutes })
    }

    pub fn minutes(&self) -> f64 {
        self.minutes
    }

    /// Length of one grid step in model time units.
    pub fn dt_per_step(&self, step: Duration) -> f64 {
        step.num_milliseconds() as f64 / 60_000.0 / self.minutes
    }

    /// Convert a span in minutes to model time units.
    pub fn units_from_minutes(&self, minutes: f64) -> f64 {
        minutes / self.minutes
    }
}

impl Default for TimeUnit {
    fn default() -> Self {
        Self { minutes: 5.0 }
    }
}

/// A sampling grid: start instant, step and point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    start: DateTime<Utc>,
    step: Duration,
    len: usize,
}

impl Grid {
    pub fn new(start: DateTime<Utc>, step: Duration, len: usize) -> Result<Self> {
        if step <= Duration::zero() {
            return Err(Error::InvalidSeries(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if len == 0 {
            return Err(Error::InvalidSeries("grid must have at least one point".into()));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering one calendar day (UTC midnight to midnight).
    pub fn for_day(date: NaiveDate, step: Duration) -> Result<Self> {
        let start = date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc();
        let step_ms = step.num_milliseconds();
        if step_ms <= 0 {
            return Err(Error::InvalidSeries(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let len = (86_400_000 / step_ms) as usize;
        Self::new(start, step, len.max(1))
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step(&self) -> Duration {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, index: usize) -> DateTime<Utc> {
        self.start + self.step * index as i32
    }

    /// First instant past the grid.
    pub fn end(&self) -> DateTime<Utc> {
        self.start + self.step * self.len as i32
    }

    /// Index of the grid point nearest to `ts`, ties resolved to the earlier
    /// point. `None` when the nearest point falls outside the grid.
    pub fn nearest_index(&self, ts: DateTime<Utc>) -> Option<usize> {
        let offset = (ts - self.start).num_milliseconds();
        let step = self.step.num_milliseconds();
        let lower = offset.div_euclid(step);
        let rem = offset.rem_euclid(step);
        let idx = if 2 * rem <= step { lower } else { lower + 1 };
        if idx < 0 || idx as usize >= self.len {
            None
        } else {
            Some(idx as usize)
        }
    }
}

/// Values sampled on a fixed grid; the universal signal representation.
///
/// Invariants: positive step, at least one value, all values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    start: DateTime<Utc>,
    #[serde(with = "step_seconds")]
    step: Duration,
    values: Vec<f64>,
}

mod step_seconds {
    use chrono::Duration;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(step: &Duration, s: S) -> Result<S::Ok, S::Error> {
        step.num_seconds().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::seconds(i64::deserialize(d)?))
    }
}

impl UniformSeries {
    pub fn new(start: DateTime<Utc>, step: Duration, values: Vec<f64>) -> Result<Self> {
        if step <= Duration::zero() {
            return Err(Error::InvalidSeries(format!(
                "step must be positive, got {step}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must be non-empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { start, step, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid.start(), grid.step(), vec![value; grid.len()])
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step(&self) -> Duration {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> Grid {
        Grid {
            start: self.start,
            step: self.step,
            len: self.values.len(),
        }
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + self.step * index as i32
    }

    pub fn is_aligned_with(&self, other: &UniformSeries) -> bool {
        self.start == other.start && self.step == other.step && self.len() == other.len()
    }
}

/// Gap-repair policy for [`resample_to_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillPolicy {
    /// Longest run of missing grid points that may be bridged.
    pub max_gap_steps: usize,
    /// Reject the day when a gap exceeds `max_gap_steps` instead of bridging it.
    pub strict: bool,
}

impl Default for FillPolicy {
    fn default() -> Self {
        // 30 minutes on the 5-minute grid.
        Self {
            max_gap_steps: 6,
            strict: true,
        }
    }
}

fn check_sorted(samples: &[Sample]) -> Result<()> {
    for (i, pair) in samples.windows(2).enumerate() {
        if pair[1].0 < pair[0].0 {
            return Err(Error::UnsortedSamples { index: i + 1 });
        }
    }
    Ok(())
}

/// Place raw samples onto a grid: each sample maps to its nearest grid point
/// (ties to the earlier point, nearer sample wins a contested slot), then gaps
/// are linearly interpolated up to `fill.max_gap_steps`. Longer gaps make the
/// day incomplete under a strict policy; leading/trailing gaps within the
/// limit are held constant from the nearest sample.
pub fn resample_to_grid(samples: &[Sample], grid: Grid, fill: FillPolicy) -> Result<UniformSeries> {
    check_sorted(samples)?;
    let mut slots: Vec<Option<(i64, f64)>> = vec![None; grid.len()];
    for &(ts, value) in samples {
        if !value.is_finite() {
            return Err(Error::InvalidSeries(format!(
                "non-finite sample at {ts}"
            )));
        }
        // A sample inside the grid span but past the last point still informs
        // the last point, so day-final samples are not dropped.
        let idx = match grid.nearest_index(ts) {
            Some(i) => i,
            None if ts >= grid.point(grid.len() - 1) && ts < grid.end() => grid.len() - 1,
            None => continue,
        };
        let dist = (ts - grid.point(idx)).num_milliseconds().abs();
        match slots[idx] {
            Some((best, _)) if best <= dist => {}
            _ => slots[idx] = Some((dist, value)),
        }
    }

    let filled: Vec<usize> = (0..grid.len()).filter(|&i| slots[i].is_some()).collect();
    if filled.is_empty() {
        return Err(Error::IncompleteDay {
            date: Some(grid.start().date_naive()),
            reason: format!(
                "no samples cover the grid {} .. {}",
                grid.start(),
                grid.end()
            ),
        });
    }

    let gap_error = |from: usize, to: usize, missing: usize| Error::IncompleteDay {
        date: Some(grid.start().date_naive()),
        reason: format!(
            "gap of {missing} steps ({} .. {}) exceeds the {}-step limit",
            grid.point(from),
            grid.point(to),
            fill.max_gap_steps
        ),
    };

    let mut values = vec![0.0; grid.len()];
    let first = filled[0];
    let last = *filled.last().expect("non-empty");
    if fill.strict && first > fill.max_gap_steps {
        return Err(gap_error(0, first, first));
    }
    if fill.strict && grid.len() - 1 - last > fill.max_gap_steps {
        return Err(gap_error(last, grid.len() - 1, grid.len() - 1 - last));
    }
    // Hold edges constant.
    for i in 0..first {
        values[i] = slots[first].expect("filled").1;
    }
    for i in last + 1..grid.len() {
        values[i] = slots[last].expect("filled").1;
    }
    for pair in filled.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let va = slots[a].expect("filled").1;
        let vb = slots[b].expect("filled").1;
        values[a] = va;
        values[b] = vb;
        let missing = b - a - 1;
        if missing == 0 {
            continue;
        }
        if fill.strict && missing > fill.max_gap_steps {
            return Err(gap_error(a, b, missing));
        }
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            values[i] = va + t * (vb - va);
        }
    }

    UniformSeries::new(grid.start(), grid.step(), values)
}

/// Sample a step function (value changes at event instants) onto a grid with
/// zero-order hold. Points before the first change are back-filled with the
/// first value; an empty change list yields all zeros.
pub fn resample_zoh(changes: &[Sample], grid: Grid) -> Result<UniformSeries> {
    check_sorted(changes)?;
    let mut values = vec![0.0; grid.len()];
    if changes.is_empty() {
        return UniformSeries::new(grid.start(), grid.step(), values);
    }
    for (i, value) in values.iter_mut().enumerate() {
        let t = grid.point(i);
        let pos = changes.partition_point(|&(ts, _)| ts <= t);
        let (_, v) = if pos == 0 { changes[0] } else { changes[pos - 1] };
        if !v.is_finite() {
            return Err(Error::InvalidSeries("non-finite step value".into()));
        }
        *value = v;
    }
    UniformSeries::new(grid.start(), grid.step(), values)
}

/// Delay a series by whole steps: the first `steps` outputs are zero and
/// `out[i] = s[i - steps]` for the rest. Length is preserved.
pub fn shift_series(s: &UniformSeries, steps: usize) -> Result<UniformSeries> {
    if steps >= s.len() {
        return Err(Error::ShiftTooLarge {
            steps,
            len: s.len(),
        });
    }
    let mut values = vec![0.0; s.len()];
    values[steps..].copy_from_slice(&s.values()[..s.len() - steps]);
    UniformSeries::new(s.start(), s.step(), values)
}

/// Numerical derivative per model time unit: central differences in the
/// interior, one-sided first-order differences at both ends.
pub fn differentiate(s: &UniformSeries, unit: TimeUnit) -> Result<UniformSeries> {
    let n = s.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { need: 3, got: n });
    }
    let dt = unit.dt_per_step(s.step());
    let v = s.values();
    let mut d = vec![0.0; n];
    d[0] = (v[1] - v[0]) / dt;
    d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
    }
    UniformSeries::new(s.start(), s.step(), d)
}

/// Delay applied to the absorbed input channels, in whole grid steps.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ShiftConfig {
    pub bolus_shift_steps: usize,
    pub carb_shift_steps: usize,
}

impl ShiftConfig {
    pub fn new(bolus_shift_steps: usize, carb_shift_steps: usize) -> Self {
        Self {
            bolus_shift_steps,
            carb_shift_steps,
        }
    }

    /// All combinations over `min..=max` for both channels, in lexicographic
    /// (bolus, carb) order.
    pub fn grid(min_steps: usize, max_steps: usize) -> Vec<ShiftConfig> {
        let mut out = Vec::new();
        for bolus in min_steps..=max_steps {
            for carb in min_steps..=max_steps {
                out.push(ShiftConfig::new(bolus, carb));
            }
        }
        out
    }
}

impl std::fmt::Display for ShiftConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(bolus={}, carbs={})",
            self.bolus_shift_steps, self.carb_shift_steps
        )
    }
}

/// One calendar day of aligned channels. The absorbed input channels are
/// populated by preprocessing; accessors fail until then.
#[derive(Debug, Clone)]
pub struct DaySegment {
    pub date: NaiveDate,
    pub glucose: UniformSeries,
    pub basal: UniformSeries,
    pub bolus_raw: EventList,
    pub carbs_raw: EventList,
    bolus_abs: Option<UniformSeries>,
    carbs_abs: Option<UniformSeries>,
}

impl DaySegment {
    pub fn new(
        date: NaiveDate,
        glucose: UniformSeries,
        basal: UniformSeries,
        bolus_raw: EventList,
        carbs_raw: EventList,
    ) -> Result<Self> {
        if !glucose.is_aligned_with(&basal) {
            return Err(Error::Misaligned(format!(
                "glucose and basal channels of day {date} differ in start, step or length"
            )));
        }
        Ok(Self {
            date,
            glucose,
            basal,
            bolus_raw,
            carbs_raw,
            bolus_abs: None,
            carbs_abs: None,
        })
    }

    pub fn grid(&self) -> Grid {
        self.glucose.grid()
    }

    pub fn bolus_abs(&self) -> Result<&UniformSeries> {
        self.bolus_abs
            .as_ref()
            .ok_or(Error::MissingDerivedChannels { date: self.date })
    }

    pub fn carbs_abs(&self) -> Result<&UniformSeries> {
        self.carbs_abs
            .as_ref()
            .ok_or(Error::MissingDerivedChannels { date: self.date })
    }

    pub fn has_absorption(&self) -> bool {
        self.bolus_abs.is_some() && self.carbs_abs.is_some()
    }

    /// Attach absorbed (bergerized + shifted) input channels.
    pub fn with_absorption(
        mut self,
        bolus_abs: UniformSeries,
        carbs_abs: UniformSeries,
    ) -> Result<Self> {
        if !bolus_abs.is_aligned_with(&self.glucose) || !carbs_abs.is_aligned_with(&self.glucose) {
            return Err(Error::Misaligned(format!(
                "absorption channels of day {} differ from the day grid",
                self.date
            )));
        }
        self.bolus_abs = Some(bolus_abs);
        self.carbs_abs = Some(carbs_abs);
        Ok(self)
    }
}

/// Day-segmentation options.
#[derive(Debug, Clone, Copy)]
pub struct SegmentOptions {
    pub step: Duration,
    pub fill: FillPolicy,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            step: Duration::seconds(DEFAULT_STEP_SECONDS),
            fill: FillPolicy::default(),
        }
    }
}

/// A day rejected by the completeness policy, with the reason.
#[derive(Debug, Clone)]
pub struct IncompleteDay {
    pub date: NaiveDate,
    pub reason: String,
}

/// Segmentation output: complete days plus an explicit report of rejected ones.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub days: Vec<DaySegment>,
    pub incomplete: Vec<IncompleteDay>,
}

/// Split the channels into calendar-day segments (UTC midnight boundaries).
/// Days failing the completeness policy are reported, not silently dropped.
/// Basal is held across day boundaries (zero-order hold over the full record).
pub fn segment_days(
    glucose: &[Sample],
    basal: &[Sample],
    bolus: &EventList,
    meals: &EventList,
    opts: &SegmentOptions,
) -> Result<Segmentation> {
    check_sorted(glucose)?;
    check_sorted(basal)?;
    if glucose.is_empty() {
        return Err(Error::NoCompleteDays);
    }
    let first_date = glucose[0].0.date_naive();
    let last_date = glucose[glucose.len() - 1].0.date_naive();

    let mut days = Vec::new();
    let mut incomplete = Vec::new();
    let mut date = first_date;
    while date <= last_date {
        let grid = Grid::for_day(date, opts.step)?;
        let day_glucose: Vec<Sample> = glucose
            .iter()
            .filter(|(ts, _)| ts.date_naive() == date)
            .copied()
            .collect();
        if day_glucose.is_empty() {
            incomplete.push(IncompleteDay {
                date,
                reason: "no glucose samples".into(),
            });
            date = date.succ_opt().expect("date range is bounded");
            continue;
        }
        match resample_to_grid(&day_glucose, grid, opts.fill) {
            Ok(glucose_series) => {
                let basal_series = resample_zoh(basal, grid)?;
                let day = DaySegment::new(
                    date,
                    glucose_series,
                    basal_series,
                    bolus.between(grid.start(), grid.end())?,
                    meals.between(grid.start(), grid.end())?,
                )?;
                days.push(day);
            }
            Err(Error::IncompleteDay { reason, .. }) => {
                incomplete.push(IncompleteDay { date, reason });
            }
            Err(other) => return Err(other),
        }
        date = date.succ_opt().expect("date range is bounded");
    }

    if days.is_empty() {
        return Err(Error::NoCompleteDays);
    }
    if days.len() == 1 {
        log::warn!("only one complete day; the shift grid search needs at least 2");
    }
    Ok(Segmentation { days, incomplete })
}

/// Timestamp is exactly on a grid of the given step (used by tests and ingest
/// diagnostics).
pub fn on_grid(ts: DateTime<Utc>, step: Duration) -> bool {
    let sec = i64::from(ts.time().num_seconds_from_midnight());
    step.num_seconds() > 0 && sec % step.num_seconds() == 0 && ts.timestamp_subsec_nanos() == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        "2027-05-13T00:00:00Z".parse().expect("valid timestamp")
    }

    fn step5() -> Duration {
        Duration::seconds(300)
    }

    fn series(values: &[f64]) -> UniformSeries {
        UniformSeries::new(t0(), step5(), values.to_vec()).expect("valid series")
    }

    #[test]
    fn resample_copies_on_grid_samples_verbatim() {
        let samples: Vec<Sample> = (0..4)
            .map(|i| (t0() + step5() * i, 10.0 * f64::from(i + 1)))
            .collect();
        let grid = Grid::new(t0(), step5(), 4).unwrap();
        let s = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap();
        assert_eq!(s.values(), &[10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn resample_interpolates_midpoint() {
        let samples = vec![(t0(), 10.0), (t0() + Duration::minutes(10), 20.0)];
        let grid = Grid::new(t0(), step5(), 3).unwrap();
        let s = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap();
        assert_eq!(s.values(), &[10.0, 15.0, 20.0]);
    }

    #[test]
    fn resample_rejects_empty_input_under_strict_policy() {
        let grid = Grid::new(t0(), step5(), 3).unwrap();
        let err = resample_to_grid(&[], grid, FillPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::IncompleteDay { .. }));
    }

    #[test]
    fn resample_rejects_unsorted_input() {
        let samples = vec![(t0() + step5(), 1.0), (t0(), 2.0)];
        let grid = Grid::new(t0(), step5(), 2).unwrap();
        let err = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::UnsortedSamples { index: 1 }));
    }

    #[test]
    fn resample_names_the_gap_span() {
        let samples = vec![(t0(), 10.0), (t0() + Duration::hours(3), 20.0)];
        let grid = Grid::new(t0(), step5(), 37).unwrap();
        let err = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gap of 35 steps"), "got: {msg}");
    }

    #[test]
    fn resample_ties_go_to_the_earlier_point() {
        // 2.5 minutes is equidistant between points 0 and 1.
        let samples = vec![(t0() + Duration::seconds(150), 7.0), (t0() + step5(), 9.0)];
        let grid = Grid::new(t0(), step5(), 2).unwrap();
        let s = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap();
        assert_eq!(s.values(), &[7.0, 9.0]);
    }

    #[test]
    fn shift_identity_and_delay() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shift_series(&s, 0).unwrap().values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shift_series(&s, 2).unwrap().values(), &[0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn shift_rejects_whole_series_displacement() {
        let s = series(&[1.0, 2.0]);
        assert!(matches!(
            shift_series(&s, 2),
            Err(Error::ShiftTooLarge { steps: 2, len: 2 })
        ));
    }

    #[test]
    fn differentiate_is_exact_on_ramps() {
        let s = series(&[0.0, 2.0, 4.0, 6.0]);
        let d = differentiate(&s, TimeUnit::default()).unwrap();
        assert_eq!(d.values(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn differentiate_of_constant_is_zero() {
        let s = series(&[5.0, 5.0, 5.0]);
        let d = differentiate(&s, TimeUnit::default()).unwrap();
        assert_eq!(d.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn differentiate_rejects_short_series() {
        let s = series(&[1.0, 2.0]);
        assert!(matches!(
            differentiate(&s, TimeUnit::default()),
            Err(Error::SeriesTooShort { need: 3, got: 2 })
        ));
    }

    #[test]
    fn differentiate_tracks_the_analytic_derivative_of_sine() {
        // dt = 0.01 model units per step: one unit = 5 min, step = 3 s.
        let dt = 0.01;
        let step = Duration::seconds(3);
        let n = 101;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * dt).sin()).collect();
        let s = UniformSeries::new(t0(), step, values).unwrap();
        let d = differentiate(&s, TimeUnit::default()).unwrap();
        let max_err = d
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - (i as f64 * dt).cos()).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn zoh_backfills_and_holds() {
        let grid = Grid::new(t0(), step5(), 5).unwrap();
        let changes = vec![
            (t0() + Duration::minutes(7), 1.0),
            (t0() + Duration::minutes(12), 2.5),
        ];
        let s = resample_zoh(&changes, grid).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0, 2.5, 2.5]);
    }

    #[test]
    fn zoh_of_no_changes_is_zero() {
        let grid = Grid::new(t0(), step5(), 3).unwrap();
        let s = resample_zoh(&[], grid).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn shift_grid_is_lexicographic() {
        let grid = ShiftConfig::grid(1, 2);
        assert_eq!(
            grid,
            vec![
                ShiftConfig::new(1, 1),
                ShiftConfig::new(1, 2),
                ShiftConfig::new(2, 1),
                ShiftConfig::new(2, 2),
            ]
        );
        assert_eq!(ShiftConfig::grid(1, 6).len(), 36);
    }

    #[test]
    fn day_segment_requires_aligned_channels() {
        let glucose = series(&[1.0, 2.0, 3.0]);
        let basal = series(&[1.0, 2.0]);
        let date = t0().date_naive();
        let err = DaySegment::new(
            date,
            glucose,
            basal,
            EventList::empty_bolus(),
            EventList::empty_meals(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Misaligned(_)));
    }

    #[test]
    fn derived_channel_access_fails_before_preprocessing() {
        let glucose = series(&[1.0, 2.0, 3.0]);
        let basal = series(&[0.0, 0.0, 0.0]);
        let day = DaySegment::new(
            t0().date_naive(),
            glucose,
            basal,
            EventList::empty_bolus(),
            EventList::empty_meals(),
        )
        .unwrap();
        assert!(matches!(
            day.bolus_abs(),
            Err(Error::MissingDerivedChannels { .. })
        ));
    }

    fn day_of_samples(date: &str, n: usize, value: f64) -> Vec<Sample> {
        let start: DateTime<Utc> = format!("{date}T00:00:00Z").parse().unwrap();
        (0..n).map(|i| (start + step5() * i as i32, value)).collect()
    }

    #[test]
    fn segmentation_partitions_complete_and_incomplete_days() {
        let mut glucose = day_of_samples("2027-05-13", 288, 120.0);
        // Second day has a 3-hour gap in the middle.
        let with_gap: Vec<Sample> = day_of_samples("2027-05-14", 288, 130.0)
            .into_iter()
            .filter(|(ts, _)| {
                let h = ts.time().hour();
                !(10..13).contains(&h)
            })
            .collect();
        glucose.extend(with_gap);
        glucose.extend(day_of_samples("2027-05-15", 288, 125.0));

        let seg = segment_days(
            &glucose,
            &[(glucose[0].0, 1.0)],
            &EventList::empty_bolus(),
            &EventList::empty_meals(),
            &SegmentOptions::default(),
        )
        .unwrap();
        assert_eq!(seg.days.len(), 2);
        assert_eq!(seg.incomplete.len(), 1);
        assert_eq!(seg.incomplete[0].date.to_string(), "2027-05-14");
        assert!(seg.incomplete[0].reason.contains("gap"));
    }

    #[test]
    fn segmentation_with_single_complete_day_returns_one_segment() {
        let glucose = day_of_samples("2027-05-13", 288, 120.0);
        let seg = segment_days(
            &glucose,
            &[],
            &EventList::empty_bolus(),
            &EventList::empty_meals(),
            &SegmentOptions::default(),
        )
        .unwrap();
        assert_eq!(seg.days.len(), 1);
    }

    #[test]
    fn segmentation_with_zero_complete_days_is_fatal() {
        let glucose = vec![(t0(), 120.0)]; // single sample, rest of day missing
        let err = segment_days(
            &glucose,
            &[],
            &EventList::empty_bolus(),
            &EventList::empty_meals(),
            &SegmentOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoCompleteDays));
    }

    proptest! {
        #[test]
        fn shift_composes_additively(
            values in proptest::collection::vec(-100.0..100.0f64, 8..40),
            a in 0usize..4,
            b in 0usize..4,
        ) {
            let s = UniformSeries::new(t0(), step5(), values).unwrap();
            let lhs = shift_series(&shift_series(&s, a).unwrap(), b).unwrap();
            let rhs = shift_series(&s, a + b).unwrap();
            for i in (a + b)..s.len() {
                prop_assert_eq!(lhs.values()[i], rhs.values()[i]);
            }
        }

        #[test]
        fn resample_is_idempotent_on_gridded_input(
            values in proptest::collection::vec(40.0..400.0f64, 3..60),
        ) {
            let n = values.len();
            let samples: Vec<Sample> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| (t0() + step5() * i as i32, v))
                .collect();
            let grid = Grid::new(t0(), step5(), n).unwrap();
            let once = resample_to_grid(&samples, grid, FillPolicy::default()).unwrap();
            prop_assert_eq!(once.values(), values.as_slice());
        }

        #[test]
        fn differentiate_is_exact_on_affine_series(
            slope in -10.0..10.0f64,
            intercept in -100.0..100.0f64,
            n in 3usize..50,
        ) {
            let values: Vec<f64> = (0..n).map(|i| intercept + slope * i as f64).collect();
            let s = UniformSeries::new(t0(), step5(), values).unwrap();
            let d = differentiate(&s, TimeUnit::default()).unwrap();
            for (i, &v) in d.values().iter().enumerate() {
                prop_assert!((v - slope).abs() < 1e-9 * (1.0 + slope.abs()), "index {} value {}", i, v);
            }
        }
    }
}
