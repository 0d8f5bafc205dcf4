//! Conversion of impulse doses (bolus insulin, meal carbohydrates) into
//! smooth plasma-level series via an absorption ODE with a sigmoidal uptake
//! curve and first-order decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventList;
use crate::timeseries::{shift_series, DaySegment, Grid, ShiftConfig, TimeUnit, UniformSeries};

/// Fixed substep count for the absorption integrator.
const SUBSTEPS: u32 = 4;

/// Functional form of the half-absorption time T50 as a function of dose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T50Form {
    /// T50 = a * D * b
    Product,
    /// T50 = a * D + b
    Affine,
}

impl std::str::FromStr for T50Form {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "product" => Ok(T50Form::Product),
            "affine" => Ok(T50Form::Affine),
            other => Err(format!("expected `product` or `affine`, got `{other}`")),
        }
    }
}

/// Absorption-curve parameters.
///
/// `s` shapes the uptake sigmoid, `a` and `b` set how the half-absorption
/// time depends on the dose, and `k` is the first-order plasma decay rate
/// per model time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BergerParams {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub t50_form: T50Form,
    pub k: f64,
}

impl Default for BergerParams {
    fn default() -> Self {
        Self {
            s: 1.6,
            a: 5.2,
            b: 41.0,
            t50_form: T50Form::Product,
            k: 1.0,
        }
    }
}

impl BergerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::InvalidBergerParams(format!(
                "shape s must be positive, got {}",
                self.s
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidBergerParams(format!(
                "decay rate k must be positive, got {}",
                self.k
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidBergerParams("a and b must be finite".into()));
        }
        Ok(())
    }
}

/// Half-absorption time in minutes for a dose.
pub fn t50(dose: f64, params: &BergerParams) -> Result<f64> {
    if !(dose.is_finite() && dose > 0.0) {
        return Err(Error::NonPositiveT50 { t50: 0.0, dose });
    }
    let t50 = match params.t50_form {
        T50Form::Product => params.a * dose * params.b,
        T50Form::Affine => params.a * dose + params.b,
    };
    if !(t50.is_finite() && t50 > 0.0) {
        return Err(Error::NonPositiveT50 { t50, dose });
    }
    Ok(t50)
}

/// Instantaneous uptake rate at `t` minutes after a dose, per minute.
///
/// This is d/dt of the cumulative uptake D * t^s / (T50^s + t^s); at t = 0
/// the continuous extension (zero for s > 1) is returned.
pub fn absorption_input(dose: f64, t_minutes: f64, params: &BergerParams) -> Result<f64> {
    let t50_min = t50(dose, params)?;
    Ok(uptake_rate(dose, t_minutes, t50_min, params.s))
}

/// Fraction of the dose absorbed by `t` minutes, times the dose.
pub fn cumulative_absorption(dose: f64, t_minutes: f64, params: &BergerParams) -> Result<f64> {
    let t50_min = t50(dose, params)?;
    if t_minutes <= 0.0 {
        return Ok(0.0);
    }
    let ts = t_minutes.powf(params.s);
    let t50s = t50_min.powf(params.s);
    Ok(dose * ts / (t50s + ts))
}

/// Uptake rate with `t` and `t50` in the same unit; the value is per that
/// unit. Integrates to `dose` over t in [0, inf).
fn uptake_rate(dose: f64, t: f64, t50: f64, s: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let ts = t.powf(s);
    let t50s = t50.powf(s);
    let denom = t50s + ts;
    s * dose * ts * t50s / (t * denom * denom)
}

/// Integrate the absorption ODE dA/dt = sum of dose inputs - k * A across the
/// grid with A = 0 at the grid start. Doses superpose linearly; the output is
/// non-negative everywhere. Events outside the grid span contribute only
/// within the span (a warning is logged, never an error).
pub fn bergerize(
    events: &EventList,
    params: &BergerParams,
    grid: Grid,
    unit: TimeUnit,
) -> Result<UniformSeries> {
    params.validate()?;
    let dt_step = unit.dt_per_step(grid.step());
    let h = dt_step / f64::from(SUBSTEPS);
    if params.k * h > 2.0 {
        return Err(Error::InvalidBergerParams(format!(
            "decay rate k = {} is too stiff for the integrator step ({h} model units)",
            params.k
        )));
    }

    // Per event: offset of the dose instant from grid start and T50, both in
    // model time units.
    let mut doses: Vec<(f64, f64, f64)> = Vec::with_capacity(events.len());
    for event in events.events() {
        let t50_units = unit.units_from_minutes(t50(event.dose, params)?);
        let offset_minutes = (event.ts - grid.start()).num_milliseconds() as f64 / 60_000.0;
        let offset_units = unit.units_from_minutes(offset_minutes);
        if event.ts < grid.start() || event.ts >= grid.end() {
            log::warn!(
                "dose at {} lies outside the grid span {} .. {}; only its in-span uptake contributes",
                event.ts,
                grid.start(),
                grid.end()
            );
        }
        doses.push((offset_units, event.dose, t50_units));
    }

    let input = |tau: f64| -> f64 {
        doses
            .iter()
            .map(|&(offset, dose, t50_units)| uptake_rate(dose, tau - offset, t50_units, params.s))
            .sum()
    };

    let k = params.k;
    let mut values = vec![0.0; grid.len()];
    let mut a = 0.0_f64;
    for (i, slot) in values.iter_mut().enumerate() {
        *slot = a;
        if i + 1 == grid.len() {
            break;
        }
        let t_base = i as f64 * dt_step;
        for sub in 0..SUBSTEPS {
            let t = t_base + f64::from(sub) * h;
            let k1 = input(t) - k * a;
            let k2 = input(t + 0.5 * h) - k * (a + 0.5 * h * k1);
            let k3 = input(t + 0.5 * h) - k * (a + 0.5 * h * k2);
            let k4 = input(t + h) - k * (a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            a = a.max(0.0);
        }
    }
    UniformSeries::new(grid.start(), grid.step(), values)
}

/// Absorption preprocessing configuration for both dosed channels plus the
/// model time unit shared with differentiation and simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionSettings {
    pub bolus: BergerParams,
    pub carbs: BergerParams,
    pub unit: TimeUnit,
}

impl Default for AbsorptionSettings {
    fn default() -> Self {
        Self {
            bolus: BergerParams::default(),
            carbs: BergerParams::default(),
            unit: TimeUnit::default(),
        }
    }
}

impl AbsorptionSettings {
    /// Attach absorbed + shifted input channels to a day.
    pub fn preprocess_day(&self, day: &DaySegment, shifts: ShiftConfig) -> Result<DaySegment> {
        let grid = day.grid();
        let bolus = bergerize(&day.bolus_raw, &self.bolus, grid, self.unit)?;
        let carbs = bergerize(&day.carbs_raw, &self.carbs, grid, self.unit)?;
        day.clone().with_absorption(
            shift_series(&bolus, shifts.bolus_shift_steps)?,
            shift_series(&carbs, shifts.carb_shift_steps)?,
        )
    }
}
