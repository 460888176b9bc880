//! Seeded synthetic portfolios with bimodal loss distributions.
//!
//! Each loan is a cure (full repayment, loss 0), a total loss (nothing
//! recovered, loss 1) or a partial write-off whose undiscounted loss is drawn
//! from an interior beta distribution. Workout lengths follow a geometric
//! law truncated at the maximum workout and tuned to the requested mean.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, LogNormal};
use serde::{Deserialize, Serialize};

use crate::cashflow::{CashFlowSeries, DefaultedPortfolio, Month, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleShape {
    FrontLoaded,
    #[default]
    Uniform,
    BackLoaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_loans: usize,
    pub cure_probability: f64,
    pub full_loss_probability: f64,
    pub interior_a: f64,
    pub interior_b: f64,
    pub mean_workout_months: f64,
    pub max_workout_months: Month,
    pub schedule: ScheduleShape,
    /// Default months are spread uniformly over `0..cohort_months`.
    pub cohort_months: Month,
    pub balance_median: f64,
    pub balance_sigma: f64,
    pub seed: u64,
}

/// Loss moments a spec implies for undiscounted losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedMoments {
    pub mean: f64,
    pub std_dev: f64,
}

impl SynthSpec {
    /// Spec whose loss mixture has the target mean and standard deviation,
    /// given the cure share and the mean of the interior losses.
    #[allow(clippy::too_many_arguments)]
    pub fn calibrated(
        n_loans: usize,
        target_mean: f64,
        target_std: f64,
        cure_probability: f64,
        interior_mean: f64,
        mean_workout_months: f64,
        max_workout_months: Month,
        seed: u64,
    ) -> Result<Self> {
        let q0 = cure_probability;
        let m = interior_mean;
        if !(0.0..1.0).contains(&q0) || !(m > 0.0 && m < 1.0) {
            return Err(Error::SpecInfeasible(
                "cure probability must lie in [0, 1) and interior mean in (0, 1)".into(),
            ));
        }
        let q1 = (target_mean - (1.0 - q0) * m) / (1.0 - m);
        let qi = 1.0 - q0 - q1;
        if !(q1 >= 0.0 && qi > 0.0) {
            return Err(Error::SpecInfeasible(format!(
                "mean {target_mean} unreachable with cure share {q0} and interior mean {m}"
            )));
        }
        let second = target_std * target_std + target_mean * target_mean;
        let v = (second - q1) / qi - m * m;
        if !(v > 0.0 && v < m * (1.0 - m)) {
            return Err(Error::SpecInfeasible(format!(
                "interior variance {v} infeasible for interior mean {m}"
            )));
        }
        let k = m * (1.0 - m) / v - 1.0;
        let spec = Self {
            n_loans,
            cure_probability: q0,
            full_loss_probability: q1,
            interior_a: m * k,
            interior_b: (1.0 - m) * k,
            mean_workout_months,
            max_workout_months,
            schedule: ScheduleShape::Uniform,
            cohort_months: 72,
            balance_median: 10_000.0,
            balance_sigma: 0.8,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unsecured personal loans: few cures, high mean loss, short workouts.
    pub fn personal_loans(n_loans: usize, seed: u64) -> Self {
        Self::calibrated(n_loans, 0.749, 0.290, 0.05, 0.6, 4.67, 87, seed).expect("personal-loan preset is feasible")
    }

    /// Residential mortgages: many cures, low mean loss, long workouts.
    pub fn mortgage_loans(n_loans: usize, seed: u64) -> Self {
        Self::calibrated(n_loans, 0.256, 0.366, 0.55, 0.4, 25.64, 113, seed).expect("mortgage preset is feasible")
    }

    pub fn validate(&self) -> Result<()> {
        let probs_ok = (0.0..=1.0).contains(&self.cure_probability)
            && (0.0..=1.0).contains(&self.full_loss_probability)
            && self.cure_probability + self.full_loss_probability <= 1.0 + 1e-12;
        if !probs_ok {
            return Err(Error::SpecInfeasible(
                "outcome probabilities must lie in [0, 1] and sum to at most 1".into(),
            ));
        }
        if !(self.interior_a > 0.0 && self.interior_b > 0.0) {
            return Err(Error::SpecInfeasible("interior beta shapes must be positive".into()));
        }
        if !(self.mean_workout_months >= 0.0 && self.mean_workout_months <= self.max_workout_months as f64) {
            return Err(Error::SpecInfeasible(format!(
                "mean workout {} must lie in [0, {}]",
                self.mean_workout_months, self.max_workout_months
            )));
        }
        if self.cohort_months == 0 {
            return Err(Error::SpecInfeasible("cohort_months must be positive".into()));
        }
        if !(self.balance_median > 0.0) || !(self.balance_sigma >= 0.0) {
            return Err(Error::SpecInfeasible("balance distribution is invalid".into()));
        }
        Ok(())
    }

    pub fn implied_moments(&self) -> ImpliedMoments {
        let q1 = self.full_loss_probability;
        let qi = 1.0 - self.cure_probability - q1;
        let (a, b) = (self.interior_a, self.interior_b);
        let m = a / (a + b);
        let v = a * b / ((a + b).powi(2) * (a + b + 1.0));
        let mean = q1 + qi * m;
        let second = q1 + qi * (v + m * m);
        ImpliedMoments {
            mean,
            std_dev: (second - mean * mean).max(0.0).sqrt(),
        }
    }

    /// Probabilities of each workout length `0..=max`.
    pub fn workout_distribution(&self) -> Vec<f64> {
        let max = self.max_workout_months as usize;
        if max == 0 {
            return vec![1.0];
        }
        let target = self.mean_workout_months;
        let probs = |ln_r: f64| -> Vec<f64> {
            // weights r^k, normalised by the largest to avoid overflow
            let top = if ln_r > 0.0 { ln_r * max as f64 } else { 0.0 };
            let w: Vec<f64> = (0..=max).map(|k| (ln_r * k as f64 - top).exp()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        };
        let mean = |p: &[f64]| p.iter().enumerate().map(|(k, x)| k as f64 * x).sum::<f64>();
        if target <= 0.0 {
            let mut p = vec![0.0; max + 1];
            p[0] = 1.0;
            return p;
        }
        if target >= max as f64 {
            let mut p = vec![0.0; max + 1];
            p[max] = 1.0;
            return p;
        }
        let (mut lo, mut hi) = (-60.0f64, 60.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean(&probs(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        probs(0.5 * (lo + hi))
    }
}

fn schedule_weights(shape: ScheduleShape, months: usize) -> Vec<f64> {
    (1..=months)
        .map(|k| match shape {
            ScheduleShape::FrontLoaded => (months - k + 1) as f64,
            ScheduleShape::Uniform => 1.0,
            ScheduleShape::BackLoaded => k as f64,
        })
        .collect()
}

/// Generates the portfolio; identical specs give identical portfolios.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<DefaultedPortfolio> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let workout = WeightedIndex::new(spec.workout_distribution())
        .map_err(|e| Error::SpecInfeasible(format!("workout distribution: {e}")))?;
    let interior = Beta::new(spec.interior_a, spec.interior_b)
        .map_err(|e| Error::SpecInfeasible(format!("interior beta: {e}")))?;
    let balance = LogNormal::new(spec.balance_median.ln(), spec.balance_sigma)
        .map_err(|e| Error::SpecInfeasible(format!("balance distribution: {e}")))?;

    let mut loans = Vec::with_capacity(spec.n_loans);
    for i in 0..spec.n_loans {
        let default_month: Month = rng.random_range(0..spec.cohort_months);
        let length = workout.sample(&mut rng) as Month;
        let resolution_month = default_month + length;
        let b = (balance.sample(&mut rng) * 100.0).round().max(1.0) / 100.0;
        let u: f64 = rng.random();
        let (outcome, flows) = if u < spec.cure_probability {
            let month = if length == 0 {
                default_month
            } else {
                default_month + rng.random_range(1..=length)
            };
            (Outcome::Cured, vec![(month, b)])
        } else if u < spec.cure_probability + spec.full_loss_probability {
            (Outcome::WrittenOff, Vec::new())
        } else {
            let loss: f64 = interior.sample(&mut rng);
            let recovered = (1.0 - loss) * b;
            let flows = if length == 0 {
                vec![(default_month, recovered)]
            } else {
                let w = schedule_weights(spec.schedule, length as usize);
                let total: f64 = w.iter().sum();
                w.iter()
                    .enumerate()
                    .map(|(k, wk)| (default_month + k as Month + 1, recovered * wk / total))
                    .collect()
            };
            (Outcome::WrittenOff, flows)
        };
        loans.push(CashFlowSeries::new(
            format!("L{i:07}"),
            default_month,
            resolution_month,
            b,
            outcome,
            flows,
        )?);
    }
    DefaultedPortfolio::new(loans)
}
