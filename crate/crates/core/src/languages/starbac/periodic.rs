use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const MONTHS: u32 = 12;
pub const DAYS: u32 = 31;
pub const HOURS: u32 = 24;

/// Month, day and hour, all 1-based. Hour `h` is the hour ending at `h`
/// o'clock, so 8AM to 5PM is hours 9 through 17.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Instant {
    pub month: u32,
    pub day: u32,
    pub hour: u32,
}

impl Instant {
    pub fn new(month: u32, day: u32, hour: u32) -> Self {
        Instant { month, day, hour }
    }

    pub fn is_valid(&self) -> bool {
        (1..=MONTHS).contains(&self.month)
            && (1..=DAYS).contains(&self.day)
            && (1..=HOURS).contains(&self.hour)
    }

    pub fn name(&self) -> String {
        format!("{}-{}-{}", self.month, self.day, self.hour)
    }

    pub fn all() -> impl Iterator<Item = Instant> {
        (1..=MONTHS).flat_map(|m| {
            (1..=DAYS).flat_map(move |d| (1..=HOURS).map(move |h| Instant::new(m, d, h)))
        })
    }
}

/// `(months, days, hours, window)`: an instant satisfies it when its month
/// and day are listed and some listed hour `h'` has `h' ≤ hour < h' + window`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicExpression {
    pub months: BTreeSet<u32>,
    pub days: BTreeSet<u32>,
    pub hours: BTreeSet<u32>,
    pub window: u32,
}

impl PeriodicExpression {
    pub fn new(
        months: impl IntoIterator<Item = u32>,
        days: impl IntoIterator<Item = u32>,
        hours: impl IntoIterator<Item = u32>,
        window: u32,
    ) -> Self {
        PeriodicExpression {
            months: months.into_iter().collect(),
            days: days.into_iter().collect(),
            hours: hours.into_iter().collect(),
            window,
        }
    }

    pub fn satisfied_by(&self, t: Instant) -> bool {
        self.months.contains(&t.month)
            && self.days.contains(&t.day)
            && self
                .hours
                .iter()
                .any(|&h| h <= t.hour && t.hour < h + self.window)
    }

    /// Equivalent expression with window 1. Hours past the calendar are
    /// dropped since no instant reaches them.
    pub fn normalized(&self) -> PeriodicExpression {
        let hours = self
            .hours
            .iter()
            .flat_map(|&h| (0..self.window).map(move |k| h + k))
            .filter(|h| *h <= HOURS)
            .collect();
        PeriodicExpression {
            months: self.months.clone(),
            days: self.days.clone(),
            hours,
            window: 1,
        }
    }

    /// Enabled memberships weighted per calendar.
    pub fn structural_complexity(&self, weights: [f64; 3]) -> f64 {
        weights[0] * self.months.len() as f64
            + weights[1] * self.days.len() as f64
            + weights[2] * self.hours.len() as f64
    }
}
