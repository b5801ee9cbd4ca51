//! Time source abstraction so politeness delays can be tested without
//! sleeping.

use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
    fn sleep(&self, d: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// A clock that only moves when something sleeps on it.
#[derive(Debug)]
pub struct VirtualClock {
    now: Mutex<DateTime<Utc>>,
}

impl VirtualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        VirtualClock { now: Mutex::new(start) }
    }

    /// Starts at 2024-12-01T00:00:00Z.
    pub fn fixed() -> Self {
        Self::new(Utc.with_ymd_and_hms(2024, 12, 1, 0, 0, 0).unwrap())
    }

    pub fn advance(&self, d: Duration) {
        let mut now = self.now.lock().expect("clock poisoned");
        *now += chrono::Duration::from_std(d).expect("duration in range");
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().expect("clock poisoned")
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

/// Sleeps until at least `gap` has passed since `since`.
pub fn wait_gap(clock: &dyn Clock, since: DateTime<Utc>, gap: Duration) {
    let elapsed = (clock.now() - since).to_std().unwrap_or(Duration::ZERO);
    if elapsed < gap {
        clock.sleep(gap - elapsed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_moves_only_on_sleep() {
        let c = VirtualClock::fixed();
        let t0 = c.now();
        assert_eq!(c.now(), t0);
        c.sleep(Duration::from_millis(1500));
        assert_eq!((c.now() - t0).num_milliseconds(), 1500);
    }

    #[test]
    fn wait_gap_sleeps_the_remainder() {
        let c = VirtualClock::fixed();
        let t0 = c.now();
        c.advance(Duration::from_secs(1));
        wait_gap(&c, t0, Duration::from_secs(3));
        assert_eq!((c.now() - t0).num_seconds(), 3);
        wait_gap(&c, t0, Duration::from_secs(2));
        assert_eq!((c.now() - t0).num_seconds(), 3);
    }
}
