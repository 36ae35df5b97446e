//! Continuation schedules as pure functions of the optimization iteration.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Continuation,
    /// Holds every parameter at its final value.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    pub kind: ScheduleKind,
    /// Bezier slope at `eta = 0`: start and end values.
    pub k1: [f64; 2],
    /// Bezier slope at `eta = 1`.
    pub k2: [f64; 2],
    /// Iterations over which the slopes move linearly.
    pub bezier_iters: [usize; 2],
    /// Load fraction held until `load_hold`.
    pub load_start: f64,
    pub load_hold: usize,
    /// Iteration at which the full load is reached.
    pub load_full: usize,
    /// Two-material penalty power: start and end.
    pub p: [f64; 2],
    pub p_full: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            kind: ScheduleKind::Continuation,
            k1: [0.5, 0.125],
            k2: [2.0, 8.0],
            bezier_iters: [1, 50],
            load_start: 0.7,
            load_hold: 60,
            load_full: 100,
            p: [2.0, 8.0],
            p_full: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleValues {
    pub k1: f64,
    pub k2: f64,
    pub load: f64,
    pub p: f64,
}

fn ramp(k: usize, k0: usize, k1: usize, a: f64, b: f64) -> f64 {
    if k <= k0 {
        a
    } else if k >= k1 {
        b
    } else {
        a + (b - a) * (k - k0) as f64 / (k1 - k0) as f64
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.bezier_iters[0] > self.bezier_iters[1] {
            errs.push("schedule.bezier_iters must be ordered".to_string());
        }
        if self.load_hold > self.load_full {
            errs.push("schedule.load_hold must not exceed schedule.load_full".to_string());
        }
        if !(self.load_start > 0.0 && self.load_start <= 1.0) {
            errs.push(format!("schedule.load_start must lie in (0, 1] (got {})", self.load_start));
        }
        errs
    }

    /// Parameter values at iteration `k` (1-based).
    pub fn at(&self, k: usize) -> ScheduleValues {
        if self.kind == ScheduleKind::Fixed {
            return ScheduleValues { k1: self.k1[1], k2: self.k2[1], load: 1.0, p: self.p[1] };
        }
        let [b0, b1] = self.bezier_iters;
        ScheduleValues {
            k1: ramp(k, b0, b1, self.k1[0], self.k1[1]),
            k2: ramp(k, b0, b1, self.k2[0], self.k2[1]),
            load: ramp(k, self.load_hold, self.load_full, self.load_start, 1.0),
            p: ramp(k, 0, self.p_full, self.p[0], self.p[1]),
        }
    }

    /// First iteration from which every value is constant.
    pub fn stationary_from(&self) -> usize {
        match self.kind {
            ScheduleKind::Fixed => 0,
            ScheduleKind::Continuation => self.bezier_iters[1].max(self.load_full).max(self.p_full),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = ScheduleParams::default();
        let v1 = s.at(1);
        assert_eq!((v1.k1, v1.k2, v1.load, v1.p), (0.5, 2.0, 0.7, 2.06));
        let v = s.at(50);
        assert_eq!((v.k1, v.k2), (0.125, 8.0));
        assert_eq!(s.at(60).load, 0.7);
        assert!((s.at(80).load - 0.85).abs() < 1e-15);
        assert_eq!(s.at(100).load, 1.0);
        assert_eq!(s.at(100).p, 8.0);
        assert_eq!(s.at(300), s.at(100));
    }
}
