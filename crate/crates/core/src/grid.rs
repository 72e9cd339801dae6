use crate::{Error, Result};

/// Uniform time grid `t_k = t_start + k dt`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::invalid("t_end", "must be finite and greater than t_start"));
        }
        if steps < 2 {
            return Err(Error::invalid("steps", "at least 2 steps are required"));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            steps,
        })
    }

    /// Grid over `[0, t_end]` whose step does not exceed `max_dt`.
    pub fn with_max_dt(t_end: f64, max_dt: f64) -> Result<Self> {
        if !(max_dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let steps = libm::ceil(t_end / max_dt - 1e-9).max(2.0) as usize;
        Self::new(0.0, t_end, steps)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Every `stride`-th point of this grid.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.steps % stride != 0 {
            return Err(Error::invalid("analysis_stride", "must divide the number of steps"));
        }
        Self::new(self.t_start, self.t_end, self.steps / stride)
    }

    /// Same span with twice as many steps.
    pub fn refined(&self) -> Self {
        TimeGrid {
            steps: self.steps * 2,
            ..*self
        }
    }

    /// Grid truncated to its first `k + 1` points.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.t_start, self.time(k), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn points_and_spacing() {
        let g = TimeGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.time(4), 2.0);
        assert_eq!(g.subsample(2).unwrap().steps(), 2);
        assert!(g.subsample(3).is_err());
    }

    #[test]
    fn max_dt_rounds_up() {
        let g = TimeGrid::with_max_dt(1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 4);
        assert!(g.dt() <= 0.3);
    }
}
