//! Sliding-window pull statistics.
//!
//! The window spans the last `w` *time steps* (not per-arm pulls): every push
//! enters the window and evicts the oldest entry once `w` entries are held,
//! so per-arm counts always sum to `min(t, w)`.

use std::collections::VecDeque;

use thiserror::Error;

/// Requested a mean for an arm with no observations in the current window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("arm {arm} has no observations in the current window")]
pub struct EmptyWindow {
    /// The arm whose window was empty.
    pub arm: usize,
}

/// Rolling per-arm counts and feedback sums over the trailing time window.
#[derive(Debug, Clone)]
pub struct WindowStats {
    window: u64,
    history: VecDeque<(u32, f64)>,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl WindowStats {
    /// Creates empty statistics for `arms` arms over a window of `window`
    /// time steps (at least 1).
    #[must_use]
    pub fn new(arms: usize, window: u64) -> Self {
        assert!(arms >= 1, "need at least one arm");
        assert!(window >= 1, "window must span at least one step");
        let cap = usize::try_from(window).unwrap_or(usize::MAX).min(1 << 20);
        Self {
            window,
            history: VecDeque::with_capacity(cap),
            counts: vec![0; arms],
            sums: vec![0.0; arms],
        }
    }

    /// Number of arms tracked.
    #[must_use]
    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    /// The window length in time steps.
    #[must_use]
    pub fn window(&self) -> u64 {
        self.window
    }

    /// Number of observations currently held, i.e. `min(t, window)` after `t`
    /// pushes.
    #[must_use]
    pub fn len(&self) -> u64 {
        self.history.len() as u64
    }

    /// Whether no observation has been recorded yet.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Records one observed feedback value in `[0, 1]` for `arm`, evicting
    /// the observation that fell out of the window.
    pub fn push(&mut self, arm: usize, feedback: f64) {
        assert!(arm < self.counts.len(), "arm {arm} out of range");
        debug_assert!(
            (0.0..=1.0).contains(&feedback),
            "feedback {feedback} outside [0, 1]"
        );
        if self.history.len() as u64 == self.window {
            let (old_arm, old_feedback) = self.history.pop_front().expect("window is nonempty");
            let old_arm = old_arm as usize;
            self.counts[old_arm] -= 1;
            if self.counts[old_arm] == 0 {
                // reset the sum so float residue cannot linger on empty arms
                self.sums[old_arm] = 0.0;
            } else {
                self.sums[old_arm] -= old_feedback;
            }
        }
        self.history.push_back((arm as u32, feedback));
        self.counts[arm] += 1;
        self.sums[arm] += feedback;
    }

    /// Number of in-window observations of `arm`.
    #[must_use]
    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    /// Sum of in-window feedback values of `arm`.
    #[must_use]
    pub fn sum(&self, arm: usize) -> f64 {
        self.sums[arm]
    }

    /// In-window empirical mean of `arm`, clamped to `[0, 1]` against float
    /// drift. Errors when the arm has no in-window observations.
    pub fn mean(&self, arm: usize) -> Result<f64, EmptyWindow> {
        let n = self.counts[arm];
        if n == 0 {
            return Err(EmptyWindow { arm });
        }
        Ok((self.sums[arm] / n as f64).clamp(0.0, 1.0))
    }
}
