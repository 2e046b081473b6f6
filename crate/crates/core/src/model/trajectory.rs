use serde::{Deserialize, Serialize};

/// Step bookkeeping of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest scaled local error estimate over accepted steps (at most 1).
    pub max_error: f64,
}

/// Time-stamped packed states, one row per accepted step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, y: &[f64]) {
        self.times.push(t);
        self.states.push(y.to_vec());
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.states.last()?.as_slice()))
    }

    /// Applies `f` to every state, keeping times and stats.
    pub fn map_states(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(|y| f(y)).collect(),
            stats: self.stats,
        }
    }

    /// Component `k` across all rows.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[k]).collect()
    }
}

/// Sup-norm relative deviation of `a` from the reference `b`:
/// `max_k max_t |a_k - b_k| / max_t |b_k|`, over rows with equal times.
/// Components whose reference is identically zero contribute their absolute
/// deviation. Returns `None` if the time grids differ.
pub fn sup_relative_error(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.times != b.times {
        return None;
    }
    let dim = b.states.first().map_or(0, Vec::len);
    let mut worst = 0.0f64;
    for k in 0..dim {
        let scale = b.states.iter().map(|y| y[k].abs()).fold(0.0, f64::max);
        let dev = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| (x[k] - y[k]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(if scale > 0.0 { dev / scale } else { dev });
    }
    Some(worst)
}
