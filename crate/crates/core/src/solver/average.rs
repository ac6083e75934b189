use nalgebra::DVector;

use super::config::Averaging;

/// Running weighted average of the iterates `x_0, x_1, ...`.
#[derive(Debug, Clone)]
pub struct AverageAccumulator {
    mode: Averaging,
    sum: DVector<f64>,
    weight_total: f64,
    count: usize,
}

impl AverageAccumulator {
    pub fn new(mode: Averaging, dim: usize) -> Self {
        Self {
            mode,
            sum: DVector::zeros(dim),
            weight_total: 0.0,
            count: 0,
        }
    }

    pub fn mode(&self) -> Averaging {
        self.mode
    }

    /// Weight given to iterate `x_t` taken with stepsize `alpha_t`.
    pub fn weight(mode: Averaging, t: usize, alpha_t: f64) -> f64 {
        match mode {
            Averaging::ConvexWeights => alpha_t,
            Averaging::StronglyConvexWeights => ((t + 1) as f64).powi(2),
            Averaging::None => 0.0,
        }
    }

    /// Adds iterate `x_t`; calls must come in order `t = 0, 1, ...`.
    pub fn push(&mut self, alpha_t: f64, x_t: &DVector<f64>) {
        if self.mode == Averaging::None {
            return;
        }
        let w = Self::weight(self.mode, self.count, alpha_t);
        self.sum.axpy(w, x_t, 1.0);
        self.weight_total += w;
        self.count += 1;
    }

    pub fn weight_total(&self) -> f64 {
        self.weight_total
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The current average, or `None` before the first push or when averaging
    /// is disabled.
    pub fn average(&self) -> Option<DVector<f64>> {
        (self.count > 0 && self.weight_total > 0.0).then(|| &self.sum / self.weight_total)
    }
}
