/// `θ(k+1) = (1 + √(1 + 4θ(k)²)) / 2`.
pub fn theta_next(theta: f64) -> f64 {
    0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * theta * theta))
}

/// The momentum sequence `θ(1) = 1, θ(2), …`.
#[derive(Debug, Clone)]
pub struct ThetaSequence {
    current: f64,
}

impl Default for ThetaSequence {
    fn default() -> Self {
        Self { current: 1.0 }
    }
}

impl Iterator for ThetaSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.current;
        self.current = theta_next(out);
        Some(out)
    }
}
