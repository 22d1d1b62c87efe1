use rand::Rng;
use serde::{Deserialize, Serialize};

/// Semi-norms usable as base prices `f²(q)/v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiNorm {
    L2,
    Linf,
    Lp { p: f64 },
    WeightedL2 { weights: Vec<f64> },
}

impl SemiNorm {
    pub fn is_valid(&self) -> bool {
        match self {
            SemiNorm::L2 | SemiNorm::Linf => true,
            SemiNorm::Lp { p } => p.is_finite() && *p >= 1.0,
            SemiNorm::WeightedL2 { weights } => weights.iter().all(|w| w.is_finite() && *w >= 0.0),
        }
    }

    /// Dimension the semi-norm is tied to, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SemiNorm::WeightedL2 { weights } => Some(weights.len()),
            _ => None,
        }
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        match self {
            SemiNorm::L2 | SemiNorm::WeightedL2 { .. } => self.squared(q).sqrt(),
            SemiNorm::Linf => q.iter().fold(0.0, |m, x| m.max(x.abs())),
            SemiNorm::Lp { p } => {
                let largest = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if largest == 0.0 {
                    return 0.0;
                }
                let s: f64 = q.iter().map(|x| (x.abs() / largest).powf(*p)).sum();
                largest * s.powf(1.0 / p)
            }
        }
    }

    /// `f(q)²`, computed without a square root where the form allows it.
    pub fn squared(&self, q: &[f64]) -> f64 {
        match self {
            SemiNorm::L2 => q.iter().map(|x| x * x).sum(),
            SemiNorm::WeightedL2 { weights } => weights.iter().zip(q).map(|(w, x)| w * x * x).sum(),
            SemiNorm::Linf | SemiNorm::Lp { .. } => {
                let f = self.eval(q);
                f * f
            }
        }
    }
}

/// Randomized check of absolute homogeneity and the triangle inequality.
///
/// Returns `false` on the first violation. Vectors have the semi-norm's own
/// dimension when it has one, otherwise a random dimension in `1..=8`.
pub fn seminorm_axioms_hold<R: Rng + ?Sized>(f: &SemiNorm, trials: usize, rng: &mut R) -> bool {
    const TOL: f64 = 1e-9;
    let sample = |rng: &mut R, n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| match rng.gen_range(0..4) {
                0 => 0.0,
                1 => rng.gen_range(-1.0..1.0),
                _ => rng.gen_range(-100.0..100.0),
            })
            .collect()
    };
    for _ in 0..trials.max(1) {
        let n = f.dimension().unwrap_or_else(|| rng.gen_range(1..=8));
        let q1 = sample(rng, n);
        let q2 = sample(rng, n);
        let c: f64 = rng.gen_range(-50.0..50.0);

        let f1 = f.eval(&q1);
        let f2 = f.eval(&q2);
        if !(f1 >= 0.0 && f2 >= 0.0) {
            return false;
        }
        let scaled: Vec<f64> = q1.iter().map(|x| c * x).collect();
        let expect = c.abs() * f1;
        if (f.eval(&scaled) - expect).abs() > TOL * expect.max(f64::MIN_POSITIVE) {
            return false;
        }
        let sum: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();
        if f.eval(&sum) > (f1 + f2) * (1.0 + TOL) {
            return false;
        }
    }
    true
}
