use serde::{Deserialize, Serialize};

use super::seminorm::SemiNorm;
use super::transform::{self, ext_mul, Transform};
use crate::query::PricedQuery;

/// A price function built from semi-norm base prices and closure combinators.
///
/// Every node accepted by [`validate`] is non-decreasing, subadditive and
/// zero at zero in its arguments, so any tree passing it is arbitrage-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceExpr {
    /// `f(q)² / v`.
    Base(SemiNorm),
    #[serde(rename = "lincomb")]
    LinearComb(Vec<(f64, PriceExpr)>),
    Max(Vec<PriceExpr>),
    #[serde(rename = "cutoff")]
    CutOff { cap: f64, inner: Box<PriceExpr> },
    Power { exponent: f64, inner: Box<PriceExpr> },
    Log1p(Box<PriceExpr>),
    /// `√(a·b)`. Parsed and evaluated, but rejected by [`validate`]:
    /// `√((x₁+x₂)(y₁+y₂)) ≥ √(x₁y₁) + √(x₂y₂)`, so it is not subadditive.
    #[serde(rename = "geomean")]
    GeoMean(Box<PriceExpr>, Box<PriceExpr>),
    Atan { scale: f64, inner: Box<PriceExpr> },
    Tanh { scale: f64, inner: Box<PriceExpr> },
    AlgSigmoid { scale: f64, inner: Box<PriceExpr> },
    #[serde(rename = "scale")]
    ScaleOut { factor: f64, inner: Box<PriceExpr> },
}

impl PriceExpr {
    pub fn base(f: SemiNorm) -> Self {
        PriceExpr::Base(f)
    }

    pub fn lincomb(terms: Vec<(f64, PriceExpr)>) -> Self {
        PriceExpr::LinearComb(terms)
    }

    pub fn max(children: Vec<PriceExpr>) -> Self {
        PriceExpr::Max(children)
    }

    pub fn geomean(a: PriceExpr, b: PriceExpr) -> Self {
        PriceExpr::GeoMean(Box::new(a), Box::new(b))
    }

    pub fn cutoff(self, cap: f64) -> Self {
        PriceExpr::CutOff { cap, inner: Box::new(self) }
    }

    pub fn power(self, exponent: f64) -> Self {
        PriceExpr::Power { exponent, inner: Box::new(self) }
    }

    pub fn log1p(self) -> Self {
        PriceExpr::Log1p(Box::new(self))
    }

    pub fn atan(self, scale: f64) -> Self {
        PriceExpr::Atan { scale, inner: Box::new(self) }
    }

    pub fn tanh(self, scale: f64) -> Self {
        PriceExpr::Tanh { scale, inner: Box::new(self) }
    }

    pub fn alg_sigmoid(self, scale: f64) -> Self {
        PriceExpr::AlgSigmoid { scale, inner: Box::new(self) }
    }

    pub fn scaled(self, factor: f64) -> Self {
        PriceExpr::ScaleOut { factor, inner: Box::new(self) }
    }

    /// Wraps child expressions with the node matching `t`.
    ///
    /// Panics if `t` does not accept `children.len()` arguments.
    pub fn from_transform(t: &Transform, mut children: Vec<PriceExpr>) -> Self {
        assert!(t.accepts(children.len()), "{t:?} does not take {} arguments", children.len());
        let mut one = || children.pop().expect("arity checked");
        match t {
            Transform::Identity => one(),
            Transform::LinearComb { coeffs } => PriceExpr::LinearComb(coeffs.iter().copied().zip(children).collect()),
            Transform::Max => PriceExpr::Max(children),
            Transform::CutOff { cap } => one().cutoff(*cap),
            Transform::Power { exponent } => one().power(*exponent),
            Transform::Log1p => one().log1p(),
            Transform::GeoMean => {
                let b = children.pop().expect("arity checked");
                let a = children.pop().expect("arity checked");
                PriceExpr::geomean(a, b)
            }
            Transform::Atan { scale } => one().atan(*scale),
            Transform::Tanh { scale } => one().tanh(*scale),
            Transform::AlgSigmoid { scale } => one().alg_sigmoid(*scale),
        }
    }

    fn children(&self) -> Vec<&PriceExpr> {
        match self {
            PriceExpr::Base(_) => vec![],
            PriceExpr::LinearComb(terms) => terms.iter().map(|(_, e)| e).collect(),
            PriceExpr::Max(cs) => cs.iter().collect(),
            PriceExpr::GeoMean(a, b) => vec![a, b],
            PriceExpr::CutOff { inner, .. }
            | PriceExpr::Power { inner, .. }
            | PriceExpr::Atan { inner, .. }
            | PriceExpr::Tanh { inner, .. }
            | PriceExpr::AlgSigmoid { inner, .. }
            | PriceExpr::ScaleOut { inner, .. } => vec![inner],
            PriceExpr::Log1p(inner) => vec![inner],
        }
    }

    /// All semi-norms appearing at the leaves.
    pub fn leaves(&self) -> Vec<&SemiNorm> {
        match self {
            PriceExpr::Base(f) => vec![f],
            other => other.children().into_iter().flat_map(|c| c.leaves()).collect(),
        }
    }

    pub fn eval(&self, q: &PricedQuery) -> f64 {
        match self {
            PriceExpr::Base(f) => {
                let f2 = f.squared(q.query().coefficients());
                let v = q.variance();
                if f2 == 0.0 {
                    0.0
                } else if v == 0.0 {
                    f64::INFINITY
                } else {
                    f2 / v
                }
            }
            PriceExpr::LinearComb(terms) => terms.iter().map(|(c, e)| ext_mul(*c, e.eval(q))).sum(),
            PriceExpr::Max(cs) => cs.iter().map(|e| e.eval(q)).fold(0.0, f64::max),
            PriceExpr::CutOff { cap, inner } => transform::cutoff(inner.eval(q), *cap),
            PriceExpr::Power { exponent, inner } => transform::power(inner.eval(q), *exponent),
            PriceExpr::Log1p(inner) => transform::log1p(inner.eval(q)),
            PriceExpr::GeoMean(a, b) => transform::geomean(a.eval(q), b.eval(q)),
            PriceExpr::Atan { scale, inner } => ext_mul(*scale, transform::atan(inner.eval(q))),
            PriceExpr::Tanh { scale, inner } => ext_mul(*scale, transform::tanh(inner.eval(q))),
            PriceExpr::AlgSigmoid { scale, inner } => ext_mul(*scale, transform::alg_sigmoid(inner.eval(q))),
            PriceExpr::ScaleOut { factor, inner } => ext_mul(*factor, inner.eval(q)),
        }
    }
}

/// Evaluates the price of a query. Total on well-formed input.
pub fn price(expr: &PriceExpr, q: &PricedQuery) -> f64 {
    expr.eval(q)
}

/// True iff every node is whitelisted with admissible parameters.
pub fn validate(expr: &PriceExpr) -> bool {
    let nonneg = |x: f64| x.is_finite() && x >= 0.0;
    let here = match expr {
        PriceExpr::Base(f) => f.is_valid(),
        PriceExpr::LinearComb(terms) => terms.iter().all(|(c, _)| nonneg(*c)),
        PriceExpr::Max(cs) => !cs.is_empty(),
        PriceExpr::CutOff { cap, .. } => !cap.is_nan() && *cap >= 0.0,
        PriceExpr::Power { exponent, .. } => *exponent > 0.0 && *exponent <= 1.0,
        PriceExpr::Log1p(_) => true,
        PriceExpr::GeoMean(..) => false,
        PriceExpr::Atan { scale, .. } | PriceExpr::Tanh { scale, .. } | PriceExpr::AlgSigmoid { scale, .. } => {
            nonneg(*scale)
        }
        PriceExpr::ScaleOut { factor, .. } => nonneg(*factor),
    };
    here && expr.children().into_iter().all(validate)
}

/// [`validate`], plus every dimension-bearing leaf matches `n`.
pub fn validate_for_dimension(expr: &PriceExpr, n: usize) -> bool {
    validate(expr) && expr.leaves().iter().all(|f| f.dimension().is_none_or(|d| d == n))
}
