//! Predictive distributions and their log scores.

use statrs::function::gamma::ln_gamma;

use crate::boxcox;

/// Upper bound on any single log score, `ln(10¹⁰)`.
pub const SCORE_CAP: f64 = 23.025_850_929_940_457;
/// Smallest predictive scale used when scoring.
pub const SCALE_FLOOR: f64 = 1e-8;
/// Bernoulli probabilities are clipped into `[PROB_CLIP, 1 − PROB_CLIP]`.
pub const PROB_CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictiveDistribution {
    /// Location-scale Student t; `df = ∞` is the normal.
    StudentT {
        location: f64,
        scale: f64,
        df: f64,
    },
    Bernoulli {
        prob: f64,
    },
    /// Student t on the Box-Cox scale, mapped back to `y > 0`. With
    /// `jacobian` set the density carries the factor `y^(λ−1)`.
    BoxCoxT {
        location: f64,
        scale: f64,
        df: f64,
        lambda: f64,
        jacobian: bool,
    },
}

impl PredictiveDistribution {
    /// True when the predictive scale is below the scoring floor.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            PredictiveDistribution::StudentT { scale, .. } | PredictiveDistribution::BoxCoxT { scale, .. } => {
                !(scale >= SCALE_FLOOR)
            }
            PredictiveDistribution::Bernoulli { .. } => false,
        }
    }

    /// Log density (log mass for Bernoulli) at `y`, with no floor or cap.
    pub fn log_density(&self, y: f64) -> f64 {
        match *self {
            PredictiveDistribution::StudentT { location, scale, df } => {
                StandardT::new(df).log_pdf((y - location) / scale) - scale.ln()
            }
            PredictiveDistribution::Bernoulli { prob } => match y {
                1.0 => prob.ln(),
                0.0 => (1.0 - prob).ln(),
                _ => f64::NEG_INFINITY,
            },
            PredictiveDistribution::BoxCoxT {
                location,
                scale,
                df,
                lambda,
                jacobian,
            } => {
                if !(y > 0.0) {
                    return f64::NEG_INFINITY;
                }
                let z = (boxcox::forward(y, lambda) - location) / scale;
                let base = StandardT::new(df).log_pdf(z) - scale.ln();
                if jacobian {
                    base + boxcox::log_jacobian(y, lambda)
                } else {
                    base
                }
            }
        }
    }
}

/// Log density of the standardized Student t, with the normalizing constant
/// computed once.
#[derive(Debug, Clone, Copy)]
pub struct StandardT {
    df: f64,
    log_norm: f64,
}

impl StandardT {
    pub fn new(df: f64) -> Self {
        // Beyond this the log-gamma difference loses all precision and the
        // t is a normal to working accuracy.
        let df = if df > 1e12 { f64::INFINITY } else { df };
        let log_norm = if df.is_infinite() {
            -0.5 * (2.0 * std::f64::consts::PI).ln()
        } else {
            ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln()
        };
        Self { df, log_norm }
    }

    pub fn log_pdf(&self, z: f64) -> f64 {
        if self.df.is_infinite() {
            self.log_norm - 0.5 * z * z
        } else {
            self.log_norm - 0.5 * (self.df + 1.0) * (z * z / self.df).ln_1p()
        }
    }
}

fn cap(score: f64) -> f64 {
    if score.is_nan() {
        SCORE_CAP
    } else {
        score.min(SCORE_CAP)
    }
}

pub(crate) fn t_score(t: &StandardT, location: f64, scale: f64, y0: f64) -> f64 {
    let s = scale.max(SCALE_FLOOR);
    cap(s.ln() - t.log_pdf((y0 - location) / s))
}

pub(crate) fn boxcox_score(t: &StandardT, location: f64, scale: f64, lambda: f64, jacobian: bool, y0: f64) -> f64 {
    if !(y0 > 0.0 && y0.is_finite()) {
        return SCORE_CAP;
    }
    let base = t_score(t, location, scale, boxcox::forward(y0, lambda));
    if jacobian {
        cap(base - boxcox::log_jacobian(y0, lambda))
    } else {
        base
    }
}

pub(crate) fn bernoulli_score(prob: f64, y0: f64) -> f64 {
    let p = prob.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if y0 == 1.0 {
        -p.ln()
    } else if y0 == 0.0 {
        -(1.0 - p).ln()
    } else {
        SCORE_CAP
    }
}

/// `−ln f(y0)`: negative log density (continuous) or probability mass
/// (Bernoulli), capped at [`SCORE_CAP`]. Outcomes outside the support get
/// the cap.
pub fn log_score(pred: &PredictiveDistribution, y0: f64) -> f64 {
    match *pred {
        PredictiveDistribution::StudentT { location, scale, df } => t_score(&StandardT::new(df), location, scale, y0),
        PredictiveDistribution::Bernoulli { prob } => bernoulli_score(prob, y0),
        PredictiveDistribution::BoxCoxT {
            location,
            scale,
            df,
            lambda,
            jacobian,
        } => boxcox_score(&StandardT::new(df), location, scale, lambda, jacobian, y0),
    }
}
