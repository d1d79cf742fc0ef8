//! The Box-Cox power family `g(y) = (y^λ − 1)/λ`, with `g(y) = ln y` at λ = 0.

/// Grid of interpretable transformation indices the selector chooses from.
pub const LAMBDA_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

pub fn forward(y: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        y.ln()
    } else {
        (lambda * y.ln()).exp_m1() / lambda
    }
}

/// Inverse transform, or `None` when `1 + λt ≤ 0` (no positive preimage) or
/// the preimage overflows.
pub fn inverse(t: f64, lambda: f64) -> Option<f64> {
    let y = if lambda == 0.0 {
        t.exp()
    } else {
        let base = lambda * t;
        if base <= -1.0 {
            return None;
        }
        (base.ln_1p() / lambda).exp()
    };
    (y.is_finite() && y > 0.0).then_some(y)
}

/// `ln |g'(y)| = (λ − 1) ln y`.
pub fn log_jacobian(y: f64, lambda: f64) -> f64 {
    (lambda - 1.0) * y.ln()
}

/// Image of `(0, ∞)` under the transform, as `(lower, upper)`.
pub fn image(lambda: f64) -> (f64, f64) {
    if lambda > 0.0 {
        (-1.0 / lambda, f64::INFINITY)
    } else if lambda < 0.0 {
        (f64::NEG_INFINITY, -1.0 / lambda)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}
