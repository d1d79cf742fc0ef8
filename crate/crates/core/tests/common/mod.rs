//! Random small instances and the property checks shared by the property
//! suites and the acceptance run.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use datasplit::boxcox;
use datasplit::glm::{logit_fit, score_vector};
use datasplit::linmod::ols_fit;
use datasplit::randgen::{copula_normal_correlation, correlated_uniform_design};
use datasplit::rng::{make_stream, Purpose, StreamKey};
use datasplit::select::{outlier_prune, replay_trace, stepwise_aic, Family, SelectedModel, StepwiseStart};
use datasplit::{Dataset, PredictiveDistribution, ResponseKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub const CASES: u32 = 200;

pub fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub type Outcome = Result<(), TestError<String>>;

fn finish<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Outcome {
    r.map_err(|e| match e {
        TestError::Abort(why) => TestError::Abort(why),
        TestError::Fail(why, v) => TestError::Fail(why, format!("{v:?}")),
    })
}

/// Continuous data with `p ≤ 5` covariates and `n ≤ max_n` cases, at least
/// `p + extra` of them.
pub fn continuous(max_n: usize, extra: usize) -> impl Strategy<Value = Dataset> {
    (1usize..=5)
        .prop_flat_map(move |p| {
            (Just(p), (p + extra)..=max_n.max(p + extra)).prop_flat_map(|(p, n)| {
                (
                    Just(p),
                    prop::collection::vec(-3.0..3.0f64, n * p),
                    prop::collection::vec(-5.0..5.0f64, n),
                )
            })
        })
        .prop_map(|(p, x, y)| Dataset::new(x, p, y, ResponseKind::Continuous).unwrap())
}

/// Binary data with `p ≤ 5` covariates and `p + 3 ≤ n ≤ 20`.
pub fn binary() -> impl Strategy<Value = Dataset> {
    (1usize..=5)
        .prop_flat_map(|p| {
            (Just(p), (p + 3)..=20usize).prop_flat_map(|(p, n)| {
                (
                    Just(p),
                    prop::collection::vec(-2.0..2.0f64, n * p),
                    prop::collection::vec(any::<bool>(), n),
                )
            })
        })
        .prop_map(|(p, x, y)| {
            let y = y.into_iter().map(|b| f64::from(u8::from(b))).collect();
            Dataset::new(x, p, y, ResponseKind::Binary).unwrap()
        })
}

fn all_columns(d: &Dataset) -> Vec<usize> {
    (0..d.n_cols()).collect()
}

fn design_row(d: &Dataset, i: usize, cols: &[usize]) -> Vec<f64> {
    std::iter::once(1.0).chain(cols.iter().map(|&j| d.x(i, j))).collect()
}

/// `‖Xᵀ(y − ŷ)‖∞ < 1e-8·‖y‖`.
pub fn ols_orthogonality() -> Outcome {
    finish(runner().run(&continuous(20, 2), |d| {
        let cols = all_columns(&d);
        let m = ols_fit(&d, &cols).unwrap();
        let e = m.residuals(&d);
        let norm_y = d.response().iter().map(|y| y * y).sum::<f64>().sqrt();
        for j in 0..=cols.len() {
            let g: f64 = (0..d.len()).map(|i| design_row(&d, i, &cols)[j] * e[i]).sum();
            prop_assert!(g.abs() < 1e-8 * norm_y, "column {j}: {g}");
        }
        Ok(())
    }))
}

/// Converged logistic fits solve the score equations to 1e-6.
pub fn irls_score_residual() -> Outcome {
    finish(runner().run(&binary(), |d| {
        let cols = all_columns(&d);
        let m = logit_fit(&d, &cols, 50).unwrap();
        if m.converged {
            let g = score_vector(&d, &cols, &m.coefficients);
            let worst = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            prop_assert!(worst < 1e-6, "score residual {worst}");
        }
        Ok(())
    }))
}

fn check_trace(d: &Dataset, family: Family, start: StepwiseStart) -> Result<(), TestCaseError> {
    let scope = all_columns(d);
    let sel = stepwise_aic(d, family, &scope, start).unwrap();
    let SelectedModel::VariableSubset {
        columns,
        start: first,
        start_aic,
        trace,
        ..
    } = sel
    else {
        unreachable!()
    };
    let mut prev = start_aic;
    for s in &trace {
        prop_assert!(s.aic < prev, "AIC {} after {}", s.aic, prev);
        prev = s.aic;
    }
    prop_assert!(trace.len() < 1 << scope.len());
    prop_assert_eq!(replay_trace(&first, &trace), columns);
    Ok(())
}

/// AIC strictly decreases along every stepwise trace, which replays to the
/// selected subset.
pub fn stepwise_monotone_trace() -> Outcome {
    let linear = runner().run(&(continuous(20, 3), any::<bool>()), |(d, null)| {
        let start = if null { StepwiseStart::Null } else { StepwiseStart::Full };
        check_trace(&d, Family::Linear, start)
    });
    finish(linear)?;
    finish(runner().run(&binary(), |d| check_trace(&d, Family::Logistic, StepwiseStart::Full)))
}

/// Heavy-tailed responses: occasional gross errors on a linear signal.
pub fn contaminated() -> impl Strategy<Value = Dataset> {
    (
        continuous(20, 4),
        prop::collection::vec((0.0..1.0f64, -40.0..40.0f64), 20),
    )
        .prop_map(|(d, spikes)| {
            let y: Vec<f64> = (0..d.len())
                .map(|i| {
                    let (u, s) = spikes[i];
                    d.x(i, 0) + 0.1 * d.y(i) + if u < 0.2 { s } else { 0.0 }
                })
                .collect();
            d.with_response(y).unwrap()
        })
}

/// Pruning stops, retains a subset, and leaves nothing further to delete.
pub fn outlier_prune_terminates() -> Outcome {
    finish(runner().run(&contaminated(), |d| {
        let sel = outlier_prune(&d, 3.0).unwrap();
        let SelectedModel::RetainedCases { retained, passes } = &sel else {
            unreachable!()
        };
        prop_assert!(*passes >= 1 && *passes <= d.len());
        prop_assert!(retained.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(retained.len() >= d.n_cols() + 2 && retained.len() <= d.len());
        let kept = d.subset(retained);
        match outlier_prune(&kept, 3.0) {
            Ok(again) => prop_assert_eq!(again.retained().unwrap().len(), retained.len()),
            Err(_) => prop_assert!(retained.len() < d.n_cols() + 3),
        }
        Ok(())
    }))
}

/// The copula's uniform-scale correlation matches the request and the
/// marginals stay in (0, 1).
pub fn copula_correlation() -> Outcome {
    let strategy = (0.0..0.95f64, any::<u64>());
    finish(runner().run(&strategy, |(rho, seed)| {
        let back = 6.0 / std::f64::consts::PI * (copula_normal_correlation(rho) / 2.0).asin();
        prop_assert!((back - rho).abs() < 1e-12);
        let n = 20_000;
        let mut rng = make_stream(StreamKey::new(seed, 0, Purpose::TrainData));
        let x = correlated_uniform_design(n, 2, rho, &mut rng).unwrap();
        prop_assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
        let (a, b): (Vec<f64>, Vec<f64>) = x.chunks(2).map(|r| (r[0], r[1])).unzip();
        let r = pearson(&a, &b);
        // Standard error of r is below (1 − ρ²)/√n ≤ 0.0071.
        prop_assert!((r - rho).abs() < 0.03, "rho {rho}: sample {r}");
        Ok(())
    }))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Integral over the whole line through `x = c + w·tan θ`.
pub fn whole_line(f: impl Fn(f64) -> f64, c: f64, w: f64) -> f64 {
    let g = |t: f64| {
        let sec = 1.0 / t.cos();
        let v = f(c + w * t.tan()) * w * sec * sec;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let edge = 1e-9;
    simpson(g, -FRAC_PI_2 + edge, FRAC_PI_2 - edge, 200_000)
}

fn t_dist(df: f64) -> Box<dyn Fn(f64) -> f64> {
    if df.is_infinite() {
        Box::new(|z: f64| 0.5 * libm_erfc(-z / std::f64::consts::SQRT_2))
    } else {
        let t = StudentsT::new(0.0, 1.0, df).unwrap();
        Box::new(move |z| t.cdf(z))
    }
}

fn libm_erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

fn df_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![(1u32..=40).prop_map(f64::from), Just(f64::INFINITY)]
}

/// Location-scale t densities integrate to the exact mass of μ ± 50s, and
/// to one over the whole line; Box-Cox t densities integrate over y > 0 to
/// one minus the t mass outside the transform's image.
pub fn predictive_normalization() -> Outcome {
    let t_case = (-10.0..10.0f64, 0.01..10.0f64, df_strategy());
    finish(runner().run(&t_case, |(mu, s, df)| {
        let d = PredictiveDistribution::StudentT {
            location: mu,
            scale: s,
            df,
        };
        let f = |y: f64| d.log_density(y).exp();
        let window = simpson(f, mu - 50.0 * s, mu + 50.0 * s, 400_000);
        let cdf = t_dist(df);
        let exact = cdf(50.0) - cdf(-50.0);
        prop_assert!((window - exact).abs() < 1e-6, "window {window} vs {exact}");
        prop_assert!(window <= 1.0 + 1e-9);
        let total = whole_line(f, mu, s);
        prop_assert!((1.0 - 1e-6..=1.0 + 1e-6).contains(&total), "total {total}");
        Ok(())
    }))?;

    let grid = prop::sample::select(boxcox::LAMBDA_GRID.to_vec());
    let bc_case = (grid, -2.0..2.0f64, 0.05..2.0f64, df_strategy());
    finish(runner().run(&bc_case, |(lambda, mu, s, df)| {
        let d = PredictiveDistribution::BoxCoxT {
            location: mu,
            scale: s,
            df,
            lambda,
            jacobian: true,
        };
        // Integrate over u = ln y, within the range of representable y.
        let (u_lo, u_hi) = (f64::MIN_POSITIVE.ln(), f64::MAX.ln());
        let f = |u: f64| {
            if u < u_lo || u > u_hi {
                0.0
            } else {
                let y = u.exp();
                d.log_density(y).exp() * y
            }
        };
        let centre = boxcox::inverse(mu, lambda).map_or(0.0, f64::ln);
        let total = whole_line(f, centre, s.max(0.1));
        let cdf = t_dist(df);
        // The transform is increasing, so these bounds lie inside its image;
        // the mass beyond them is the deficiency plus what f64 cannot reach.
        let (lo, hi) = (boxcox::forward(u_lo.exp(), lambda), boxcox::forward(u_hi.exp(), lambda));
        let inside = cdf((hi - mu) / s) - cdf((lo - mu) / s);
        prop_assert!((total - inside).abs() < 1e-4, "λ={lambda}: {total} vs {inside}");
        prop_assert!(total <= 1.0 + 1e-6);
        Ok(())
    }))
}

/// Explicit leave-one-out refit: residual of case `i` under the fit without
/// it, scaled by that fit's prediction standard error.
pub fn loo_studentized(d: &Dataset, cols: &[usize], i: usize) -> f64 {
    let rows: Vec<Vec<f64>> = (0..d.len())
        .filter(|&r| r != i)
        .map(|r| design_row(d, r, cols))
        .collect();
    let ys: Vec<f64> = (0..d.len()).filter(|&r| r != i).map(|r| d.y(r)).collect();
    let k = cols.len() + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, y) in rows.iter().zip(&ys) {
        for a in 0..k {
            xty[a] += row[a] * y;
            for b in 0..k {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    let inv = gauss_jordan_inverse(xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let sse: f64 = rows
        .iter()
        .zip(&ys)
        .map(|(r, y)| (y - r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).powi(2))
        .sum();
    let s2 = sse / (rows.len() - k) as f64;
    let xi = design_row(d, i, cols);
    let pred: f64 = xi.iter().zip(&beta).map(|(a, b)| a * b).sum();
    let h: f64 = (0..k)
        .map(|a| (0..k).map(|b| xi[a] * inv[a][b] * xi[b]).sum::<f64>())
        .sum();
    (d.y(i) - pred) / (s2 * (1.0 + h)).sqrt()
}

pub fn gauss_jordan_inverse(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..k {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                for j in 0..k {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}
