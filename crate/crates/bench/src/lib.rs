//! Fixtures shared by the criterion benches.

use datasplit::randgen::{generate, ScenarioDesign, ScenarioParams};
use datasplit::rng::{make_stream, Purpose, StreamKey};
use datasplit::Dataset;

pub fn varsel_params(p: usize, rho: f64) -> ScenarioParams {
    ScenarioParams {
        n: 60,
        sigma: 1.0,
        beta: 0.0,
        design: ScenarioDesign::VarSel { p, rho },
    }
}

pub fn binary_params(n: usize, p: usize) -> ScenarioParams {
    ScenarioParams {
        n,
        sigma: 1.0,
        beta: 1.0,
        design: ScenarioDesign::Binary { p },
    }
}

pub fn boxcox_params(n: usize) -> ScenarioParams {
    ScenarioParams {
        n,
        sigma: 1.0,
        beta: 1.0,
        design: ScenarioDesign::BoxCox { lambda: 0.5 },
    }
}

pub fn sample(params: &ScenarioParams, n: Option<usize>, seed: u64) -> Dataset {
    generate(params, n, &mut make_stream(StreamKey::new(seed, 0, Purpose::TrainData))).expect("valid params")
}
