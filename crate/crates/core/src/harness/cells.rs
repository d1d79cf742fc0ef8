use crate::randgen::{ScenarioDesign, ScenarioKind, ScenarioParams};
use crate::strategy::Fraction;

pub const FRACTIONS: [Fraction; 3] = [Fraction::ONE_THIRD, Fraction::ONE_HALF, Fraction::TWO_THIRDS];

/// One point of a scenario's factorial design.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCell {
    pub params: ScenarioParams,
    pub fraction: Fraction,
    pub cell_id: String,
}

impl ScenarioCell {
    pub fn new(params: ScenarioParams, fraction: Fraction) -> Self {
        let cell_id = format!("{}/f={fraction}", params.label());
        Self {
            params,
            fraction,
            cell_id,
        }
    }
}

fn cells_for(designs: impl IntoIterator<Item = (usize, f64, f64, ScenarioDesign)>) -> Vec<ScenarioCell> {
    let mut out = Vec::new();
    for (n, sigma, beta, design) in designs {
        for f in FRACTIONS {
            out.push(ScenarioCell::new(ScenarioParams { n, sigma, beta, design }, f));
        }
    }
    out
}

/// The scenario's full factorial design in canonical order, the training
/// fraction varying fastest.
pub fn enumerate_cells(kind: ScenarioKind) -> Vec<ScenarioCell> {
    let mut designs = Vec::new();
    match kind {
        ScenarioKind::BoxCox => {
            for sigma in [0.1, 1.0, 10.0] {
                for beta in [0.0, 1.0] {
                    for n in [18, 48] {
                        for lambda in [-0.5, 0.0, 0.5] {
                            designs.push((n, sigma, beta, ScenarioDesign::BoxCox { lambda }));
                        }
                    }
                }
            }
        }
        ScenarioKind::VarSel => {
            for sigma in [1.0, 5.0] {
                for beta in [0.0, 1.0] {
                    for p in [5, 15] {
                        for rho in [0.0, 0.95] {
                            designs.push((60, sigma, beta, ScenarioDesign::VarSel { p, rho }));
                        }
                    }
                }
            }
        }
        ScenarioKind::Outlier => {
            for n in [18, 48] {
                for sigma in [1.0, 5.0] {
                    for beta in [0.0, 1.0] {
                        for df in [3.0, f64::INFINITY] {
                            designs.push((n, sigma, beta, ScenarioDesign::Outlier { df }));
                        }
                    }
                }
            }
        }
        ScenarioKind::Binary => {
            for p in [1, 3, 5] {
                for n in [18, 48] {
                    for sigma in [0.1, 1.0] {
                        for beta in [0.0, 1.0] {
                            designs.push((n, sigma, beta, ScenarioDesign::Binary { p }));
                        }
                    }
                }
            }
        }
    }
    cells_for(designs)
}
