use serde::{Deserialize, Serialize};

use super::BranchingModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationThresholds {
    /// An assumption with a probability bound passes when the achieved bound exceeds this.
    pub eps_min: f64,
    /// `b` in `1/b ≤ M_{n,n+k}(j,i) ≤ b`.
    pub criticality_bound: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self {
            eps_min: 0.0,
            criticality_bound: 1e3,
        }
    }
}

/// Per `(n, parent, child)` quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellCheck {
    pub n: usize,
    pub parent: usize,
    pub child: usize,
    /// `P(Z_{n+1}(i) ≥ 2 | Z_n = e_j)`
    pub p_at_least_two: f64,
    /// `E(Z_{n+1}(i)² - Z_{n+1}(i) | Z_n = e_j)`
    pub factorial_moment: f64,
}

/// Per `(n, parent)` quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParentCheck {
    pub n: usize,
    pub parent: usize,
    /// `P(Z_{n+1} = 0 | Z_n = e_j)`
    pub p_extinct: f64,
    /// `E(‖Z_{n+1}‖² | Z_n = e_j)`
    pub second_moment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionVerdict {
    pub pass: bool,
    pub achieved: f64,
    /// Generation / type(s) attaining the achieved value.
    pub worst: String,
}

/// Finite-support stand-in for the uniform-integrability assumption.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finiteness {
    pub finite_support: bool,
    pub max_offspring_total: u64,
    pub pass: bool,
}

/// Envelope of `M_{n,n+k}` entries over the horizon, stored in log form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformCriticality {
    pub horizon: usize,
    pub log_min_entry: f64,
    pub log_max_entry: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub horizon: usize,
    /// Generations actually inspected; the tail repeats laws from this range.
    pub checked_generations: usize,
    pub cells: Vec<CellCheck>,
    pub parents: Vec<ParentCheck>,
    pub assumption1: AssumptionVerdict,
    pub assumption2: AssumptionVerdict,
    pub assumption3: AssumptionVerdict,
    pub assumption4: Finiteness,
    /// Smaller of the achieved bounds of assumptions 1 and 2.
    pub eps0: f64,
    /// Largest second moment.
    pub k0: f64,
    pub min_factorial_moment: f64,
    pub uniform_criticality: UniformCriticality,
    pub thresholds: ValidationThresholds,
}

impl AssumptionReport {
    pub fn require(&self, which: &[u8]) -> Result<()> {
        for &a in which {
            let v = match a {
                1 => &self.assumption1,
                2 => &self.assumption2,
                3 => &self.assumption3,
                _ => continue,
            };
            if !v.pass {
                return Err(Error::AssumptionFailed {
                    assumption: a,
                    cell: format!("{} (achieved {})", v.worst, v.achieved),
                });
            }
        }
        Ok(())
    }

    /// `R = √K₀ / ε` with `ε` the assumption-1 bound; the cone-ratio bound of the mean matrices.
    pub fn cone_ratio(&self) -> f64 {
        self.k0.sqrt() / self.assumption1.achieved
    }
}

/// Checks the non-degeneracy assumptions over generations `n < horizon`.
///
/// Laws past the explicit schedule repeat earlier ones, so only
/// `min(horizon, explicit_len)` generations are inspected; the
/// uniform-criticality envelope still covers products up to `horizon`.
pub fn validate_model(
    model: &BranchingModel,
    horizon: usize,
    thresholds: ValidationThresholds,
) -> Result<AssumptionReport> {
    if horizon == 0 {
        return Err(Error::domain("validation horizon must be at least 1"));
    }
    let d = model.d();
    let checked = horizon.min(model.explicit_len());
    let mut cells = Vec::with_capacity(checked * d * d);
    let mut parents = Vec::with_capacity(checked * d);
    let mut a1 = (f64::INFINITY, String::new());
    let mut a2 = (f64::INFINITY, String::new());
    let mut a3 = (0.0f64, String::new());
    let mut min_fm = f64::INFINITY;
    let mut max_total = 0;
    for n in 0..checked {
        for (j, law) in model.laws_at(n).iter().enumerate() {
            let p0 = law.prob_zero();
            let m2 = law.second_moment();
            parents.push(ParentCheck {
                n,
                parent: j + 1,
                p_extinct: p0,
                second_moment: m2,
            });
            if p0 < a2.0 {
                a2 = (p0, format!("n={n} parent={}", j + 1));
            }
            if m2 > a3.0 {
                a3 = (m2, format!("n={n} parent={}", j + 1));
            }
            max_total = max_total.max(law.max_total());
            for i in 0..d {
                let p2 = law.prob_at_least_two(i);
                let fm = law.factorial_moment(i);
                cells.push(CellCheck {
                    n,
                    parent: j + 1,
                    child: i + 1,
                    p_at_least_two: p2,
                    factorial_moment: fm,
                });
                if p2 < a1.0 {
                    a1 = (p2, format!("n={n} parent={} child={}", j + 1, i + 1));
                }
                min_fm = min_fm.min(fm);
            }
        }
    }
    let pass = |x: f64| x > thresholds.eps_min && x > 0.0;
    let uniform_criticality = criticality_envelope(model, horizon, checked, thresholds.criticality_bound);
    Ok(AssumptionReport {
        horizon,
        checked_generations: checked,
        cells,
        parents,
        assumption1: AssumptionVerdict { pass: pass(a1.0), achieved: a1.0, worst: a1.1 },
        assumption2: AssumptionVerdict { pass: pass(a2.0), achieved: a2.0, worst: a2.1 },
        assumption3: AssumptionVerdict { pass: a3.0.is_finite(), achieved: a3.0, worst: a3.1 },
        assumption4: Finiteness {
            finite_support: true,
            max_offspring_total: max_total,
            pass: true,
        },
        eps0: a1.0.min(a2.0),
        k0: a3.0,
        min_factorial_moment: min_fm,
        uniform_criticality,
        thresholds,
    })
}

fn criticality_envelope(
    model: &BranchingModel,
    horizon: usize,
    starts: usize,
    bound: f64,
) -> UniformCriticality {
    let d = model.d();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 0..starts {
        // running product kept as (normalized matrix, log scale)
        let mut prod = Matrix::identity(d, d);
        let mut log_scale = 0.0;
        for k in n..horizon {
            prod *= model.mean_matrix(k);
            let mx = prod.max();
            if mx <= 0.0 {
                lo = f64::NEG_INFINITY;
                break;
            }
            prod /= mx;
            log_scale += mx.ln();
            hi = hi.max(log_scale);
            lo = lo.min(log_scale + prod.min().ln());
        }
    }
    let lb = bound.ln();
    UniformCriticality {
        horizon,
        log_min_entry: lo,
        log_max_entry: hi,
        bound,
        within_bound: lo >= -lb && hi <= lb,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn critical_passes_with_expected_constants() {
        let r = validate_model(&critical(), 10, Default::default()).unwrap();
        assert!(r.assumption1.pass && r.assumption2.pass && r.assumption3.pass);
        assert_eq!(r.eps0, 0.5);
        assert_eq!(r.k0, 2.0);
        assert_eq!(r.min_factorial_moment, 1.0);
        assert_eq!(r.checked_generations, 1);
        assert!(r.uniform_criticality.within_bound);
    }

    #[test]
    fn deterministic_single_child_fails_one_and_two() {
        let m = BranchingModel::constant(vec![uni(&[(1, 1.0)])]).unwrap();
        let r = validate_model(&m, 5, Default::default()).unwrap();
        assert!(!r.assumption1.pass);
        assert!(!r.assumption2.pass);
        assert!(r.assumption3.pass);
        assert!(matches!(r.require(&[1, 3]), Err(Error::AssumptionFailed { assumption: 1, .. })));
    }

    #[test]
    fn non_critical_models_leave_the_band() {
        let r = validate_model(&supercritical(), 200, Default::default()).unwrap();
        assert!(!r.uniform_criticality.within_bound);
        let r = validate_model(&subcritical(), 200, Default::default()).unwrap();
        assert!(!r.uniform_criticality.within_bound);
        assert!((r.uniform_criticality.log_min_entry - 200.0 * 0.8f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn achieved_eps_is_min_of_cells() {
        let r = validate_model(&critical_two_type(), 3, Default::default()).unwrap();
        let a1 = r.cells.iter().map(|c| c.p_at_least_two).fold(f64::INFINITY, f64::min);
        let a2 = r.parents.iter().map(|c| c.p_extinct).fold(f64::INFINITY, f64::min);
        assert_eq!(r.assumption1.achieved, a1);
        assert_eq!(r.eps0, a1.min(a2));
        assert_eq!(r.k0, r.parents.iter().map(|c| c.second_moment).fold(0.0, f64::max));
    }
}
