use serde::Serialize;

use super::CtModel;
use crate::error::{Error, Result};
use crate::linalg::mat_t_vec;

/// `M(t) = E Z_t` on a grid that contains every breakpoint and integer time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentPath {
    pub times: Vec<f64>,
    pub means: Vec<Vec<f64>>,
}

impl MomentPath {
    /// Mean at the grid point closest to `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        let i = self.times.partition_point(|&x| x < t);
        let i = if i == self.times.len() || (i > 0 && t - self.times[i - 1] < self.times[i] - t) {
            i - 1
        } else {
            i
        };
        &self.means[i]
    }
}

/// Classical fourth-order Runge-Kutta for `M′ = Bᵀ(t) M`.
pub fn moment_ode(ct: &CtModel, time: f64, h: f64, initial: &[f64]) -> Result<MomentPath> {
    if !(time > 0.0 && time.is_finite()) || !(h > 0.0) {
        return Err(Error::domain("moment_ode needs T > 0 and h > 0"));
    }
    if initial.len() != ct.d() {
        return Err(Error::domain("initial mean has the wrong dimension"));
    }
    let breaks = ct.breakpoints(0.0, time);
    let min_gap = std::iter::once(0.0)
        .chain(breaks.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if h > min_gap {
        return Err(Error::domain(format!("step {h} exceeds the smallest breakpoint gap {min_gap}")));
    }
    let mut knots: Vec<f64> = std::iter::once(0.0)
        .chain(breaks)
        .chain((1..).map(f64::from).take_while(|&k| k < time))
        .chain(std::iter::once(time))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut times = vec![0.0];
    let mut means = vec![initial.to_vec()];
    let mut m = initial.to_vec();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let bt = ct.generator(0.5 * (a + b));
        let steps = ((b - a) / h).ceil().max(1.0) as usize;
        let dt = (b - a) / steps as f64;
        let f = |x: &[f64]| mat_t_vec(&bt, x);
        let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + c * k).collect() };
        for s in 0..steps {
            let k1 = f(&m);
            let k2 = f(&axpy(&m, &k1, dt / 2.0));
            let k3 = f(&axpy(&m, &k2, dt / 2.0));
            let k4 = f(&axpy(&m, &k3, dt));
            for i in 0..m.len() {
                m[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            times.push(if s + 1 == steps { b } else { a + (s + 1) as f64 * dt });
            means.push(m.clone());
        }
    }
    Ok(MomentPath { times, means })
}

/// Running trapezoid integral of `1/‖M(t)‖₁` along the path.
pub fn ooii_integral(path: &MomentPath) -> Vec<f64> {
    let inv: Vec<f64> = path.means.iter().map(|m| 1.0 / m.iter().sum::<f64>()).collect();
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for i in 1..path.times.len() {
        acc += 0.5 * (inv[i] + inv[i - 1]) * (path.times[i] - path.times[i - 1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OffspringLaw;
    use crate::simulate::{CtPiece, CtTail};

    fn ct(rate: f64, law: &[(u32, f64)]) -> CtModel {
        CtModel::constant(vec![rate], vec![OffspringLaw::univariate(law).unwrap()]).unwrap()
    }

    #[test]
    fn closed_forms() {
        let flat = moment_ode(&ct(1.0, &[(0, 0.5), (2, 0.5)]), 3.0, 1e-2, &[4.0]).unwrap();
        assert!(flat.means.iter().all(|m| (m[0] - 4.0).abs() < 1e-12));
        let two = [(0, 0.5), (4, 0.5)];
        let p = moment_ode(&ct(1.0, &two), 1.0, 1e-3, &[1.0]).unwrap();
        assert!((p.at(1.0)[0] - std::f64::consts::E).abs() < 1e-6);
        let p = moment_ode(&ct(2.0, &two), 1.0, 1e-3, &[1.0]).unwrap();
        assert!((p.at(1.0)[0] - std::f64::consts::E.powi(2)).abs() < 1e-5);
        assert!(p.times.contains(&1.0));
    }

    #[test]
    fn step_must_fit_between_breakpoints() {
        let law = || OffspringLaw::univariate(&[(0, 0.5), (2, 0.5)]).unwrap();
        let m = CtModel::new(
            1,
            vec![
                CtPiece { start: 0.0, rates: vec![1.0], laws: vec![law()] },
                CtPiece { start: 0.1, rates: vec![2.0], laws: vec![law()] },
            ],
            CtTail::RepeatLast,
        )
        .unwrap();
        assert!(moment_ode(&m, 1.0, 0.2, &[1.0]).is_err());
        assert!(moment_ode(&m, 1.0, 0.05, &[1.0]).is_ok());
    }

    #[test]
    fn ooii_grows_linearly_for_critical_means() {
        let p = moment_ode(&ct(1.0, &[(0, 0.5), (2, 0.5)]), 10.0, 0.1, &[1.0]).unwrap();
        assert!((ooii_integral(&p).last().unwrap() - 10.0).abs() < 1e-9);
    }
}
