//! Continuous-time processes with piecewise-constant rates and laws.
//!
//! A particle of type `j` alive at time `t` is replaced at rate `ρ_t(j)` by
//! offspring drawn from `P_t(j, ·)`. Simulation proposes events at the
//! constant rate `K·N` for a population of `N`, with `K = max ρ`, picks a
//! particle uniformly and accepts with probability `ρ_t(j)/K`.

use std::path::Path;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{check_initial, trajectory_rng, Ensemble, Horizon, SimOptions, Trajectory};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::Matrix;
use crate::model::{Atom, OffspringLaw};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CtTail {
    /// The last piece lasts forever.
    RepeatLast,
    /// The pieces describe `[0, period)`, which repeats.
    Periodic { period: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtPiece {
    pub start: f64,
    pub rates: Vec<f64>,
    pub laws: Vec<OffspringLaw>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtModel {
    d: usize,
    pieces: Vec<CtPiece>,
    tail: CtTail,
    rate_bound: f64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    start: f64,
    rates: Vec<f64>,
    laws: Vec<Vec<Atom>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCtModel {
    d: usize,
    pieces: Vec<RawPiece>,
    tail: CtTail,
}

impl CtModel {
    pub fn new(d: usize, pieces: Vec<CtPiece>, tail: CtTail) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("number of types must be at least 1"));
        }
        match pieces.first() {
            Some(p) if p.start == 0.0 => {}
            _ => return Err(Error::invalid("first piece must start at time 0")),
        }
        for w in pieces.windows(2) {
            if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                return Err(Error::invalid("piece start times must be finite and strictly increasing"));
            }
        }
        let mut rate_bound = 0.0f64;
        for p in &pieces {
            if p.rates.len() != d || p.laws.len() != d {
                return Err(Error::invalid(format!("piece at t={} needs {d} rates and {d} laws", p.start)));
            }
            if p.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(Error::invalid(format!("rates at t={} must be positive and finite", p.start)));
            }
            if p.laws.iter().any(|l| l.dim() != d) {
                return Err(Error::invalid(format!("law dimension mismatch at t={}", p.start)));
            }
            rate_bound = p.rates.iter().fold(rate_bound, |a, &b| a.max(b));
        }
        if let CtTail::Periodic { period } = tail {
            let last = pieces.last().expect("nonempty").start;
            if !(period.is_finite() && period > last) {
                return Err(Error::invalid(format!("period {period} must exceed the last piece start {last}")));
            }
        }
        Ok(Self { d, pieces, tail, rate_bound })
    }

    /// Time-homogeneous model with one rate and one law per type.
    pub fn constant(rates: Vec<f64>, laws: Vec<OffspringLaw>) -> Result<Self> {
        let d = laws.len();
        Self::new(d, vec![CtPiece { start: 0.0, rates, laws }], CtTail::RepeatLast)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn pieces(&self) -> &[CtPiece] {
        &self.pieces
    }

    pub fn tail(&self) -> CtTail {
        self.tail
    }

    /// `max ρ_t(j)`, the proposal rate per particle.
    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    fn piece_index(&self, t: f64) -> usize {
        let t = match self.tail {
            CtTail::RepeatLast => t,
            CtTail::Periodic { period } => t.rem_euclid(period),
        };
        self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)
    }

    pub fn piece_at(&self, t: f64) -> &CtPiece {
        &self.pieces[self.piece_index(t)]
    }

    /// Times in `(a, b)` where the piece in force changes, ascending.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.tail {
            CtTail::RepeatLast => {
                out.extend(self.pieces.iter().map(|p| p.start).filter(|&s| s > a && s < b));
            }
            CtTail::Periodic { period } => {
                let first = (a / period).floor().max(0.0) as u64;
                let mut cycle = first;
                loop {
                    let base = cycle as f64 * period;
                    if base >= b {
                        break;
                    }
                    for p in &self.pieces {
                        let s = base + p.start;
                        if s > a && s < b && (cycle > 0 || p.start > 0.0) {
                            out.push(s);
                        }
                    }
                    cycle += 1;
                }
            }
        }
        out
    }

    /// `B(t)_{ji} = ρ_t(j) (E X_j(i) − δ_ij)`.
    pub fn generator(&self, t: f64) -> Matrix {
        let p = self.piece_at(t);
        let mut b = Matrix::zeros(self.d, self.d);
        for (j, (law, &rate)) in p.laws.iter().zip(&p.rates).enumerate() {
            for (i, m) in law.mean().into_iter().enumerate() {
                b[(j, i)] = rate * (m - f64::from(u8::from(i == j)));
            }
        }
        b
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCtModel = serde_json::from_str(text)?;
        let pieces = raw
            .pieces
            .into_iter()
            .map(|p| {
                let laws = p
                    .laws
                    .into_iter()
                    .enumerate()
                    .map(|(j, atoms)| {
                        OffspringLaw::new(raw.d, atoms, &format!("t={} type {}", p.start, j + 1))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(CtPiece { start: p.start, rates: p.rates, laws })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.d, pieces, raw.tail)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let raw = RawCtModel {
            d: self.d,
            pieces: self
                .pieces
                .iter()
                .map(|p| RawPiece {
                    start: p.start,
                    rates: p.rates.clone(),
                    laws: p.laws.iter().map(|l| l.atoms().to_vec()).collect(),
                })
                .collect(),
            tail: self.tail,
        };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }
}

/// Bounds on rates and transition laws over all pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtAssumptionReport {
    pub min_rate: f64,
    pub max_rate: f64,
    /// `min P(X(i) ≥ 2)`
    pub min_p_at_least_two: f64,
    /// `min P(X = 0)`
    pub min_p_extinct: f64,
    /// `max E‖X‖²`
    pub max_second_moment: f64,
    pub max_third_moment: f64,
    /// Largest `ε₀` and smallest `K₀` for which 0′-3′ hold.
    pub eps0: f64,
    pub k0: f64,
    pub pass: bool,
}

pub fn validate_ct(ct: &CtModel) -> CtAssumptionReport {
    let mut r = CtAssumptionReport {
        min_rate: f64::INFINITY,
        max_rate: 0.0,
        min_p_at_least_two: f64::INFINITY,
        min_p_extinct: f64::INFINITY,
        max_second_moment: 0.0,
        max_third_moment: 0.0,
        eps0: 0.0,
        k0: 0.0,
        pass: false,
    };
    for p in &ct.pieces {
        for (law, &rate) in p.laws.iter().zip(&p.rates) {
            r.min_rate = r.min_rate.min(rate);
            r.max_rate = r.max_rate.max(rate);
            r.min_p_extinct = r.min_p_extinct.min(law.prob_zero());
            r.max_second_moment = r.max_second_moment.max(law.second_moment());
            let third = law
                .atoms()
                .iter()
                .map(|a| a.p * (a.offspring.iter().map(|&x| x as f64).sum::<f64>()).powi(3))
                .sum::<f64>();
            r.max_third_moment = r.max_third_moment.max(third);
            for i in 0..ct.d {
                r.min_p_at_least_two = r.min_p_at_least_two.min(law.prob_at_least_two(i));
            }
        }
    }
    r.eps0 = r.min_rate.min(r.min_p_at_least_two).min(r.min_p_extinct);
    r.k0 = r.max_rate.max(r.max_second_moment);
    r.pass = r.eps0 > 0.0;
    r
}

/// Cumulative atom probabilities per piece and type.
struct Samplers {
    cumulative: Vec<Vec<Vec<f64>>>,
}

impl Samplers {
    fn new(ct: &CtModel) -> Self {
        let cumulative = ct
            .pieces
            .iter()
            .map(|p| {
                p.laws
                    .iter()
                    .map(|l| {
                        l.atoms()
                            .iter()
                            .scan(0.0, |acc, a| {
                                *acc += a.p;
                                Some(*acc)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { cumulative }
    }

    fn draw<R: Rng>(&self, piece: usize, j: usize, rng: &mut R) -> usize {
        let c = &self.cumulative[piece][j];
        let x = rng.random::<f64>() * c[c.len() - 1];
        c.partition_point(|&v| v <= x).min(c.len() - 1)
    }
}

/// `reps` trajectories on `[0, time]`; traces hold the states at integer times.
pub fn simulate_ct(
    ct: &CtModel,
    time: f64,
    reps: usize,
    seed: u64,
    opts: &SimOptions,
    exec: Exec,
) -> Result<Ensemble> {
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::domain("simulation time must be positive and finite"));
    }
    check_initial(&opts.initial, ct.d)?;
    let samplers = Samplers::new(ct);
    let k = ct.rate_bound;
    let last_record = time.floor() as usize;
    let trajectories = exec.map_indexed(reps, |r| {
        let mut rng = trajectory_rng(seed, r as u64);
        let mut state = opts.initial.clone();
        let mut total: u64 = state.iter().sum();
        let mut trace = opts.record_trace.then(|| vec![state.clone()]);
        let mut next_record = 1usize;
        let mut t = 0.0;
        let mut capped = false;
        loop {
            let t_next = if total == 0 {
                f64::INFINITY
            } else {
                t + rng.sample::<f64, _>(Exp1) / (k * total as f64)
            };
            if let Some(tr) = trace.as_mut() {
                while next_record <= last_record && next_record as f64 <= t_next {
                    tr.push(state.clone());
                    next_record += 1;
                }
            }
            if t_next > time {
                break;
            }
            t = t_next;
            let mut idx = rng.random_range(0..total);
            let j = state
                .iter()
                .position(|&c| {
                    if idx < c {
                        true
                    } else {
                        idx -= c;
                        false
                    }
                })
                .expect("index inside population");
            let pi = ct.piece_index(t);
            let rate = ct.pieces[pi].rates[j];
            if rate < k && rng.random::<f64>() * k >= rate {
                continue;
            }
            let atom = &ct.pieces[pi].laws[j].atoms()[samplers.draw(pi, j, &mut rng)];
            let mut next = state.clone();
            next[j] -= 1;
            for (s, &a) in next.iter_mut().zip(&atom.offspring) {
                *s += a as u64;
            }
            let new_total: u64 = next.iter().sum();
            if new_total > opts.cap {
                capped = true;
                break;
            }
            state = next;
            total = new_total;
        }
        Trajectory { survived: total > 0, state, capped, trace }
    });
    let capped = trajectories.iter().filter(|t| t.capped).count();
    Ok(Ensemble { horizon: Horizon::Time(time), seed, options: opts.clone(), trajectories, capped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::sample_moments;

    pub(crate) fn critical_ct(rate: f64) -> CtModel {
        CtModel::constant(vec![rate], vec![OffspringLaw::univariate(&[(0, 0.5), (2, 0.5)]).unwrap()]).unwrap()
    }

    #[test]
    fn empty_population_stays_empty() {
        let e = simulate_ct(&critical_ct(1.0), 3.0, 10, 1, &SimOptions::new(vec![0]).with_trace(), Exec::Serial)
            .unwrap();
        assert!(e.trajectories.iter().all(|t| !t.survived && t.trace.as_ref().unwrap().len() == 4));
    }

    #[test]
    fn critical_mean_is_constant() {
        let e = simulate_ct(&critical_ct(1.0), 5.0, 20_000, 4, &SimOptions::new(vec![1]), Exec::Parallel).unwrap();
        let m = sample_moments(&e).unwrap();
        assert!((m.mean[0] - 1.0).abs() < 3.0 * m.mean_se[0]);
        let again = simulate_ct(&critical_ct(1.0), 5.0, 20_000, 4, &SimOptions::new(vec![1]), Exec::Serial).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn periodic_lookup_and_breakpoints() {
        let law = || OffspringLaw::univariate(&[(0, 0.5), (2, 0.5)]).unwrap();
        let ct = CtModel::new(
            1,
            vec![
                CtPiece { start: 0.0, rates: vec![1.0], laws: vec![law()] },
                CtPiece { start: 0.5, rates: vec![3.0], laws: vec![law()] },
            ],
            CtTail::Periodic { period: 2.0 },
        )
        .unwrap();
        assert_eq!(ct.piece_at(2.7).rates, vec![3.0]);
        assert_eq!(ct.piece_at(4.1).rates, vec![1.0]);
        assert_eq!(ct.breakpoints(0.0, 4.6), vec![0.5, 2.0, 2.5, 4.0, 4.5]);
        assert_eq!(ct.rate_bound(), 3.0);
        let back = CtModel::from_json(&ct.to_json()).unwrap();
        assert_eq!(back, ct);
    }

    #[test]
    fn assumption_bounds() {
        let r = validate_ct(&critical_ct(2.0));
        assert_eq!(r.eps0, 0.5);
        assert_eq!(r.k0, 2.0);
        assert!(r.pass);
        assert!(CtModel::constant(vec![0.0], vec![OffspringLaw::univariate(&[(0, 1.0)]).unwrap()]).is_err());
    }
}
