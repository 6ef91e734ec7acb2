use rand::Rng;
use rand_distr::Binomial;

use super::{check_initial, trajectory_rng, Ensemble, Horizon, SimOptions, Trajectory};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{BranchingModel, OffspringLaw};

/// Adds the offspring of `count` independent parents with law `law` to `out`.
///
/// The number of parents choosing each atom is multinomial; it is drawn as a
/// chain of binomials in atom order.
pub(crate) fn add_offspring<R: Rng>(law: &OffspringLaw, count: u64, out: &mut [u64], rng: &mut R) {
    let atoms = law.atoms();
    let mut remaining = count;
    let mut tail_mass: f64 = atoms.iter().map(|a| a.p).sum();
    for (idx, atom) in atoms.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if idx + 1 == atoms.len() || atom.p >= tail_mass {
            remaining
        } else if atom.p <= 0.0 {
            0
        } else {
            let q = (atom.p / tail_mass).clamp(0.0, 1.0);
            rng.sample(Binomial::new(remaining, q).expect("valid binomial"))
        };
        tail_mass -= atom.p;
        remaining -= k;
        if k > 0 {
            for (o, &a) in out.iter_mut().zip(&atom.offspring) {
                *o = o.saturating_add(k.saturating_mul(a as u64));
            }
        }
    }
}

/// One generation: every particle alive at `n` is replaced by its offspring.
pub fn step_population<R: Rng>(
    model: &BranchingModel,
    n: usize,
    pop: &[u64],
    rng: &mut R,
    cap: u64,
) -> Result<Vec<u64>> {
    check_initial(pop, model.d())?;
    let mut next = vec![0u64; model.d()];
    for (law, &count) in model.laws_at(n).iter().zip(pop) {
        if count > 0 {
            add_offspring(law, count, &mut next, rng);
        }
    }
    let total = next.iter().fold(0u64, |a, &b| a.saturating_add(b));
    if total > cap {
        return Err(Error::ParticleCap { total, cap });
    }
    Ok(next)
}

/// `reps` independent trajectories of `generations` steps from `opts.initial`.
pub fn run_ensemble(
    model: &BranchingModel,
    generations: usize,
    reps: usize,
    seed: u64,
    opts: &SimOptions,
    exec: Exec,
) -> Result<Ensemble> {
    check_initial(&opts.initial, model.d())?;
    let trajectories = exec.map_indexed(reps, |r| {
        let mut rng = trajectory_rng(seed, r as u64);
        let mut state = opts.initial.clone();
        let mut trace = opts.record_trace.then(|| vec![state.clone()]);
        let mut capped = false;
        for n in 0..generations {
            if state.iter().all(|&x| x == 0) {
                if let Some(t) = trace.as_mut() {
                    t.push(state.clone());
                }
                continue;
            }
            match step_population(model, n, &state, &mut rng, opts.cap) {
                Ok(next) => state = next,
                Err(_) => {
                    capped = true;
                    break;
                }
            }
            if let Some(t) = trace.as_mut() {
                t.push(state.clone());
            }
        }
        Trajectory { survived: state.iter().any(|&x| x > 0), state, capped, trace }
    });
    let capped = trajectories.iter().filter(|t| t.capped).count();
    Ok(Ensemble {
        horizon: Horizon::Generations(generations),
        seed,
        options: opts.clone(),
        trajectories,
        capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::simulate::trajectory_rng;

    #[test]
    fn zero_is_absorbing() {
        let mut rng = trajectory_rng(1, 0);
        assert_eq!(step_population(&critical(), 0, &[0], &mut rng, 10).unwrap(), vec![0]);
    }

    #[test]
    fn same_stream_same_draw() {
        let a = step_population(&critical(), 0, &[1000], &mut trajectory_rng(9, 4), u64::MAX).unwrap();
        let b = step_population(&critical(), 0, &[1000], &mut trajectory_rng(9, 4), u64::MAX).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn critical_child_mean() {
        let reps = 100_000;
        let mut rng = trajectory_rng(3, 0);
        let total: u64 = (0..reps)
            .map(|_| step_population(&critical(), 0, &[1], &mut rng, 10).unwrap()[0])
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 1.0).abs() < 3.0 / (reps as f64).sqrt());
    }

    #[test]
    fn cap_triggers() {
        let mut rng = trajectory_rng(0, 0);
        let err = step_population(&supercritical(), 0, &[100], &mut rng, 10).unwrap_err();
        assert!(matches!(err, Error::ParticleCap { cap: 10, .. }));
        let opts = SimOptions { cap: 50, ..SimOptions::new(vec![5]) };
        let e = run_ensemble(&supercritical(), 40, 50, 1, &opts, Exec::Serial).unwrap();
        assert!(e.capped > 0);
        assert!(e.trajectories.iter().filter(|t| t.capped).all(|t| t.survived));
    }

    #[test]
    fn ensembles_do_not_depend_on_execution() {
        let opts = SimOptions::new(vec![1, 1]).with_trace();
        let a = run_ensemble(&critical_two_type(), 30, 500, 11, &opts, Exec::Serial).unwrap();
        let b = run_ensemble(&critical_two_type(), 30, 500, 11, &opts, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(run_ensemble(&critical(), 5, 0, 1, &SimOptions::new(vec![1]), Exec::Serial).unwrap().reps(), 0);
        let mid = a.at_step(10).unwrap();
        assert_eq!(mid.trajectories[3].state, a.trajectories[3].trace.as_ref().unwrap()[10]);
    }
}
