//! The process observed every `l` generations.
//!
//! The one-step law of the skipped process at step `n` is the law of
//! `Z_{(n+1)l}` given `Z_{nl} = e_j`, i.e. the composition
//! `g_{nl} ∘ … ∘ g_{nl+l-1}`, expanded into explicit coefficients.

use std::collections::HashMap;

use serde::Serialize;

use super::{Atom, BranchingModel, Epoch, OffspringLaw, Tail};
use crate::error::{Error, Result};

pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkipOptions {
    /// Largest total mass that may be dropped from any one law, in `(0, 1e-6]`.
    pub mass_tol: f64,
    pub support_cap: usize,
}

impl Default for SkipOptions {
    fn default() -> Self {
        Self {
            mass_tol: 1e-9,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkipReport {
    pub l: usize,
    /// Largest mass dropped from any single skipped law before renormalizing.
    pub truncated_mass: f64,
    pub max_support: usize,
    pub laws_built: usize,
}

type Poly = HashMap<Vec<u32>, f64>;

/// Builds the model of `Z_{nl}`.
pub fn skip_generations(
    model: &BranchingModel,
    l: usize,
    opts: SkipOptions,
) -> Result<(BranchingModel, SkipReport)> {
    if l == 0 {
        return Err(Error::domain("skip length must be at least 1"));
    }
    if !(opts.mass_tol > 0.0 && opts.mass_tol <= 1e-6) {
        return Err(Error::domain(format!("mass_tol {} outside (0, 1e-6]", opts.mass_tol)));
    }
    let mut report = SkipReport {
        l,
        truncated_mass: 0.0,
        max_support: model
            .schedule()
            .iter()
            .flat_map(|e| e.laws.iter().map(|l| l.atoms().len()))
            .max()
            .unwrap_or(0),
        laws_built: 0,
    };
    if l == 1 {
        return Ok((model.clone(), report));
    }

    let (t0, p) = model.eventual_period();
    let n0 = t0.div_ceil(l);
    let p_new = p / gcd(p, l);
    let steps = n0 + p_new;
    let d = model.d();
    let prune = opts.mass_tol * 1e-6;

    let mut schedule = Vec::with_capacity(steps);
    for n in 0..steps {
        let polys = compose_block(model, n * l, l, prune, opts.support_cap)?;
        let mut laws = Vec::with_capacity(d);
        for (j, poly) in polys.into_iter().enumerate() {
            let mass: f64 = poly.values().sum();
            let lost = (1.0 - mass).max(0.0);
            if lost >= opts.mass_tol / 2.0 {
                return Err(Error::Truncation { lost, tol: opts.mass_tol });
            }
            report.truncated_mass = report.truncated_mass.max(lost);
            report.max_support = report.max_support.max(poly.len());
            report.laws_built += 1;
            let mut atoms: Vec<Atom> = poly
                .into_iter()
                .map(|(offspring, p)| Atom { offspring, p: p / mass })
                .collect();
            atoms.sort_by(|a, b| a.offspring.cmp(&b.offspring));
            laws.push(OffspringLaw::new(
                d,
                atoms,
                &format!("skipped step {n} type {}", j + 1),
            )?);
        }
        schedule.push(Epoch { start: n, laws });
    }
    let tail = if p_new == 1 {
        Tail::RepeatLast
    } else {
        Tail::Periodic { period: p_new }
    };
    Ok((BranchingModel::new(d, schedule, tail)?, report))
}

/// Coefficients of `g_{start} ∘ … ∘ g_{start+len-1}` for every type.
fn compose_block(
    model: &BranchingModel,
    start: usize,
    len: usize,
    prune: f64,
    cap: usize,
) -> Result<Vec<Poly>> {
    let d = model.d();
    let mut current: Vec<Poly> = model
        .laws_at(start + len - 1)
        .iter()
        .map(law_poly)
        .collect();
    for m in (0..len - 1).rev() {
        let laws = model.laws_at(start + m);
        let mut powers: Vec<Vec<Poly>> = (0..d).map(|_| vec![unit_poly(d)]).collect();
        let mut next = Vec::with_capacity(d);
        for law in laws {
            let mut acc = Poly::new();
            for atom in law.atoms() {
                let mut term = unit_poly(d);
                for (i, &k) in atom.offspring.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    while powers[i].len() <= k as usize {
                        let last = powers[i].last().unwrap();
                        let p = multiply(last, &current[i], prune, cap)?;
                        powers[i].push(p);
                    }
                    term = multiply(&term, &powers[i][k as usize], prune, cap)?;
                }
                for (a, c) in term {
                    *acc.entry(a).or_insert(0.0) += atom.p * c;
                }
            }
            if acc.len() > cap {
                return Err(Error::SupportCap { what: "skipped law".into(), cap });
            }
            next.push(acc);
        }
        current = next;
    }
    Ok(current)
}

fn law_poly(law: &OffspringLaw) -> Poly {
    law.atoms()
        .iter()
        .map(|a| (a.offspring.clone(), a.p))
        .collect()
}

fn unit_poly(d: usize) -> Poly {
    Poly::from([(vec![0; d], 1.0)])
}

fn multiply(a: &Poly, b: &Poly, prune: f64, cap: usize) -> Result<Poly> {
    let mut out = Poly::with_capacity(a.len() + b.len());
    for (ka, &ca) in a {
        for (kb, &cb) in b {
            let key: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            *out.entry(key).or_insert(0.0) += ca * cb;
        }
    }
    out.retain(|_, c| *c >= prune);
    if out.len() > cap {
        return Err(Error::SupportCap { what: "intermediate composition".into(), cap });
    }
    Ok(out)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
