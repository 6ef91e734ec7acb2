use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::output::{fmt, Artifacts};
use crate::CliError;
use mtbp_core::classify::{classify, ClassifyThresholds};
use mtbp_core::exec::configure_threads;
use mtbp_core::genfun::{
    alpha_xi_envelope, extinction_curve, growth_bounds, survival_gamma_ratio, conditioned_mean_ratio, series_table,
};
use mtbp_core::model::{skip_generations, validate_model, SkipOptions, ValidationThresholds};
use mtbp_core::simulate::{
    conditioned_stats, ks_exponential, moment_ode, ooii_integral, run_ensemble, sample_moments,
    simulate_ct, CtModel, Ensemble, SimOptions,
};
use mtbp_core::spectral::{eigen_sequence, ratio_band};
use mtbp_core::{BranchingModel, Exec};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Spectral(a) => spectral(a),
        Command::Series(a) => series(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::CtSimulate(a) => ct_simulate(a),
        Command::MomentOde(a) => moment(a),
        Command::Skip(a) => skip(a),
    }
}

fn setup(common: &Common) -> Result<Exec, CliError> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::input("--threads must be at least 1"));
        }
        configure_threads(t)?;
    }
    Ok(Exec::default())
}

fn load(path: &Path) -> Result<BranchingModel, CliError> {
    BranchingModel::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_ct(path: &Path) -> Result<CtModel, CliError> {
    CtModel::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn initial_or_default(initial: &Option<Vec<u64>>, d: usize) -> Result<Vec<u64>, CliError> {
    let v = initial.clone().unwrap_or_else(|| {
        let mut e = vec![0; d];
        e[0] = 1;
        e
    });
    if v.len() != d {
        return Err(CliError::input(format!("--initial needs {d} comma-separated counts")));
    }
    Ok(v)
}

fn weights_or_default(weights: &Option<Vec<f64>>, d: usize) -> Result<Vec<f64>, CliError> {
    let w = weights.clone().unwrap_or_else(|| vec![1.0; d]);
    if w.len() != d || w.iter().any(|x| !(*x > 0.0)) {
        return Err(CliError::input(format!("--weights needs {d} positive comma-separated values")));
    }
    Ok(w)
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::input(format!("{name} must be positive and finite")))
    }
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    setup(&a.common)?;
    let model = load(&a.model)?;
    let th = ValidationThresholds { eps_min: a.eps_min, criticality_bound: a.criticality_bound };
    let report = validate_model(&model, a.horizon as usize, th)?;
    let mut out = Artifacts::new(&a.common.out, "validate", &a);
    out.json("validate.json", &report);
    out.commit()?;
    Ok(())
}

fn spectral(a: SpectralArgs) -> Result<(), CliError> {
    let exec = setup(&a.common)?;
    positive("--tol", a.tol)?;
    let model = load(&a.model)?;
    let n = a.horizon as usize;
    let eigs = eigen_sequence(&model, n, a.u0.as_deref(), a.tol)?;
    let band = ratio_band(&model, &eigs, exec);
    let c0 = eigs.duality(0);
    let summary = json!({
        "horizon": n,
        "tol": a.tol,
        "lookahead": eigs.lookahead,
        "cone_ratio": eigs.cone_ratio,
        "eps_bar": eigs.eps_bar,
        "u0": eigs.u0,
        "duality_constant": c0,
        "max_duality_deviation": (0..=n).map(|k| (eigs.duality(k) - c0).abs()).fold(0.0, f64::max),
        "max_eigen_residual": (1..=n).map(|k| eigs.eigen_residual(&model, k)).fold(0.0, f64::max),
        "max_alignment_error": eigs.alignment_error.iter().copied().fold(0.0, f64::max),
        "ratio_band": band,
    });
    let mut out = Artifacts::new(&a.common.out, "spectral", &a);
    out.csv("spectral.csv", &eigs.csv_header(), &eigs.csv_rows())?;
    out.json("spectral.json", &summary);
    out.commit()?;
    Ok(())
}

fn series(a: SeriesArgs) -> Result<(), CliError> {
    let exec = setup(&a.common)?;
    positive("--tol", a.tol)?;
    let model = load(&a.model)?;
    let d = model.d();
    let initial = initial_or_default(&a.initial, d)?;
    let n = a.horizon as usize;
    let eigs = eigen_sequence(&model, n, None, a.tol)?;
    let table = series_table(&model, &eigs, n, exec)?;
    let growth = growth_bounds(&model, &eigs, &table, &initial)?;
    let last = |v: Vec<f64>| v.last().copied();
    let survival_gamma: Vec<_> = (0..d).map(|j| last(survival_gamma_ratio(&eigs, &table, j))).collect();
    let conditioned_mean: Vec<_> = (0..d).map(|j| last(conditioned_mean_ratio(&model, &eigs, &table, j))).collect();
    let envelope = if d <= 3 {
        Some(alpha_xi_envelope(&model, &eigs, &table, &[0.0, 0.25, 0.5, 0.75], exec)?)
    } else {
        None
    };
    let row = &table.rows[n];
    let summary = json!({
        "horizon": n,
        "xi": row.xi,
        "log_xi": row.log_xi,
        "gamma": row.gamma,
        "log_gamma": row.log_gamma,
        "gamma_over_xi": (row.log_gamma - row.log_xi).exp(),
        "alpha0_over_gamma": (row.log_alpha0 - row.log_gamma).exp(),
        "growth_bounds": { "initial": growth.initial, "c": growth.c },
        "survival_gamma_ratio_at_horizon": survival_gamma,
        "conditioned_mean_ratio_at_horizon": conditioned_mean,
        "alpha_over_xi": envelope,
    });
    let mut out = Artifacts::new(&a.common.out, "series", &a);
    out.csv("series.csv", &table.csv_header(d), &table.csv_rows())?;
    out.json("series.json", &summary);
    out.commit()?;
    Ok(())
}

fn classify_cmd(a: ClassifyArgs) -> Result<(), CliError> {
    let exec = setup(&a.common)?;
    positive("--tol", a.tol)?;
    let model = load(&a.model)?;
    let th = ClassifyThresholds {
        crit_tol: a.crit_tol,
        convergent_ratio: a.convergent_ratio,
        divergent_ratio: a.divergent_ratio,
        eigen_tol: a.tol,
        ..Default::default()
    };
    let report = classify(&model, a.horizon as usize, th, exec)?;
    let mut out = Artifacts::new(&a.common.out, "classify", &a);
    let text = out.json("classify.json", &report);
    out.commit()?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Conditioned {
    weights: Vec<f64>,
    survivors: usize,
    raw_mean: f64,
    normalized_mean: f64,
    normalized_variance: f64,
    ks_statistic: f64,
}

fn conditioned_summary(ens: &Ensemble, weights: &[f64]) -> Result<Option<Conditioned>, CliError> {
    match conditioned_stats(ens, weights) {
        Ok(c) => {
            let k = c.values.len() as f64;
            let mean = c.values.iter().sum::<f64>() / k;
            let var = c.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
            Ok(Some(Conditioned {
                weights: weights.to_vec(),
                survivors: c.survivors,
                raw_mean: c.raw_mean,
                normalized_mean: mean,
                normalized_variance: var,
                ks_statistic: ks_exponential(&c.values)?,
            }))
        }
        Err(mtbp_core::Error::EmptyConditioning) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn ensemble_rows(ens: &Ensemble) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["trajectory".to_string(), "survived".to_string()];
    header.extend((1..=ens.d()).map(|i| format!("Z_{i}")));
    let rows = ens
        .trajectories
        .iter()
        .enumerate()
        .map(|(r, t)| {
            let mut row = vec![r.to_string(), u8::from(t.survived).to_string()];
            row.extend(t.state.iter().map(|z| z.to_string()));
            row
        })
        .collect();
    (header, rows)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let exec = setup(&a.common)?;
    let model = load(&a.model)?;
    let d = model.d();
    let initial = initial_or_default(&a.initial, d)?;
    let weights = weights_or_default(&a.weights, d)?;
    let opts = SimOptions { cap: a.cap, ..SimOptions::new(initial.clone()) };
    let n = a.generations as usize;
    let ens = run_ensemble(&model, n, a.reps as usize, a.seed, &opts, exec)?;
    let moments = if ens.reps() >= 2 { Some(sample_moments(&ens)?) } else { None };
    let exact_survival = if n >= 1 {
        Some(extinction_curve(&model, n, exec)?.survival_from(n, &initial))
    } else {
        None
    };
    let stats = json!({
        "generations": n,
        "reps": ens.reps(),
        "seed": a.seed,
        "initial": initial,
        "survival_frequency": if ens.reps() > 0 { Some(ens.survival_frequency()) } else { None },
        "exact_survival": exact_survival,
        "capped": ens.capped,
        "per_type_mean": moments.as_ref().map(|m| m.mean.clone()),
        "per_type_mean_se": moments.as_ref().map(|m| m.mean_se.clone()),
        "covariance": moments.as_ref().map(|m| m.cov.clone()),
        "conditioned": if ens.reps() > 0 { conditioned_summary(&ens, &weights)? } else { None },
    });
    let (header, rows) = ensemble_rows(&ens);
    let mut out = Artifacts::new(&a.common.out, "simulate", &a);
    out.csv("ensemble.csv", &header, &rows)?;
    out.json("stats.json", &stats);
    out.commit()?;
    Ok(())
}

fn ct_simulate(a: CtSimulateArgs) -> Result<(), CliError> {
    let exec = setup(&a.common)?;
    positive("--time", a.time)?;
    positive("--step", a.step)?;
    let ct = load_ct(&a.model)?;
    let d = ct.d();
    let initial = initial_or_default(&a.initial, d)?;
    let weights = weights_or_default(&a.weights, d)?;
    let opts = SimOptions { cap: a.cap, ..SimOptions::new(initial.clone()) }.with_trace();
    let ens = simulate_ct(&ct, a.time, a.reps as usize, a.seed, &opts, exec)?;
    let start: Vec<f64> = initial.iter().map(|&x| x as f64).collect();
    let path = moment_ode(&ct, a.time, a.step, &start)?;
    let mut integer_times = Vec::new();
    for k in 1..=a.time.floor() as usize {
        let snap = ens.at_step(k).expect("traces recorded");
        let m = if snap.reps() >= 2 { Some(sample_moments(&snap)?) } else { None };
        integer_times.push(json!({
            "t": k,
            "survival_frequency": if snap.reps() > 0 { Some(snap.survival_frequency()) } else { None },
            "mean": m.as_ref().map(|m| m.mean.clone()),
            "mean_se": m.as_ref().map(|m| m.mean_se.clone()),
            "ode_mean": path.at(k as f64),
        }));
    }
    let stats = json!({
        "time": a.time,
        "reps": ens.reps(),
        "seed": a.seed,
        "initial": initial,
        "rate_bound": ct.rate_bound(),
        "survival_frequency": if ens.reps() > 0 { Some(ens.survival_frequency()) } else { None },
        "capped": ens.capped,
        "integer_times": integer_times,
        "conditioned": if ens.reps() > 0 { conditioned_summary(&ens, &weights)? } else { None },
    });
    let (header, rows) = ensemble_rows(&ens);
    let mut out = Artifacts::new(&a.common.out, "ct-simulate", &a);
    out.csv("ct_ensemble.csv", &header, &rows)?;
    out.json("ct_stats.json", &stats);
    out.commit()?;
    Ok(())
}

fn moment(a: MomentOdeArgs) -> Result<(), CliError> {
    setup(&a.common)?;
    positive("--time", a.time)?;
    positive("--step", a.step)?;
    let ct = load_ct(&a.model)?;
    let d = ct.d();
    let initial = initial_or_default(&a.initial, d)?;
    let start: Vec<f64> = initial.iter().map(|&x| x as f64).collect();
    let path = moment_ode(&ct, a.time, a.step, &start)?;
    let ooii = ooii_integral(&path);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("M_{i}")));
    header.push("ooii".into());
    let rows: Vec<Vec<String>> = path
        .times
        .iter()
        .zip(&path.means)
        .zip(&ooii)
        .map(|((t, m), o)| {
            let mut row = vec![fmt(*t)];
            row.extend(m.iter().map(|x| fmt(*x)));
            row.push(fmt(*o));
            row
        })
        .collect();
    let mut out = Artifacts::new(&a.common.out, "moment-ode", &a);
    out.csv("moment_ode.csv", &header, &rows)?;
    out.commit()?;
    Ok(())
}

fn skip(a: SkipArgs) -> Result<(), CliError> {
    setup(&a.common)?;
    let model = load(&a.model)?;
    let opts = SkipOptions { mass_tol: a.mass_tol, support_cap: a.support_cap };
    let (skipped, report) = skip_generations(&model, a.l as usize, opts)?;
    let mut out = Artifacts::new(&a.common.out, "skip", &a);
    let mut meta = out.provenance();
    meta["result"] = serde_json::to_value(&report).expect("report serializes");
    let mut text = skipped.to_json_with_meta(meta);
    text.push('\n');
    out.raw(&format!("skip_l{}.json", a.l), text.into_bytes());
    out.commit()?;
    Ok(())
}
