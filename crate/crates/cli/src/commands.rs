//! Subcommand implementations. Each returns human-readable summary lines and
//! writes its artifacts plus a `manifest.toml` below the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qconv_core::discovery::{discover, DatasetMeta, SnapshotDataset, SparseModel, TermLibrary};
use qconv_core::field::InitialCondition;
use qconv_core::noise::{simulate_noisy, ChannelKind};
use qconv_core::quantum::simulate_ideal;
use qconv_core::solver::{error_map, solve};
use qconv_core::transition::{
    analytic_matrix, empirical_matrix, fit_p, group_by_distance, hamming_decay_curve, ReadoutModel, ShotSampler,
    TransitionMatrix,
};
use qconv_core::{Error, GridField};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Recorder;
use crate::qasm::export_qasm;

/// Reference coefficients for the default 54-dataset setup, listed next to
/// recovered values in discovery reports.
pub const REFERENCE_FULL: [(&str, f64); 6] = [
    ("u", 0.0471),
    ("u_xx", 0.0087),
    ("u^2", -0.0228),
    ("u*u_xx", -0.0021),
    ("u_x^2", 0.0014),
    ("u_x*u_xx", 0.0013),
];
pub const REFERENCE_RESTRICTED: [(&str, f64); 3] = [("u", 0.0417), ("u^2", -0.0193), ("u_xx", 0.0013)];

pub const TRAIN_DIR: &str = "train";
pub const HELD_OUT_DIR: &str = "held_out";
pub const MODEL_FULL: &str = "model_full.toml";
pub const MODEL_RESTRICTED: &str = "model_restricted.toml";

fn record_dataset(rec: &mut Recorder, ds: &SnapshotDataset, rel: &Path) -> Result<(), CliError> {
    ds.write_dir(&rec.root().join(rel))?;
    rec.record(rel.join("u.csv"))?;
    rec.record(rel.join("meta.toml"))?;
    Ok(())
}

fn amplitude_csv(fields: &[GridField]) -> String {
    let mut s = String::from("t,max_abs,mean\n");
    for f in fields {
        let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", f.time, f.max_abs(), f.mean());
    }
    s
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let spec = cfg.problem;
    let sim = &cfg.simulate;
    let ic = sim.initial.build(&spec)?;
    let mut rec = Recorder::new(&cfg.output.join("simulate"), "simulate", cfg)?;
    rec.add_seeds(sim.initial.seed());
    let mut lines = Vec::new();
    let t_end = ic.time + sim.steps as f64 * spec.dt;
    if sim.ideal {
        let fields = simulate_ideal(&ic, sim.steps)?;
        let ds = SnapshotDataset::from_fields(&fields, DatasetMeta {
            seed: sim.initial.seed(),
            label: Some("ideal".into()),
            ..Default::default()
        })?;
        record_dataset(&mut rec, &ds, Path::new("ideal"))?;
        rec.write("ideal/amplitude.csv", &amplitude_csv(&fields))?;
        lines.push(format!("ideal: max|u(t={t_end})| = {:.6}", fields[sim.steps].max_abs()));
    }
    for channel in &sim.noise {
        let run = simulate_noisy(&ic, sim.steps, &channel.step_config()?, sim.reconstruction.into())?;
        let ds = SnapshotDataset::from_fields(&run.fields, DatasetMeta {
            seed: sim.initial.seed(),
            channel: Some(channel.kind),
            strength: Some(channel.strength),
            label: Some(channel.label()),
        })?;
        let dir = PathBuf::from(channel.label());
        record_dataset(&mut rec, &ds, &dir)?;
        rec.write(dir.join("amplitude.csv"), &amplitude_csv(&run.fields))?;
        lines.push(format!(
            "{}: max|u(t={t_end})| = {:.6}, mean {:.3e}",
            channel.label(),
            run.fields[sim.steps].max_abs(),
            run.fields[sim.steps].mean()
        ));
    }
    rec.finish()?;
    Ok(lines)
}

fn profile_csv(analytic: Option<&TransitionMatrix>, empirical: &TransitionMatrix) -> String {
    let emp = group_by_distance(empirical);
    let ana = analytic.map(group_by_distance);
    let mut s = String::from("d,analytic,empirical\n");
    for (d, e) in emp.values.iter().enumerate() {
        let a = ana.as_ref().map_or(String::new(), |p| format!("{:.17e}", p.values[d]));
        let _ = writeln!(s, "{d},{a},{e:.17e}");
    }
    s
}

pub fn cmd_transition(cfg: &RunConfig, layers: &[usize]) -> Result<Vec<String>, CliError> {
    let tc = &cfg.transition;
    let layers = if layers.is_empty() { &tc.layers[..] } else { layers };
    let step = tc.channel.step_config()?;
    let flips = matches!(
        tc.channel.kind,
        ChannelKind::BitFlip | ChannelKind::BitPhaseFlip | ChannelKind::Depolarizing
    );
    let mut rec = Recorder::new(&cfg.output.join("transition"), "transition", cfg)?;
    let mut lines = Vec::new();
    let sampler = match tc.shots {
        Some(shots) => {
            rec.add_seeds([cfg.seed]);
            let mut s = ShotSampler::new(shots, cfg.seed);
            if let Some(r) = tc.readout {
                let n_max = tc.qubits.iter().copied().max().unwrap_or(1);
                s = s.with_readout(ReadoutModel::uniform(n_max, r.e01, r.e10)?, r.mitigate);
            }
            Some(s)
        }
        None => None,
    };
    for &n in &tc.qubits {
        let sampler = sampler.clone().map(|mut s| {
            if let Some(r) = &mut s.readout {
                r.confusion.truncate(n);
            }
            s
        });
        for &l in layers {
            let dir = PathBuf::from(format!("n{n}_l{l}"));
            let emp = empirical_matrix(n, l, &step, sampler.as_ref())?;
            rec.write(dir.join("empirical.csv"), &emp.to_csv())?;
            let analytic = if flips {
                let a = analytic_matrix(n, tc.channel.strength, l)?;
                rec.write(dir.join("analytic.csv"), &a.to_csv())?;
                Some(a)
            } else {
                None
            };
            rec.write(dir.join("profile.csv"), &profile_csv(analytic.as_ref(), &emp))?;
            let mut line = format!("n={n} l={l}: column-sum error {:.1e}", emp.stochasticity_error());
            if let Some(a) = &analytic {
                let diff = a.max_abs_diff(&emp);
                let _ = write!(line, ", max |analytic - empirical| = {diff:.3e}");
                if l > 0 {
                    let p = fit_p(&emp, l)?;
                    rec.write(
                        dir.join("fit.toml"),
                        &format!("p_injected = {:e}\np_fit = {p:e}\nmax_abs_diff = {diff:e}\n", tc.channel.strength),
                    )?;
                    let _ = write!(line, ", fitted p = {p:.6e}");
                }
            } else {
                let mut s = String::from("k,m_0k,m_k0\n");
                for k in 1..emp.dim() {
                    let _ = writeln!(s, "{k},{:.17e},{:.17e}", emp.get(0, k), emp.get(k, 0));
                }
                rec.write(dir.join("asymmetry.csv"), &s)?;
                let holds = (1..emp.dim()).all(|k| emp.get(0, k) > emp.get(k, 0));
                let _ = write!(line, ", M[0,k] > M[k,0] for all k: {holds}");
            }
            lines.push(line);
        }
        if flips {
            let curves = hamming_decay_curve(n, tc.channel.strength, &tc.decay_layers)?;
            let mut s = String::from("l");
            for d in 0..=n {
                let _ = write!(s, ",d{d}");
            }
            s.push('\n');
            for c in curves {
                let _ = write!(s, "{}", c.layers.unwrap_or(0));
                for v in c.values {
                    let _ = write!(s, ",{v:.17e}");
                }
                s.push('\n');
            }
            rec.write(format!("decay_n{n}.csv"), &s)?;
        }
    }
    rec.finish()?;
    Ok(lines)
}

/// Training and held-out seeds derived from the master seed.
pub fn dataset_seeds(cfg: &RunConfig) -> (Vec<u64>, Vec<u64>) {
    let base = cfg.seed.wrapping_mul(1_000_000);
    let train = (0..cfg.datasets.count as u64).map(|i| base.wrapping_add(i)).collect();
    let held = (0..cfg.datasets.held_out as u64)
        .map(|i| base.wrapping_add(500_000 + i))
        .collect();
    (train, held)
}

pub fn cmd_gen_datasets(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let dc = &cfg.datasets;
    let spec = cfg.problem;
    let step = dc.channel.step_config()?;
    let (train, held) = dataset_seeds(cfg);
    let jobs: Vec<(&str, usize, u64)> = train
        .iter()
        .enumerate()
        .map(|(i, &s)| (TRAIN_DIR, i, s))
        .chain(held.iter().enumerate().map(|(i, &s)| (HELD_OUT_DIR, i, s)))
        .collect();
    let datasets: Vec<SnapshotDataset> = jobs
        .par_iter()
        .map(|&(group, _, seed)| -> Result<SnapshotDataset, CliError> {
            let ic = InitialCondition::random(seed).build(&spec)?;
            let run = simulate_noisy(&ic, dc.steps, &step, dc.reconstruction.into())?;
            Ok(SnapshotDataset::from_fields(&run.fields, DatasetMeta {
                seed: Some(seed),
                channel: Some(dc.channel.kind),
                strength: Some(dc.channel.strength),
                label: Some(group.to_string()),
            })?)
        })
        .collect::<Result<_, _>>()?;
    let root = cfg.dataset_root();
    let mut rec = Recorder::new(&root, "gen-datasets", cfg)?;
    rec.add_seeds(train.iter().chain(&held).copied());
    for ((group, i, _), ds) in jobs.iter().zip(&datasets) {
        record_dataset(&mut rec, ds, &Path::new(group).join(format!("ds_{i:03}")))?;
    }
    rec.finish()?;
    Ok(vec![format!(
        "{} training and {} held-out datasets ({} snapshots, {}) in {}",
        train.len(),
        held.len(),
        dc.steps + 1,
        dc.channel.label(),
        root.display()
    )])
}

/// Loads every dataset directory below `dir`, sorted by name.
pub fn load_datasets(dir: &Path) -> Result<Vec<(String, SnapshotDataset)>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::config(format!(
            "{} does not exist; run gen-datasets first",
            dir.display()
        )));
    }
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| CliError::config(format!("cannot read datasets in {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("meta.toml").is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::config(format!(
            "no datasets found in {}; run gen-datasets first",
            dir.display()
        )));
    }
    names
        .into_iter()
        .map(|n| Ok((n.clone(), SnapshotDataset::read_dir(&dir.join(&n))?)))
        .collect()
}

fn fmt_coef(v: f64) -> String {
    format!("{v:+.4e}")
}

pub fn cmd_discover(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let data: Vec<SnapshotDataset> = load_datasets(&cfg.dataset_root().join(TRAIN_DIR))?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let library = TermLibrary::standard();
    let mut rec = Recorder::new(&cfg.output.join("discover"), "discover", cfg)?;
    let mut full_cfg = cfg.discovery.regression.clone();
    full_cfg.restrict = None;
    let full = discover(&data, &library, &full_cfg)?;
    let mut restricted_cfg = cfg.discovery.regression.clone();
    restricted_cfg.restrict = Some(cfg.discovery.restricted_terms.clone());
    let restricted = discover(&data, &library, &restricted_cfg)?;
    rec.write(MODEL_FULL, &full.to_toml())?;
    rec.write(MODEL_RESTRICTED, &restricted.to_toml())?;

    let reference = |table: &[(&str, f64)], name: &str| table.iter().find(|(n, _)| *n == name).map(|(_, c)| *c);
    let mut csv = String::from("term,full,restricted,reference_full,reference_restricted\n");
    let mut table = vec![format!(
        "{:<10} {:>12} {:>12} {:>12} {:>12}",
        "term", "full", "reference", "restricted", "reference"
    )];
    for t in library.terms() {
        let name = t.name();
        let (f, r) = (full.coefficient(&name)?, restricted.coefficient(&name)?);
        let (rf, rr) = (reference(&REFERENCE_FULL, &name), reference(&REFERENCE_RESTRICTED, &name));
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let _ = writeln!(csv, "{name},{f:e},{r:e},{},{}", opt(rf), opt(rr));
        if f != 0.0 || r != 0.0 || rf.is_some() || rr.is_some() {
            let show = |v: Option<f64>| v.map_or("-".to_string(), fmt_coef);
            table.push(format!(
                "{:<10} {:>12} {:>12} {:>12} {:>12}",
                name,
                fmt_coef(f),
                show(rf),
                fmt_coef(r),
                show(rr)
            ));
        }
    }
    rec.write("coefficients.csv", &csv)?;
    rec.finish()?;
    let mut lines = vec![
        format!("datasets: {}", data.len()),
        format!("full:       {}  (residual rms {:.3e})", full.equation(), full.residual_rms),
        format!("restricted: {}  (residual rms {:.3e})", restricted.equation(), restricted.residual_rms),
    ];
    lines.extend(table);
    Ok(lines)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let vc = &cfg.validate;
    let models: Vec<PathBuf> = if vc.models.is_empty() {
        let d = cfg.output.join("discover");
        vec![d.join(MODEL_FULL), d.join(MODEL_RESTRICTED)]
    } else {
        vc.models.clone()
    };
    let held = load_datasets(&cfg.dataset_root().join(HELD_OUT_DIR))?;
    let mut rec = Recorder::new(&cfg.output.join("validate"), "validate", cfg)?;
    let mut coverage = String::from("model,dataset,coverage,max_abs_error,status\n");
    let mut lines = Vec::new();
    for path in &models {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read model {}: {e}", path.display())))?;
        let model = SparseModel::from_toml(&text)?;
        let stem = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        let results: Vec<(String, Result<(f64, f64, String), Error>)> = held
            .par_iter()
            .map(|(name, ds)| {
                let r = (|| {
                    let truth: Vec<GridField> = (0..ds.len()).map(|i| ds.field(i)).collect::<Result<_, _>>()?;
                    let traj = solve(&model, &truth[0], ds.len() - 1, &vc.solver)?;
                    let e = error_map(&traj, &truth)?;
                    let mut csv = String::from("t");
                    for j in 0..ds.spec.points {
                        let _ = write!(csv, ",e{j}");
                    }
                    csv.push('\n');
                    for (t, row) in e.times.iter().zip(&e.values) {
                        let _ = write!(csv, "{t:.17e}");
                        for v in row {
                            let _ = write!(csv, ",{v:.17e}");
                        }
                        csv.push('\n');
                    }
                    Ok((e.coverage_within(vc.tolerance), e.max_abs(), csv))
                })();
                (name.clone(), r)
            })
            .collect();
        let mut worst = 1.0f64;
        for (name, r) in results {
            match r {
                Ok((cov, max_err, csv)) => {
                    rec.write(format!("{stem}/{name}_error.csv"), &csv)?;
                    let _ = writeln!(coverage, "{stem},{name},{cov:.6},{max_err:.6e},ok");
                    worst = worst.min(cov);
                }
                Err(Error::Unstable(t)) => {
                    let _ = writeln!(coverage, "{stem},{name},0,inf,unstable at t={t}");
                    worst = 0.0;
                }
                Err(e) => return Err(e.into()),
            }
        }
        lines.push(format!(
            "{stem}: {} | min coverage within {} = {worst:.4} over {} held-out datasets",
            model.equation(),
            vc.tolerance,
            held.len()
        ));
    }
    rec.write("coverage.csv", &coverage)?;
    rec.finish()?;
    Ok(lines)
}

pub fn cmd_export_qasm(cfg: &RunConfig, layers: usize, basis: Option<usize>) -> Result<(PathBuf, String), CliError> {
    let text = export_qasm(&cfg.problem, layers, basis)?;
    let mut rec = Recorder::new(&cfg.output.join("qasm"), "export-qasm", cfg)?;
    let n = cfg.problem.qubits();
    let name = match basis {
        Some(b) => format!("circuit_n{n}_l{layers}_b{b}.qasm"),
        None => format!("circuit_n{n}_l{layers}.qasm"),
    };
    let path = rec.write(&name, &text)?;
    rec.finish()?;
    Ok((path, text))
}
