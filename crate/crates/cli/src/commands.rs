use dephasr::{
    build_cache, cross_kernel, CfTrajectory, Complex64, Evolver, KernelCache, Mode,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{default_document, merge, Scenario};
use crate::error::{CliError, CliResult};
use crate::format::format_float;

pub const CF_HEADER: [&str; 6] = ["t1", "t2", "method", "pair", "re", "im"];
pub const KERNEL_HEADER: [&str; 6] = ["t", "t2", "d", "gamma", "re_dtilde", "im_dtilde"];
pub const COMPARE_HEADER: [&str; 8] = ["t2", "mode_a", "mode_b", "max_re", "max_im", "rms_re", "rms_im", "max_abs"];

/// CSV rows accumulated in memory and checked for finiteness on the way in.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row(&mut self, text: &[&str], numbers: &[f64]) -> CliResult<()> {
        if let Some(bad) = numbers.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Numerical(format!("non-finite value {bad} in row {text:?}")));
        }
        let mut record: Vec<String> = text.iter().map(|s| s.to_string()).collect();
        record.extend(numbers.iter().map(|&x| format_float(x)));
        self.writer.write_record(&record)?;
        Ok(())
    }

    /// `t1,t2,method,pair,re,im`.
    pub fn cf_row(&mut self, t1: f64, t2: f64, method: &str, pair: &str, z: Complex64) -> CliResult<()> {
        for x in [t1, t2, z.re, z.im] {
            if !x.is_finite() {
                return Err(CliError::Numerical(format!("non-finite value in {method} {pair} at t1 = {t1}")));
            }
        }
        self.writer.write_record([
            format_float(t1).as_str(),
            &format_float(t2),
            method,
            pair,
            &format_float(z.re),
            &format_float(z.im),
        ])?;
        Ok(())
    }

    pub fn trajectory(&mut self, traj: &CfTrajectory) -> CliResult<()> {
        let pair = traj.pair_label();
        for s in &traj.samples {
            self.cf_row(s.t1, traj.t2, traj.mode.label(), &pair, s.value)?;
        }
        Ok(())
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Numerical(format!("csv buffer: {}", e.error())))
    }
}

pub fn build_scenario_cache(s: &Scenario) -> CliResult<KernelCache> {
    Ok(build_cache(s.params, s.horizon(), s.cache_step)?)
}

fn evolver<'a>(s: &Scenario, cache: &'a KernelCache) -> CliResult<Evolver<'a>> {
    Ok(Evolver::new(cache, s.rho0)?.with_markovian_seed(s.config.markovian_seed))
}

/// `<A(t1) B(t2)>` for every configured `t2` and each of `modes`, ordered by
/// `t2` then mode as configured.
pub fn trajectories(s: &Scenario, cache: &KernelCache, modes: &[Mode]) -> CliResult<Vec<CfTrajectory>> {
    let ev = evolver(s, cache)?;
    let jobs: Vec<(f64, Mode)> = s
        .config
        .t2
        .iter()
        .flat_map(|&t2| modes.iter().map(move |&m| (t2, m)))
        .collect();
    jobs.par_iter()
        .map(|&(t2, mode)| {
            let grid = s.two_time_grid(t2)?;
            Ok(ev.evolve_two_time(&s.a, &s.b, t2, &grid, mode)?)
        })
        .collect()
}

/// Kernel table: one block per `t2`, always starting with `t2 = 0`.
pub fn kernels(s: &Scenario) -> CliResult<Vec<u8>> {
    let cache = build_scenario_cache(s)?;
    let grid = s.single_time_grid()?;
    let mut t2s = vec![0.0];
    for &t2 in &s.config.t2 {
        if !t2s.contains(&t2) {
            t2s.push(t2);
        }
    }
    let mut table = Table::new(&KERNEL_HEADER)?;
    for t2 in t2s {
        for t in grid.times() {
            let d = cache.dephasing_rate(t)?;
            let gamma = cache.decoherence_exponent(t)?;
            let dt = cross_kernel(t, t2, &cache)?;
            table.row(&[], &[t, t2, d, gamma, dt.re, dt.im])?;
        }
    }
    table.into_bytes()
}

fn single_time_rows(table: &mut Table, s: &Scenario, cache: &KernelCache, modes: &[Mode]) -> CliResult<()> {
    let ev = evolver(s, cache)?;
    let grid = s.single_time_grid()?;
    let runs: Vec<_> = modes
        .par_iter()
        .map(|&m| ev.evolve_single(&grid, m))
        .collect::<dephasr::Result<_>>()?;
    for traj in runs {
        let label = traj.mode.label();
        for pair in ["sx", "sy", "sz"] {
            for sample in &traj.samples {
                let z = match pair {
                    "sx" => sample.sx,
                    "sy" => sample.sy,
                    _ => sample.sz,
                };
                table.cf_row(sample.t, 0.0, label, pair, z)?;
            }
        }
    }
    Ok(())
}

/// One-time expectation values, or the density matrix when `master` is set.
pub fn evolve(s: &Scenario, master: bool) -> CliResult<Vec<u8>> {
    let cache = build_scenario_cache(s)?;
    let mut table = Table::new(&CF_HEADER)?;
    if !master {
        single_time_rows(&mut table, s, &cache, &s.config.modes)?;
        return table.into_bytes();
    }
    let ev = evolver(s, &cache)?;
    let grid = s.single_time_grid()?;
    let runs: Vec<_> = s
        .config
        .modes
        .par_iter()
        .map(|&m| ev.evolve_master(&grid, m).map(|r| (m, r)))
        .collect::<dephasr::Result<_>>()?;
    for (mode, states) in runs {
        for (k, name) in ["rho00", "rho01", "rho10", "rho11"].into_iter().enumerate() {
            for (t, rho) in grid.times().zip(&states) {
                let elements = [rho.rho00, rho.rho01, rho.rho10, rho.rho11];
                table.cf_row(t, 0.0, mode.label(), name, elements[k])?;
            }
        }
    }
    table.into_bytes()
}

pub fn two_time(s: &Scenario, modes: &[Mode]) -> CliResult<Vec<u8>> {
    let cache = build_scenario_cache(s)?;
    let mut table = Table::new(&CF_HEADER)?;
    for traj in trajectories(s, &cache, modes)? {
        table.trajectory(&traj)?;
    }
    table.into_bytes()
}

/// Closed-form values at a single `t1` for every configured `t2 <= t1`.
pub fn exact_cf_at(s: &Scenario, t1: f64) -> CliResult<Vec<u8>> {
    if !(t1.is_finite() && t1 >= 0.0) {
        return Err(CliError::Config(format!("t1 must be >= 0, got {t1}")));
    }
    let mut scenario = s.clone();
    scenario.config.t_max = scenario.config.t_max.max(t1);
    let cache = build_scenario_cache(&scenario)?;
    let ctx = evolver(s, &cache)?.exact();
    let mut table = Table::new(&CF_HEADER)?;
    for &t2 in s.config.t2.iter().filter(|&&t2| t2 <= t1) {
        table.cf_row(t1, t2, Mode::Exact.label(), &s.pair_label(), ctx.cf_exact(&s.a, &s.b, t1, t2)?)?;
    }
    table.into_bytes()
}

/// Base document for a figure preset.
pub fn figure_document(id: u8) -> CliResult<Value> {
    let mut doc = default_document();
    let preset = match id {
        1 => json!({ "t2": [0.2], "t_max": 10.0, "output": "fig1.csv" }),
        2 => json!({
            "t2": [0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            "t_max": 10.0,
            "window": 10.0,
            "modes": ["nm-full"],
            "output": "fig2.csv",
        }),
        3 => json!({ "t2": [10.0], "t_max": 20.0, "output": "fig3.csv" }),
        _ => return Err(CliError::Config(format!("unknown figure id {id}; expected 1, 2 or 3"))),
    };
    merge(&mut doc, preset);
    Ok(doc)
}

/// Figure dataset: the two-time curves, plus for the second figure the
/// one-time `<sx(t)>` and `<sy(t)>` series (rows with `t2 = 0`).
pub fn figure(id: u8, s: &Scenario) -> CliResult<Vec<u8>> {
    let cache = build_scenario_cache(s)?;
    let mut table = Table::new(&CF_HEADER)?;
    for traj in trajectories(s, &cache, &s.config.modes)? {
        table.trajectory(&traj)?;
    }
    if id == 2 {
        let ev = evolver(s, &cache)?;
        let grid = s.single_time_grid()?;
        for &mode in &s.config.modes {
            let traj = ev.evolve_single(&grid, mode)?;
            for (pair, pick) in [("sx", 0usize), ("sy", 1)] {
                for sample in &traj.samples {
                    let z = if pick == 0 { sample.sx } else { sample.sy };
                    table.cf_row(sample.t, 0.0, mode.label(), pair, z)?;
                }
            }
        }
    }
    table.into_bytes()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub t2: f64,
    pub mode_a: Mode,
    pub mode_b: Mode,
    pub max_re: f64,
    pub max_im: f64,
    pub rms_re: f64,
    pub rms_im: f64,
    pub max_abs: f64,
}

pub fn deviation(a: &CfTrajectory, b: &CfTrajectory) -> CliResult<Deviation> {
    let same_grid = a.t2 == b.t2
        && a.samples.len() == b.samples.len()
        && a.samples.iter().zip(&b.samples).all(|(x, y)| x.t1 == y.t1);
    if !same_grid || a.samples.is_empty() {
        return Err(CliError::Numerical(format!(
            "cannot compare {} and {}: mismatched grids",
            a.mode, b.mode
        )));
    }
    let n = a.samples.len() as f64;
    let diffs: Vec<Complex64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x.value - y.value).collect();
    let max = |f: fn(&Complex64) -> f64| diffs.iter().map(f).fold(0.0, f64::max);
    let rms = |f: fn(&Complex64) -> f64| (diffs.iter().map(|d| f(d).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Deviation {
        t2: a.t2,
        mode_a: a.mode,
        mode_b: b.mode,
        max_re: max(|d| d.re.abs()),
        max_im: max(|d| d.im.abs()),
        rms_re: rms(|d| d.re),
        rms_im: rms(|d| d.im),
        max_abs: max(|d| d.norm()),
    })
}

/// Pairwise deviations between the configured modes, per `t2`.
pub fn compare(s: &Scenario) -> CliResult<Vec<Deviation>> {
    let modes = &s.config.modes;
    if modes.len() < 2 {
        return Err(CliError::Config("compare needs at least two modes".into()));
    }
    let cache = build_scenario_cache(s)?;
    let trajs = trajectories(s, &cache, modes)?;
    let mut out = Vec::new();
    for group in trajs.chunks(modes.len()) {
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                out.push(deviation(&group[i], &group[j])?);
            }
        }
    }
    Ok(out)
}

pub fn compare_csv(devs: &[Deviation]) -> CliResult<Vec<u8>> {
    let mut table = Table::new(&COMPARE_HEADER)?;
    for d in devs {
        table.row(
            &[&format_float(d.t2), d.mode_a.label(), d.mode_b.label()],
            &[d.max_re, d.max_im, d.rms_re, d.rms_im, d.max_abs],
        )?;
    }
    table.into_bytes()
}

pub fn compare_summary(s: &Scenario, devs: &[Deviation]) -> String {
    let mut text = format!("<{}(t1) {}(t2)> deviations between modes\n", s.a, s.b);
    for d in devs {
        text.push_str(&format!(
            "  t2 = {:<6} {:>9} vs {:<9} max |diff| {:.3e}  (Re {:.3e}, Im {:.3e})  rms Re {:.3e}, Im {:.3e}\n",
            d.t2, d.mode_a, d.mode_b, d.max_abs, d.max_re, d.max_im, d.rms_re, d.rms_im
        ));
    }
    text
}
