//! The subcommands. Each writes CSV (and optionally SVG) through a [`Sink`]
//! and returns summary lines for stdout.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use rlmix_core::dynamics::{time_grid, AmplitudeState, Propagator};
use rlmix_core::initstate::{basis_excitation, centered_support, dark_state, middle_node, orthogonal_recipe, slowest_modes};
use rlmix_core::lattice::LatticeSpec;
use rlmix_core::mixing::{mixing_report, scaling_study, MixClass, MixReport, ScalingStudy, Segment, StateRule};
use rlmix_core::spectral::{eigensolve, ep_scan, EpScan, SpectralData};

use crate::config::{ExperimentConfig, InitialStateConfig, LatticeConfig, LosslessRef, Parameter, Position};
use crate::error::CliError;
use crate::output::{num, opt, Chart, Sink, Table};

pub type Summary = Vec<String>;

/// Scaling study per series value.
pub type Studies = Vec<(Option<f64>, ScalingStudy)>;

/// One point of the (series x sweep) grid, in output order.
#[derive(Debug, Clone)]
pub struct Job {
    pub series: Option<f64>,
    pub sweep: Option<f64>,
    pub lattice: LatticeConfig,
}

pub fn jobs(cfg: &ExperimentConfig) -> Result<Vec<Job>, CliError> {
    let outer: Vec<Option<f64>> = match &cfg.series {
        Some(axis) => axis.points()?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let inner: Vec<Option<f64>> = match &cfg.sweep {
        Some(axis) => axis.points()?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(outer.len() * inner.len());
    for s in &outer {
        let base = match (s, &cfg.series) {
            (Some(x), Some(axis)) => axis.parameter.apply(&cfg.lattice, *x)?,
            _ => cfg.lattice.clone(),
        };
        for w in &inner {
            let lattice = match (w, &cfg.sweep) {
                (Some(x), Some(axis)) => axis.parameter.apply(&base, *x)?,
                _ => base.clone(),
            };
            out.push(Job { series: *s, sweep: *w, lattice });
        }
    }
    Ok(out)
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.parallelism.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

/// Leading columns naming the series and sweep values.
struct Keys {
    series: Option<Parameter>,
    sweep: Option<Parameter>,
}

impl Keys {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self { series: cfg.series.as_ref().map(|a| a.parameter), sweep: cfg.sweep.as_ref().map(|a| a.parameter) }
    }

    fn without(mut self, p: Parameter) -> Self {
        if self.sweep == Some(p) {
            self.sweep = None;
        }
        if self.series == Some(p) {
            self.series = None;
        }
        self
    }

    fn header(&self) -> Vec<String> {
        let mut h = Vec::new();
        if let Some(p) = self.series {
            h.push(p.column().to_string());
        }
        if let Some(p) = self.sweep {
            h.push(p.column().to_string());
        }
        h
    }

    fn cells(&self, job: &Job) -> Vec<String> {
        let mut c = Vec::new();
        if let (Some(p), Some(x)) = (self.series, job.series) {
            c.push(p.format(x));
        }
        if let (Some(p), Some(x)) = (self.sweep, job.sweep) {
            c.push(p.format(x));
        }
        c
    }

    fn series_label(&self, job: &Job) -> String {
        match (self.series, job.series) {
            (Some(p), Some(x)) => format!("{}={}", p.name(), p.pretty(x)),
            _ => "all".into(),
        }
    }
}

fn lossless_count(spec: &LatticeSpec) -> usize {
    if spec.is_ring() {
        spec.n_lossy()
    } else {
        spec.n_lossy() + 1
    }
}

/// Resolves the initial-state block for one lattice; node 1 when no source is given.
pub fn initial_state(cfg: &InitialStateConfig, spec: &LatticeSpec) -> Result<AmplitudeState, CliError> {
    let dim = spec.dim();
    if let Some(node) = cfg.node {
        return Ok(basis_excitation(spec, node)?.state);
    }
    if let Some(r) = &cfg.lossless {
        let count = lossless_count(spec);
        let k = match r {
            LosslessRef::Index(k) => *k,
            LosslessRef::Named(Position::First) => 1,
            LosslessRef::Named(Position::Middle) => return Ok(basis_excitation(spec, middle_node(spec))?.state),
            LosslessRef::Named(Position::Last) => count,
            LosslessRef::Named(Position::Opposite) if spec.is_ring() => (count / 2).max(1),
            LosslessRef::Named(Position::Opposite) => 1,
        };
        if k == 0 || k > count {
            return Err(CliError::config(format!("lossless node {k} is outside 1..={count}")));
        }
        return Ok(basis_excitation(spec, 2 * k - 1)?.state);
    }
    if let Some(path) = &cfg.recipe_file {
        return read_state(path, dim);
    }
    if cfg.dark == Some(true) {
        return Ok(dark_state(spec)?);
    }
    if let Some(entries) = &cfg.amplitudes {
        let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        for e in entries {
            if e.node == 0 || e.node > dim {
                return Err(CliError::config(format!("amplitude for node {} is outside 1..={dim}", e.node)));
            }
            psi[e.node - 1] += Complex64::new(e.re, e.im);
        }
        return Ok(AmplitudeState::new(psi)?);
    }
    Ok(basis_excitation(spec, 1)?.state)
}

/// Reads a `node_index, re_amp, im_amp` CSV into a state of size `dim`.
pub fn read_state(path: &Path, dim: usize) -> Result<AmplitudeState, CliError> {
    let bad = |m: String| CliError::config(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name}")));
    let (ci, cr, cm) = (col("node_index")?, col("re_amp")?, col("im_amp")?);
    let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let row = line + 2;
        let node: usize = field(ci).parse().map_err(|_| bad(format!("line {row}: bad node_index")))?;
        let re: f64 = field(cr).parse().map_err(|_| bad(format!("line {row}: bad re_amp")))?;
        let im: f64 = field(cm).parse().map_err(|_| bad(format!("line {row}: bad im_amp")))?;
        if node == 0 || node > dim {
            return Err(bad(format!("line {row}: node {node} is outside 1..={dim}")));
        }
        psi[node - 1] = Complex64::new(re, im);
    }
    Ok(AmplitudeState::new(psi)?)
}

fn residual(h: &rlmix_core::lattice::Hamiltonian, s: &SpectralData, k: usize) -> f64 {
    let phi = s.right(k);
    (h.matrix() * &phi - &phi * s.eigenvalues()[k]).norm() / phi.norm()
}

fn v_axis(cfg: &ExperimentConfig, command: &str) -> Result<Vec<f64>, CliError> {
    match &cfg.sweep {
        Some(axis) if axis.parameter == Parameter::V => axis.points(),
        _ => Err(CliError::config(format!("{command} needs a sweep over v"))),
    }
}

fn series_specs(cfg: &ExperimentConfig) -> Result<Vec<(Option<f64>, LatticeConfig)>, CliError> {
    match &cfg.series {
        Some(axis) => axis.points()?.into_iter().map(|x| Ok((Some(x), axis.parameter.apply(&cfg.lattice, x)?))).collect(),
        None => Ok(vec![(None, cfg.lattice.clone())]),
    }
}

fn scan_table(cfg: &ExperimentConfig, scans: &[(Option<f64>, EpScan)]) -> (Table, Summary) {
    let series = cfg.series.as_ref().map(|a| a.parameter);
    let mut header: Vec<String> = series.iter().map(|p| p.column().to_string()).collect();
    header.extend(["abscissa", "cluster_size", "kind"].map(String::from));
    let mut table = Table::new(&header);
    let mut summary = Vec::new();
    for (s, scan) in scans {
        let lead: Vec<String> = match (series, s) {
            (Some(p), Some(x)) => vec![p.format(*x)],
            _ => Vec::new(),
        };
        for e in &scan.events {
            let mut row = lead.clone();
            row.extend([num(e.abscissa), e.cluster_size().to_string(), e.kind().to_string()]);
            table.push(row);
        }
        let label = match (series, s) {
            (Some(p), Some(x)) => format!("{}={}: ", p.name(), p.pretty(*x)),
            _ => String::new(),
        };
        summary.push(format!(
            "{label}{} coalescences, LREP {}",
            scan.events.len(),
            scan.lrep.map_or("absent".to_string(), |x| format!("{x:.8}"))
        ));
    }
    (table, summary)
}

fn run_scans(cfg: &ExperimentConfig, grid: &[f64]) -> Result<Vec<(Option<f64>, EpScan)>, CliError> {
    let mut scans = Vec::new();
    for (s, lattice) in series_specs(cfg)? {
        let family = lattice.spec()?;
        scans.push((s, ep_scan(&family, grid)?));
    }
    Ok(scans)
}

pub fn spectrum(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Summary, CliError> {
    let keys = Keys::of(cfg).without(Parameter::V);
    let list = jobs(cfg)?;
    let solved: Vec<Vec<Vec<String>>> = pool(cfg)?.install(|| {
        list.par_iter()
            .map(|job| -> Result<Vec<Vec<String>>, CliError> {
                let h = job.lattice.spec()?.build()?;
                let s = eigensolve(&h)?;
                Ok((0..s.len())
                    .map(|k| {
                        let mut row = keys.cells(job);
                        let z = s.eigenvalues()[k];
                        row.extend([num(job.lattice.v_over_gamma()), k.to_string(), num(z.re), num(z.im), num(residual(&h, &s, k))]);
                        row
                    })
                    .collect())
            })
            .collect::<Result<_, _>>()
    })?;
    let mut header = keys.header();
    header.extend(["v_over_gamma", "k", "re_lambda", "im_lambda", "residual"].map(String::from));
    let mut table = Table::new(&header);
    solved.iter().flatten().for_each(|r| table.push(r.clone()));
    let path = sink.write_table("spectrum", &table)?;
    let mut summary = vec![format!("wrote {} ({} eigenvalues)", path.display(), table.rows.len())];

    if let Ok(grid) = v_axis(cfg, "spectrum") {
        if grid.len() >= 2 {
            let scans = run_scans(cfg, &grid)?;
            let (ep_table, lines) = scan_table(cfg, &scans);
            let path = sink.write_table("ep_scan", &ep_table)?;
            summary.push(format!("wrote {}", path.display()));
            summary.extend(lines);
        }
    }
    if sink.plot {
        let offset = keys.header().len();
        let mut groups: Vec<(String, Vec<&Vec<String>>)> = Vec::new();
        for (job, rows) in list.iter().zip(&solved) {
            let label = keys.series_label(job);
            match groups.iter_mut().find(|(l, _)| *l == label) {
                Some((_, g)) => g.extend(rows.iter()),
                None => groups.push((label, rows.iter().collect())),
            }
        }
        for (i, (label, rows)) in groups.iter().enumerate() {
            let kmax = rows.iter().map(|r| r[offset + 1].parse::<usize>().unwrap_or(0)).max().unwrap_or(0);
            let mut chart = Chart::new(&format!("Im lambda ({label})"), "v/gamma", "Im lambda");
            for k in 0..=kmax {
                let pts = rows
                    .iter()
                    .filter(|r| r[offset + 1] == k.to_string())
                    .map(|r| (r[offset].parse().unwrap_or(f64::NAN), r[offset + 3].parse().unwrap_or(f64::NAN)))
                    .collect();
                chart = chart.line(&format!("k={k}"), pts);
            }
            let name = if groups.len() == 1 { "spectrum".to_string() } else { format!("spectrum_{i}") };
            sink.write_plot(&name, &chart)?;
        }
    }
    Ok(summary)
}

pub fn ep_scan_cmd(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Summary, CliError> {
    let grid = v_axis(cfg, "ep-scan")?;
    if grid.len() < 2 {
        return Err(CliError::config("ep-scan needs at least two grid points".into()));
    }
    let scans = pool(cfg)?.install(|| run_scans(cfg, &grid))?;
    let (table, lines) = scan_table(cfg, &scans);
    let path = sink.write_table("ep_scan", &table)?;
    let mut summary = vec![format!("wrote {}", path.display())];
    summary.extend(lines);
    Ok(summary)
}

/// Normalised populations sampled every `step` up to `t_end`.
fn populations(spec: &LatticeSpec, state: &AmplitudeState, class: MixClass, t_end: f64, step: f64) -> Result<Vec<(f64, Vec<f64>)>, CliError> {
    let h = spec.build()?;
    let s = eigensolve(&h)?;
    let mut prop = Propagator::new(&h, Some(&s));
    if class != MixClass::Conventional {
        prop = prop.without_dark(&s);
    }
    let times = time_grid(t_end, step)?;
    let mut out = Vec::with_capacity(times.len());
    prop.for_each_scaled(state, &times, |t, psi, _| {
        let total = psi.norm_squared();
        let p = psi.iter().map(|z| if total > 0.0 { z.norm_sqr() / total } else { f64::NAN }).collect();
        out.push((t, p));
    })?;
    Ok(out)
}

struct MixPoint {
    job: Job,
    report: MixReport,
    dim: usize,
    series: Option<Vec<(f64, Vec<f64>)>>,
}

pub fn mix(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Summary, CliError> {
    let keys = Keys::of(cfg);
    let list = jobs(cfg)?;
    let want_series = cfg.sweep.is_none();
    let gamma_step = cfg.output.sample_step;
    let points: Vec<MixPoint> = pool(cfg)?.install(|| {
        list.par_iter()
            .map(|job| -> Result<MixPoint, CliError> {
                let spec = job.lattice.spec()?;
                let state = initial_state(&cfg.initial_state, &spec)?;
                let report = mixing_report(&spec, &state, cfg.run.epsilon, &cfg.run.options())?;
                let series = if want_series {
                    let step = gamma_step / job.lattice.gamma;
                    Some(populations(&spec, &state, report.class, report.diagnostics.horizon, step)?)
                } else {
                    None
                };
                Ok(MixPoint { job: job.clone(), report, dim: spec.dim(), series })
            })
            .collect::<Result<_, _>>()
    })?;

    let width = points.iter().map(|p| p.dim).max().unwrap_or(0);
    let mut header = keys.header();
    header.extend(["class", "t_mix", "epsilon", "dark_overlap"].map(String::from));
    header.extend((1..=width).map(|j| format!("p_st_{j}")));
    let mut table = Table::new(&header);
    let mut summary = Vec::new();
    for p in &points {
        let mut row = keys.cells(&p.job);
        row.extend([p.report.class.to_string(), opt(p.report.t_mix), num(p.report.epsilon), num(p.report.diagnostics.dark_overlap)]);
        let pst = p.report.p_stationary.clone().unwrap_or_default();
        row.extend((0..width).map(|j| pst.get(j).map(|x| num(*x)).unwrap_or_default()));
        table.push(row);
        for w in &p.report.diagnostics.warnings {
            summary.push(format!("warning ({}): {w}", keys.series_label(&p.job)));
        }
    }
    summary.insert(0, format!("wrote {}", sink.write_table("mix", &table)?.display()));
    if points.len() == 1 {
        let r = &points[0].report;
        summary.push(format!(
            "class {}, t_mix {}, method {}, horizon {}",
            r.class,
            opt(r.t_mix),
            format!("{:?}", r.diagnostics.method).to_lowercase(),
            r.diagnostics.horizon
        ));
    }

    if want_series {
        let series_keys = Keys { series: keys.series, sweep: None };
        let mut header = series_keys.header();
        header.extend(["t", "distance"].map(String::from));
        let mut dist = Table::new(&header);
        let mut header = series_keys.header();
        header.push("t".into());
        header.extend((1..=width).map(|j| format!("p_{j}")));
        let mut pops = Table::new(&header);
        for p in &points {
            let r = &p.report;
            if let (Some(&t0), Some(&t1)) = (r.times.first(), r.times.get(1)) {
                let stride = ((gamma_step / p.job.lattice.gamma) / (t1 - t0)).round().max(1.0) as usize;
                for (t, d) in r.times.iter().zip(&r.distance_series).step_by(stride) {
                    let mut row = series_keys.cells(&p.job);
                    row.extend([num(*t), num(*d)]);
                    dist.push(row);
                }
            }
            for (t, probs) in p.series.as_deref().unwrap_or_default() {
                let mut row = series_keys.cells(&p.job);
                row.push(num(*t));
                row.extend((0..width).map(|j| probs.get(j).map(|x| num(*x)).unwrap_or_default()));
                pops.push(row);
            }
        }
        summary.push(format!("wrote {}", sink.write_table("distance", &dist)?.display()));
        summary.push(format!("wrote {}", sink.write_table("populations", &pops)?.display()));
        if sink.plot {
            for (i, p) in points.iter().enumerate() {
                let data = p.series.as_deref().unwrap_or_default();
                let mut chart = Chart::new(&format!("normalised populations ({})", keys.series_label(&p.job)), "t Gamma", "p_j");
                for j in 0..p.dim {
                    chart = chart.line(&format!("p_{}", j + 1), data.iter().map(|(t, q)| (*t, q[j])).collect());
                }
                let name = if points.len() == 1 { "populations".to_string() } else { format!("populations_{i}") };
                sink.write_plot(&name, &chart)?;
            }
        }
    } else if sink.plot {
        let sweep = cfg.sweep.as_ref().expect("sweep present").parameter;
        let mut chart = Chart::new("mixing time", sweep.column(), "T_mix Gamma");
        chart.log_y = true;
        let mut labels: Vec<String> = Vec::new();
        for p in &points {
            let label = keys.series_label(&p.job);
            if !labels.contains(&label) {
                labels.push(label);
            }
        }
        for label in labels {
            let pts = points
                .iter()
                .filter(|p| keys.series_label(&p.job) == label)
                .map(|p| (p.job.sweep.unwrap_or(f64::NAN), p.report.t_mix.unwrap_or(f64::NAN)))
                .collect();
            chart = chart.line(&label, pts);
        }
        sink.write_plot("mix", &chart)?;
    }
    Ok(summary)
}

pub fn scaling(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Summary, CliError> {
    scaling_studies(cfg, sink).map(|(summary, _)| summary)
}

/// Like [`scaling`], also returning the study for each series value.
pub fn scaling_studies(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(Summary, Studies), CliError> {
    let sizes: Vec<usize> = match &cfg.sweep {
        Some(axis) if axis.parameter == Parameter::NLossy => axis.points()?.into_iter().map(|x| x.round() as usize).collect(),
        _ => return Err(CliError::config("scaling needs a sweep over n_lossy".into())),
    };
    let series = series_specs(cfg)?;
    let studies: Studies = pool(cfg)?.install(|| {
        series
            .iter()
            .map(|(s, lattice)| -> Result<_, CliError> {
                let family = lattice.spec()?;
                let states = sizes
                    .iter()
                    .map(|&n| Ok((n, initial_state(&cfg.initial_state, &family.with_size(n)?)?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                let study = scaling_study(&family, &sizes, &StateRule::Custom(states), cfg.run.epsilon, &cfg.run.options())?;
                Ok((*s, study))
            })
            .collect::<Result<_, _>>()
    })?;
    let series_param = cfg.series.as_ref().map(|a| a.parameter);
    let lead = |s: &Option<f64>| -> Vec<String> {
        match (series_param, s) {
            (Some(p), Some(x)) => vec![p.format(*x)],
            _ => Vec::new(),
        }
    };
    let mut header: Vec<String> = series_param.iter().map(|p| p.column().to_string()).collect();
    header.extend(["n_lossy", "t_mix", "segment", "fit_exponent"].map(String::from));
    let mut table = Table::new(&header);
    let mut header: Vec<String> = series_param.iter().map(|p| p.column().to_string()).collect();
    header.extend(["segment", "slope", "intercept", "residual", "points"].map(String::from));
    let mut fits = Table::new(&header);
    let mut summary = Vec::new();
    for (s, study) in &studies {
        for p in &study.points {
            let fit = match p.segment {
                Segment::PostLrep => &study.power_fit,
                Segment::PreLrep => &study.log_fit,
            };
            let mut row = lead(s);
            row.extend([p.n_lossy.to_string(), opt(p.t_mix), p.segment.to_string(), opt(fit.as_ref().map(|f| f.slope))]);
            table.push(row);
        }
        for (segment, fit) in [(Segment::PreLrep, &study.log_fit), (Segment::PostLrep, &study.power_fit)] {
            if let Some(f) = fit {
                let mut row = lead(s);
                row.extend([segment.to_string(), num(f.slope), num(f.intercept), num(f.residual), f.points.to_string()]);
                fits.push(row);
            }
        }
        let label = match (series_param, s) {
            (Some(p), Some(x)) => format!("{}={}: ", p.name(), p.pretty(*x)),
            _ => String::new(),
        };
        summary.push(format!(
            "{label}power-law exponent {}, log slope {}, quadratic onset N_L={}",
            study.power_fit.as_ref().map_or("n/a".into(), |f| format!("{:.4}", f.slope)),
            study.log_fit.as_ref().map_or("n/a".into(), |f| format!("{:.4}", f.slope)),
            study.quadratic_onset().map_or("none".into(), |n| n.to_string())
        ));
    }
    summary.insert(0, format!("wrote {}", sink.write_table("scaling", &table)?.display()));
    summary.insert(1, format!("wrote {}", sink.write_table("scaling_fit", &fits)?.display()));
    if sink.plot {
        let mut chart = Chart::new("mixing time against size", "N_L", "T_mix Gamma");
        for (s, study) in &studies {
            let label = match (series_param, s) {
                (Some(p), Some(x)) => format!("{}={}", p.name(), p.pretty(*x)),
                _ => "T_mix".into(),
            };
            chart = chart.line(&label, study.points.iter().map(|p| (p.n_lossy as f64, p.t_mix.unwrap_or(f64::NAN))).collect());
        }
        sink.write_plot("scaling", &chart)?;
    }
    Ok((summary, studies))
}

pub fn recipe(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Summary, CliError> {
    if cfg.sweep.is_some() || cfg.series.is_some() {
        return Err(CliError::config("recipe works on a single lattice; remove sweep and series".into()));
    }
    let rc = cfg.recipe.as_ref().ok_or_else(|| CliError::config("recipe needs a recipe block".into()))?;
    let spec = cfg.lattice.spec()?;
    let spectral = eigensolve(&spec.build()?)?;
    let support = match (&rc.support, rc.support_size) {
        (Some(s), _) => s.clone(),
        (None, Some(k)) => centered_support(&spec, k)?,
        (None, None) => unreachable!("validated"),
    };
    let kill = match (&rc.kill_modes, rc.kill) {
        (Some(k), _) => k.clone(),
        (None, Some(k)) => slowest_modes(&spectral, k),
        (None, None) => unreachable!("validated"),
    };
    let r = orthogonal_recipe(&spec, &support, &kill)?;
    let mut table = Table::new(&["node_index", "re_amp", "im_amp"]);
    for (node, a) in r.support.iter().zip(&r.amplitudes) {
        table.push(vec![node.to_string(), num(a.re), num(a.im)]);
    }
    let mut summary = vec![format!("wrote {}", sink.write_table("recipe", &table)?.display())];
    for (k, o) in r.kill_modes.iter().zip(&r.killed_overlaps) {
        let z = spectral.eigenvalues()[*k];
        summary.push(format!("mode {k} (lambda = {} {:+}i): overlap {o:.3e}", z.re, z.im));
    }
    summary.push(format!("dark overlap {:.6e}", r.dark_overlap));
    summary.extend(r.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(summary)
}
