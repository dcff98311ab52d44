//! Canned reproduction jobs. Each writes its config and CSVs into its own
//! directory and returns summary lines, including `check` lines where a
//! quantitative expectation exists.

use std::f64::consts::PI;

use rlmix_core::initstate::{basis_excitation, dark_state, middle_node};
use rlmix_core::mixing::{lrep_for_size, mixing_report, MixClass, Segment};
use rlmix_core::spectral::{eigensolve, ep_scan, gap_vs_size};

use crate::commands::{self, Summary};
use crate::config::{AmplitudeEntry, Axis, ExperimentConfig, LatticeConfig, Parameter, TopologyName, Angle, Delta};
use crate::error::CliError;
use crate::output::{num, opt, Chart, Sink, Table};

/// Job name and its short alias.
pub const JOBS: [(&str, &str); 12] = [
    ("dbs-conventional", "fig1b"),
    ("dbs-regimes", "fig1c"),
    ("dbs-mixing-time", "fig1mix"),
    ("chain-dark-state", "fig2b"),
    ("chain-spectrum", "fig2c"),
    ("chain-scaling", "fig3"),
    ("central-excitation", "fig4"),
    ("ring-spectrum", "fig6"),
    ("lrep-asymmetry", "fig7"),
    ("ring-scaling", "fig8"),
    ("ring-asymmetric-scaling", "fig9a"),
    ("ring-gap", "fig9b"),
];

pub fn resolve(id: &str) -> Option<&'static str> {
    JOBS.iter().find(|(name, alias)| *name == id || *alias == id).map(|(name, _)| *name)
}

fn lattice(topology: TopologyName, n_lossy: usize, v: f64, phi: f64) -> LatticeConfig {
    LatticeConfig { topology, n_lossy, v, phi: Angle(phi), gamma: 1.0, delta: Delta::Balanced }
}

fn experiment(lattice: LatticeConfig, parallelism: Option<usize>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(lattice);
    cfg.run.parallelism = parallelism;
    cfg
}

fn check(ok: bool, what: &str) -> String {
    format!("check {}: {what}", if ok { "PASS" } else { "FAIL" })
}

fn save(sink: &mut Sink, name: &str, cfg: &ExperimentConfig) -> Result<(), CliError> {
    sink.write_text(&format!("{name}.json"), &cfg.to_json())?;
    Ok(())
}

fn two_node() -> Vec<AmplitudeEntry> {
    let a = 0.5f64.sqrt();
    vec![AmplitudeEntry { node: 1, re: a, im: 0.0 }, AmplitudeEntry { node: 3, re: a, im: 0.0 }]
}

pub fn reproduce(id: &str, base: &Sink, parallelism: Option<usize>) -> Result<(Summary, Sink), CliError> {
    let name = resolve(id).ok_or_else(|| {
        let names: Vec<&str> = JOBS.iter().map(|(n, _)| *n).collect();
        CliError::config(format!("unknown job {id:?}; choose one of {}", names.join(", ")))
    })?;
    let mut sink = base.child(name);
    let pi = PI;
    let mut out = Vec::new();
    match name {
        "dbs-conventional" => {
            let cfg = experiment(lattice(TopologyName::Dbs, 1, 0.4, pi / 4.0), parallelism);
            save(&mut sink, "config", &cfg)?;
            out.extend(commands::mix(&cfg, &mut sink)?);
            let spec = cfg.lattice.spec()?;
            let r = mixing_report(&spec, &basis_excitation(&spec, 1)?.state, cfg.run.epsilon, &cfg.run.options())?;
            let p = r.p_stationary.clone().unwrap_or_default();
            let ok = r.class == MixClass::Conventional && p.len() == 3 && (p[0] - 0.5).abs() < 1e-6 && p[1].abs() < 1e-6;
            out.push(check(ok, &format!("class {} with p_st {:?}", r.class, p)));
        }
        "dbs-regimes" => {
            let mut cfg = experiment(lattice(TopologyName::Dbs, 1, 0.4, pi / 4.0), parallelism);
            cfg.initial_state.amplitudes = Some(two_node());
            cfg.series = Some(Axis::list(Parameter::V, &[0.4, 0.6]));
            save(&mut sink, "config", &cfg)?;
            out.extend(commands::mix(&cfg, &mut sink)?);
            for (v, want) in [(0.4, MixClass::Unconventional), (0.6, MixClass::NonMixing)] {
                let spec = Parameter::V.apply(&cfg.lattice, v)?.spec()?;
                let state = commands::initial_state(&cfg.initial_state, &spec)?;
                let r = mixing_report(&spec, &state, cfg.run.epsilon, &cfg.run.options())?;
                out.push(check(r.class == want, &format!("v/gamma = {v}: class {}", r.class)));
            }
        }
        "dbs-mixing-time" => {
            let mut cfg = experiment(lattice(TopologyName::Dbs, 1, 0.4, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::V, 0.1, 1.5, 29));
            save(&mut sink, "config", &cfg)?;
            out.extend(commands::mix(&cfg, &mut sink)?);
            let mut spec_cfg = cfg.clone();
            spec_cfg.sweep = Some(Axis::range(Parameter::V, 0.1, 1.0, 200));
            save(&mut sink, "spectrum_config", &spec_cfg)?;
            out.extend(commands::spectrum(&spec_cfg, &mut sink)?);
            let scan = ep_scan(&spec_cfg.lattice.spec()?, &spec_cfg.sweep.as_ref().expect("set").points()?)?;
            let ok = scan.lrep.is_some_and(|x| (x - 0.5).abs() < 1e-6);
            out.push(check(ok, &format!("exceptional point at v/gamma = {}", opt(scan.lrep))));
        }
        "chain-dark-state" => {
            let mut table = Table::new(&["phi", "node", "abs_amplitude"]);
            let mut chart = Chart::new("dark state profile", "node", "|amplitude|");
            chart.log_y = true;
            let mut cfg = experiment(lattice(TopologyName::Linear, 9, 1.0, pi / 4.0), parallelism);
            cfg.series = Some(Axis::list(Parameter::Phi, &[0.1 * pi, 0.25 * pi, 0.4 * pi]));
            cfg.initial_state.dark = Some(true);
            save(&mut sink, "config", &cfg)?;
            for phi in cfg.series.as_ref().expect("set").points()? {
                let spec = Parameter::Phi.apply(&cfg.lattice, phi)?.spec()?;
                let d = dark_state(&spec)?;
                let pts: Vec<(f64, f64)> = d.psi.iter().enumerate().map(|(j, z)| ((j + 1) as f64, z.norm())).collect();
                for (j, a) in &pts {
                    table.push(vec![num(phi), num(*j), num(*a)]);
                }
                chart = chart.line(&format!("phi={:.2}pi", phi / pi), pts);
            }
            out.push(format!("wrote {}", sink.write_table("dark_state", &table)?.display()));
            sink.write_plot("dark_state", &chart)?;
        }
        "chain-spectrum" => {
            let mut cfg = experiment(lattice(TopologyName::Linear, 9, 1.0, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::V, 0.05, 4.0, 200));
            save(&mut sink, "config", &cfg)?;
            out.extend(commands::spectrum(&cfg, &mut sink)?);
        }
        "chain-scaling" => {
            let mut cfg = experiment(lattice(TopologyName::Linear, 2, 3.0, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::NLossy, 2.0, 30.0, 29));
            cfg.series = Some(Axis::list(Parameter::V, &[3.0, 5.0, 7.0]));
            save(&mut sink, "config", &cfg)?;
            let (summary, studies) = commands::scaling_studies(&cfg, &mut sink)?;
            out.extend(summary);
            for (v, study) in &studies {
                if let Some(f) = &study.power_fit {
                    let v = v.unwrap_or(f64::NAN);
                    out.push(check((f.slope - 2.0).abs() <= 0.3, &format!("v/gamma = {v}: exponent {:.3}, expected 2 +- 0.3", f.slope)));
                }
            }
            let pre: Vec<f64> = studies
                .iter()
                .flat_map(|(_, s)| s.points.iter().filter(|p| p.segment == Segment::PreLrep).filter_map(|p| p.t_mix))
                .collect();
            let (lo, hi) = pre.iter().fold((f64::INFINITY, 0.0f64), |(a, b), t| (a.min(*t), b.max(*t)));
            out.push(check(hi <= 3.0 * lo, &format!("pre-LREP mixing times span {lo:.2} to {hi:.2}, expected within a factor 3")));
        }
        "central-excitation" => {
            let mut cfg = experiment(lattice(TopologyName::Linear, 20, 3.0, pi / 4.0), parallelism);
            let edge_sink = &mut sink.child("edge");
            save(edge_sink, "config", &cfg)?;
            out.extend(commands::mix(&cfg, edge_sink)?);
            let spec = cfg.lattice.spec()?;
            let centre = middle_node(&spec);
            cfg.initial_state.node = Some(centre);
            let centre_sink = &mut sink.child("centre");
            save(centre_sink, "config", &cfg)?;
            out.extend(commands::mix(&cfg, centre_sink)?);
            let run = cfg.run.options();
            let t_edge = mixing_report(&spec, &basis_excitation(&spec, 1)?.state, cfg.run.epsilon, &run)?.t_mix;
            let t_centre = mixing_report(&spec, &basis_excitation(&spec, centre)?.state, cfg.run.epsilon, &run)?.t_mix;
            let ok = matches!((t_edge, t_centre), (Some(e), Some(c)) if c <= 0.5 * e);
            out.push(check(ok, &format!("centre node {centre}: T_mix {} against edge {}", opt(t_centre), opt(t_edge))));

            let mut table = Table::new(&["n_lossy", "node", "abs_element"]);
            let mut chart = Chart::new("slowest decaying eigenvector", "node", "|element|");
            for n in [19, 20] {
                let s = spec.with_size(n)?;
                let data = eigensolve(&s.build()?)?;
                let k = rlmix_core::initstate::slowest_modes(&data, 1)[0];
                let phi = data.right(k);
                let scale = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let pts: Vec<(f64, f64)> = phi.iter().enumerate().map(|(j, z)| ((j + 1) as f64, z.norm() / scale)).collect();
                for (j, a) in &pts {
                    table.push(vec![n.to_string(), num(*j), num(*a)]);
                }
                let c = phi[middle_node(&s) - 1].norm() / scale;
                if n == 20 {
                    out.push(check(c < 1e-8, &format!("central element {c:.2e} for N_L = 20")));
                } else {
                    out.push(format!("central element {c:.3e} for N_L = 19"));
                }
                chart = chart.line(&format!("N_L={n}"), pts);
            }
            out.push(format!("wrote {}", sink.write_table("eigenvectors", &table)?.display()));
            sink.write_plot("eigenvectors", &chart)?;
        }
        "ring-spectrum" => {
            let mut cfg = experiment(lattice(TopologyName::Ring, 10, 1.0, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::V, 0.05, 4.0, 200));
            save(&mut sink, "config", &cfg)?;
            out.extend(commands::spectrum(&cfg, &mut sink)?);
        }
        "lrep-asymmetry" => {
            let grid: Vec<f64> = (0..=240).map(|i| 0.02 + 6.0 * i as f64 / 240.0).collect();
            let phis: Vec<f64> = (20..=30).map(|i| i as f64 / 100.0 * pi).collect();
            let mut table = Table::new(&["topology", "phi_over_pi", "lrep"]);
            let mut chart = Chart::new("largest exceptional point", "phi/pi", "v/gamma");
            for (topology, n) in [(TopologyName::Linear, 9), (TopologyName::Ring, 10)] {
                let label = if topology == TopologyName::Linear { "linear" } else { "ring" };
                let mut pts = Vec::new();
                for &phi in &phis {
                    let scan = ep_scan(&lattice(topology, n, 1.0, phi).spec()?, &grid)?;
                    table.push(vec![label.into(), num(phi / pi), scan.lrep.map(num).unwrap_or_default()]);
                    pts.push((phi / pi, scan.lrep.unwrap_or(f64::NAN)));
                }
                chart = chart.line(label, pts);
            }
            out.push(format!("wrote {}", sink.write_table("lrep_vs_phi", &table)?.display()));
            sink.write_plot("lrep_vs_phi", &chart)?;
        }
        "ring-scaling" => {
            let mut cfg = experiment(lattice(TopologyName::Ring, 2, 1.0, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::NLossy, 2.0, 24.0, 23));
            cfg.series = Some(Axis::list(Parameter::V, &[1.0, 2.0, 3.0, 4.0]));
            save(&mut sink, "config", &cfg)?;
            let (summary, studies) = commands::scaling_studies(&cfg, &mut sink)?;
            out.extend(summary);
            let chain = lattice(TopologyName::Linear, 2, 1.0, pi / 4.0).spec()?;
            let largest = cfg.sweep.as_ref().expect("set").points()?.last().map_or(0, |n| *n as usize);
            for (v, study) in &studies {
                let v = v.unwrap_or(f64::NAN);
                let mut chain_onset = None;
                for n in 1..=largest {
                    if lrep_for_size(&chain, n)?.is_some_and(|l| l > v) {
                        chain_onset = Some(n);
                        break;
                    }
                }
                let ring_onset = study.quadratic_onset();
                let later = match (chain_onset, ring_onset) {
                    (Some(c), Some(r)) => r > c,
                    (Some(_), None) => true,
                    (None, _) => continue,
                };
                out.push(check(later, &format!("v/gamma = {v}: ring onset {ring_onset:?} against chain onset {chain_onset:?}")));
            }
        }
        "ring-asymmetric-scaling" => {
            let mut cfg = experiment(lattice(TopologyName::Ring, 2, 2.0, pi / 4.0), parallelism);
            cfg.sweep = Some(Axis::range(Parameter::NLossy, 2.0, 24.0, 23));
            cfg.series = Some(Axis::list(Parameter::Phi, &[0.25 * pi, 0.24 * pi, 0.23 * pi]));
            save(&mut sink, "config", &cfg)?;
            let (summary, studies) = commands::scaling_studies(&cfg, &mut sink)?;
            out.extend(summary);
            if let Some((_, study)) = studies.last() {
                let onset = study.quadratic_onset();
                out.push(check(onset.is_none(), &format!("phi = 0.23pi: quadratic onset {onset:?}, expected none")));
            }
        }
        "ring-gap" => {
            let sizes: Vec<usize> = (2..=40).collect();
            let mut table = Table::new(&["phi_over_pi", "n_lossy", "gap"]);
            let mut chart = Chart::new("second smallest decay rate", "N_L", "|Im lambda_1|");
            let mut ratios = Vec::new();
            for f in [0.25, 0.24, 0.23] {
                let family = lattice(TopologyName::Ring, 2, 2.0, f * pi).spec()?;
                let gaps = gap_vs_size(&family, &sizes)?;
                for (n, g) in &gaps {
                    table.push(vec![num(f), n.to_string(), num(*g)]);
                }
                let at = |n: usize| gaps.iter().find(|(k, _)| *k == n).map_or(f64::NAN, |p| p.1);
                ratios.push((f, at(40) / at(20)));
                chart = chart.line(&format!("phi={f}pi"), gaps.iter().map(|(n, g)| (*n as f64, *g)).collect());
            }
            out.push(format!("wrote {}", sink.write_table("gap_vs_size", &table)?.display()));
            sink.write_plot("gap_vs_size", &chart)?;
            for (f, r) in ratios {
                let what = format!("phi = {f}pi: gap(40)/gap(20) = {r:.3}");
                out.push(match f {
                    0.25 => check(r <= 0.5, &format!("{what}, expected <= 0.5")),
                    0.23 => check(r >= 0.8, &format!("{what}, expected >= 0.8")),
                    _ => what,
                });
            }
        }
        _ => unreachable!("resolved above"),
    }
    Ok((out, sink))
}
