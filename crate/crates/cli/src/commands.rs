//! One function per subcommand. Each writes `report.json` and
//! `timings.json` plus its own artifacts, and fails with exit code 2 when a
//! numerical stage failed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use aubry::analysis::analyze_class;
use aubry::config::Config;
use aubry::critical::{alpha_function, AlphaTable};
use aubry::example::verify_example;
use aubry::flow::integrate as integrate_flow;
use aubry::graph::PhaseGraph;
use aubry::lagrangian::{energy, CohomologyClass};
use aubry::measure::{energy_level_check, graph_property_check, measure_json, min_closed_measure};
use aubry::report::{AlphaEntry, ClassCountEntry, RunReport};
use aubry::sweep::perturb_sweep;
use serde_json::{json, Value};

use crate::CliError;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::invalid(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::invalid(e.to_string()))? + "\n";
    fs::create_dir_all(dir).map_err(|e| CliError::invalid(e.to_string()))?;
    fs::write(dir.join(name), text).map_err(|e| CliError::invalid(format!("cannot write {name}: {e}")))
}

fn pair(c: CohomologyClass) -> [f64; 2] {
    [c.c1, c.c2]
}

/// Time `f` under `name`.
fn timed<T>(report: &mut RunReport, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.timings.insert(name.to_string(), start.elapsed().as_secs_f64());
    out
}

fn finish(report: &RunReport, dir: &Path) -> Result<(), CliError> {
    report.write(dir)?;
    if report.failures.is_empty() {
        Ok(())
    } else {
        let stages: Vec<&str> = report.failures.keys().map(String::as_str).collect();
        Err(CliError::numerical(format!("failed stages: {}", stages.join(", "))))
    }
}

fn build_graph(cfg: &Config, report: &mut RunReport) -> Result<PhaseGraph, CliError> {
    let l = cfg.lagrangian()?;
    let grid = cfg.grid()?;
    Ok(timed(report, "build_graph", || PhaseGraph::build(&l, grid))?)
}

pub fn integrate(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("integrate", cfg.clone());
    let l = cfg.lagrangian()?;
    let (s0, duration, step) = cfg.initial_state()?;
    let tr = timed(&mut report, "integrate", || integrate_flow(&l, &s0, duration, step))?;
    tr.write_csv(create(out, "trajectory.csv")?)?;
    let last = tr.last();
    let (lx, ly) = last.lifted();
    let (ix, iy) = tr.integrated_velocity();
    report.residual("energy_drift", tr.energy_drift());
    report.residual("winding", (lx - s0.q.x - ix).abs().max((ly - s0.q.y - iy).abs()));
    report.residual("final_energy", energy(&last.state));
    finish(&report, out)
}

pub fn alpha(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("alpha", cfg.clone());
    let g = build_graph(&cfg, &mut report)?;
    let classes = cfg.classes()?;
    let table = timed(&mut report, "alpha", || alpha_function(&g, &classes, cfg.tolerances.method))?;
    table.write_csv(create(out, "alpha.csv")?)?;
    report.alpha = table
        .classes
        .iter()
        .zip(&table.values)
        .map(|(&c, &alpha)| AlphaEntry { class: pair(c), alpha })
        .collect();
    if let Some(d) = table.max_convexity_defect() {
        report.residual("convexity_defect", d);
    }
    finish(&report, out)
}

pub fn potential(cfg: Config, out: &Path, threshold: Option<f64>) -> Result<(), CliError> {
    let mut report = RunReport::new("potential", cfg.clone());
    let g = build_graph(&cfg, &mut report)?;
    for (i, c) in cfg.classes()?.into_iter().enumerate() {
        let an = match timed(&mut report, &format!("class{i}"), || analyze_class(&g, c, &cfg.tolerances)) {
            Ok(an) => an,
            Err(e) if e.is_numerical() => {
                report.failures.insert(format!("class{i}"), e.to_string());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        an.potential
            .write_csv(create(out, &format!("potential_{i}.csv"))?, threshold.unwrap_or(an.partition.eps_class))?;
        write_json(out, &format!("certificate_{i}.json"), &an.certificate.to_json(&g, c))?;
        report.alpha.push(AlphaEntry { class: pair(c), alpha: an.alpha });
        report.class_counts.push(ClassCountEntry {
            class: pair(c),
            count: an.partition.class_count(),
            aubry_nodes: an.partition.aubry_nodes.len(),
        });
        report.residual(&format!("class{i}.k_used"), an.potential.k_used);
    }
    finish(&report, out)
}

pub fn classes(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("classes", cfg.clone());
    let g = build_graph(&cfg, &mut report)?;
    let mut entries = Vec::new();
    for (i, c) in cfg.classes()?.into_iter().enumerate() {
        let an = match timed(&mut report, &format!("class{i}"), || analyze_class(&g, c, &cfg.tolerances)) {
            Ok(an) => an,
            Err(e) if e.is_numerical() => {
                report.failures.insert(format!("class{i}"), e.to_string());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let points = |nodes: &[usize]| -> Vec<[f64; 2]> {
            nodes
                .iter()
                .map(|&v| {
                    let p = g.spec.point(v);
                    [p.x, p.y]
                })
                .collect()
        };
        entries.push(json!({
            "class": pair(c),
            "alpha": an.alpha,
            "eps_lift": an.eps_lift,
            "eps_aubry": an.partition.eps_aubry,
            "eps_class": an.partition.eps_class,
            "aubry_nodes": an.partition.aubry_nodes.len(),
            "count": an.partition.class_count(),
            "classes": an.partition.classes.iter().map(|cl| points(cl)).collect::<Vec<_>>(),
        }));
        report.alpha.push(AlphaEntry { class: pair(c), alpha: an.alpha });
        report.class_counts.push(ClassCountEntry {
            class: pair(c),
            count: an.partition.class_count(),
            aubry_nodes: an.partition.aubry_nodes.len(),
        });
        report.residual(&format!("class{i}.energy_level"), an.residuals.energy_level);
        report.residual(&format!("class{i}.graph_property"), an.residuals.graph_property);
    }
    write_json(out, "classes.json", &Value::Array(entries))?;
    finish(&report, out)
}

pub fn measure(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("measure", cfg.clone());
    let g = build_graph(&cfg, &mut report)?;
    let mut measures = Vec::new();
    for (i, c) in cfg.classes()?.into_iter().enumerate() {
        let (value, mu, cert) = match timed(&mut report, &format!("class{i}"), || {
            min_closed_measure(&g, c, cfg.tolerances.method)
        }) {
            Ok(r) => r,
            Err(e) if e.is_numerical() => {
                report.failures.insert(format!("class{i}"), e.to_string());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let text = measure_json(&mu, &g, value, c)?;
        measures.push(serde_json::from_str::<Value>(&text).map_err(|e| CliError::invalid(e.to_string()))?);
        write_json(out, &format!("certificate_{i}.json"), &cert.to_json(&g, c))?;
        let (conservation, normalization) = mu.residuals(&g);
        report.alpha.push(AlphaEntry { class: pair(c), alpha: cert.alpha() });
        report.residual(&format!("class{i}.conservation"), conservation);
        report.residual(&format!("class{i}.normalization"), normalization);
        report.residual(&format!("class{i}.energy_level"), energy_level_check(&mu, &g, cert.alpha()));
        report.residual(&format!("class{i}.graph_property"), graph_property_check(&mu, &g));
    }
    write_json(out, "measure.json", &Value::Array(measures))?;
    finish(&report, out)
}

pub fn example_verify(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("example-verify", cfg.clone());
    let spec = cfg
        .example()?
        .ok_or_else(|| CliError::invalid("example-verify needs lagrangian.f_kind"))?;
    let r = timed(&mut report, "verify", || verify_example(&spec, &cfg.tolerances, &cfg.verify))?;
    let zero = [0.0, 0.0];
    if let Some(a) = &r.alpha {
        report.alpha.push(AlphaEntry { class: zero, alpha: a.min_mean });
        report.residual("alpha_error", a.error);
        let table = AlphaTable {
            classes: vec![CohomologyClass::ZERO],
            values: vec![a.min_mean],
        };
        table.write_csv(create(out, "alpha.csv")?)?;
    }
    if let Some(s) = &r.static_curve {
        report.residual("static_curve.max_deviation", s.max_deviation);
        report.residual("static_curve.energy_drift", s.energy_drift);
    }
    if let Some(cl) = &r.classes {
        report.class_counts.push(ClassCountEntry {
            class: zero,
            count: cl.count,
            aubry_nodes: cl.aubry_nodes,
        });
        write_json(out, "classes.json", &serde_json::to_value(cl).map_err(|e| CliError::invalid(e.to_string()))?)?;
    }
    if let Some(m) = &r.measure {
        report.residual("measure.energy_level", m.residuals.energy_level);
        report.residual("measure.graph_property", m.residuals.graph_property);
        report.residual("measure.conservation", m.residuals.conservation);
        write_json(out, "measure.json", &serde_json::to_value(m).map_err(|e| CliError::invalid(e.to_string()))?)?;
    }
    if let Some(x) = &r.cross_checks {
        report.residual("bisection_gap", x.bisection_gap);
        report.residual("measure_gap", x.measure_gap);
    }
    if let Some(a) = &r.audit {
        report.residual("audit.min_action_rate", a.min_action_rate);
    }
    if let Some(rf) = &r.refinement {
        let mut text = String::from("n,h_time,alpha,error\n");
        for l in &rf.levels {
            text += &format!("{},{},{},{}\n", l.n, l.h_time, l.alpha, l.error);
        }
        fs::write(out.join("refinement.csv"), text).map_err(|e| CliError::invalid(format!("cannot write refinement.csv: {e}")))?;
    }
    for (stage, msg) in &r.failures {
        report.failures.insert(format!("example.{stage}"), msg.clone());
    }
    report.example = Some(r);
    finish(&report, out)
}

pub fn sweep(cfg: Config, out: &Path) -> Result<(), CliError> {
    let mut report = RunReport::new("sweep", cfg.clone());
    let spec = cfg.sweep.clone().ok_or_else(|| CliError::invalid("config has no sweep section"))?;
    let l = cfg.lagrangian()?;
    let grid = cfg.grid()?;
    let result = timed(&mut report, "sweep", || perturb_sweep(&l, grid, &spec, &cfg.tolerances))?;
    result.write_csv(create(out, "sweep.csv")?)?;
    for row in &result.baseline {
        if let (Some(alpha), Some(count), Some(aubry)) = (row.alpha, row.class_count, row.aubry_nodes) {
            report.alpha.push(AlphaEntry { class: [row.c1, row.c2], alpha });
            report.class_counts.push(ClassCountEntry {
                class: [row.c1, row.c2],
                count,
                aubry_nodes: aubry,
            });
        } else {
            report.failures.insert(format!("baseline({},{})", row.c1, row.c2), row.status.clone());
        }
    }
    report.sweep_baseline = result.baseline;
    report.sweep = Some(result.summary);
    finish(&report, out)
}
