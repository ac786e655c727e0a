//! The four subcommands. Each writes its data files and a `manifest.json`
//! into one output directory; on any error the files already written by
//! the command are removed again.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use fdreg::bandwidth::{build_plan, default_k, h_star_from_distances, kth_smallest, BandwidthPlan};
use fdreg::experiments::{
    besicovitch_probe, consistency_sweep, derive_seed, generate, h2_probe, rate_transfer_check,
    ProcessSpec, SweepDesign,
};
use fdreg::io::{format_curves, format_number, format_responses, read_basis, read_curves, read_dataset, write_atomic};
use fdreg::metrics::check_basis_conditions;
use fdreg::{
    cnp_schedule_scaled, empirical_basis, BasisFamily, EmbeddedSample, Grid, Metric, PseudometricSpec,
    VariantKind,
};

use crate::config::{BasisFamilyName, EstimatorConfig, PseudometricConfig, RunConfig};

pub const MANIFEST: &str = "manifest.json";

/// Files written so far by one command. Dropping without [`Outputs::commit`]
/// deletes them.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    /// Names of the files written so far, in order.
    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect()
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn manifest(command: &str, cfg: &RunConfig, outputs: &Outputs, extra: Value) -> String {
    let config: Value = serde_json::from_str(&cfg.normalized_json()).expect("normalized config is JSON");
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": config,
        "outputs": outputs.names(),
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

fn reference_grid(cfg: &RunConfig) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::uniform(cfg.grid_intervals)?))
}

fn section<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| anyhow!("config has no \"{name}\" section"))
}

/// Draws n curves and responses: `curves.csv`, `responses.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let sim = section(&cfg.simulate, "simulate")?;
    let process = ProcessSpec {
        kind: sim.process.clone(),
        seed: cfg.seed,
    };
    let data = generate(&process, &sim.regression, sim.n, reference_grid(cfg)?)?;
    let mut outputs = Outputs::create(out)?;
    outputs.write("curves.csv", &format_curves(data.grid(), data.curves()))?;
    outputs.write("responses.csv", &format_responses(data.responses()))?;
    let meta: Value = serde_json::to_value(data.meta())?;
    let text = manifest("simulate", cfg, &outputs, json!({ "dataset": meta }));
    outputs.write(MANIFEST, &text)?;
    Ok(outputs.commit())
}

fn pseudometric(
    pm: &PseudometricConfig,
    basis: Option<&Arc<fdreg::EigenBasis>>,
) -> Result<PseudometricSpec> {
    Ok(match pm.variant {
        VariantKind::Discretize => PseudometricSpec::discretize(pm.p)?,
        VariantKind::Smooth => PseudometricSpec::smooth(pm.p, pm.h, pm.kernel.unwrap_or_default().kernel())?,
        VariantKind::Eigen => {
            let basis = basis.ok_or_else(|| anyhow!("eigen pseudometric needs a basis"))?;
            PseudometricSpec::eigen(pm.p, Arc::clone(basis))?
        }
    })
}

/// One prediction per query curve: `predictions.csv`.
pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let fit = section(&cfg.fit, "fit")?;
    let train = read_dataset(&fit.train_curves, &fit.train_responses)?;
    let queries = read_curves(&fit.queries)?;
    if let Some(g) = &queries.grid {
        if **g != **train.grid() {
            return Err(fdreg::Error::GridMismatch(format!(
                "{}: row 0 grid ({} points) differs from the training grid in {} ({} points)",
                fit.queries.display(),
                g.len(),
                fit.train_curves.display(),
                train.grid().len()
            ))
            .into());
        }
    }
    // Rebind the queries to the training grid instance.
    let query_curves: Vec<_> = queries
        .curves
        .iter()
        .map(|c| fdreg::ReferenceCurve::new(Arc::clone(train.grid()), c.values().to_vec()))
        .collect::<fdreg::Result<_>>()?;

    let n = train.len();
    let (sample, kernel, plan_for): (EmbeddedSample, _, Box<dyn Fn(&[f64]) -> Result<BandwidthPlan> + Sync>) =
        match &fit.estimator {
            EstimatorConfig::Full { h, kernel } => {
                let sample = EmbeddedSample::new(&train, &Metric::Full)?;
                let h = *h;
                if let Some(h) = h {
                    if !(h > 0.0) {
                        bail!("full estimator bandwidth must be positive, got {h}");
                    }
                }
                let plan = move |d: &[f64]| -> Result<BandwidthPlan> {
                    let h = match h {
                        Some(h) => h,
                        None => h_star_from_distances(d)?,
                    };
                    Ok(build_plan(h, 0.0, 1.0)?)
                };
                (sample, kernel.kernel(), Box::new(plan))
            }
            EstimatorConfig::Knn { k, kernel } => {
                let k = k.unwrap_or_else(|| default_k(n));
                if k == 0 || k > n {
                    bail!("knn k = {k} must lie in 1..={n}");
                }
                let sample = EmbeddedSample::new(&train, &Metric::Full)?;
                let plan = move |d: &[f64]| -> Result<BandwidthPlan> { Ok(build_plan(kth_smallest(d, k)?, 0.0, 1.0)?) };
                (sample, kernel.kernel(), Box::new(plan))
            }
            EstimatorConfig::Discretized {
                pseudometric: pm,
                basis,
                c_np,
                cnp_scale,
                c,
                kernel,
            } => {
                let basis = if pm.variant == VariantKind::Eigen {
                    Some(Arc::new(match basis {
                        Some(path) => read_basis(path, Arc::clone(train.grid()), Some(train.mean_curve()))?,
                        None => empirical_basis(&train, n.min(train.grid().len()).min(pm.p))?,
                    }))
                } else {
                    None
                };
                let spec = pseudometric(pm, basis.as_ref())?;
                let c_np = match c_np {
                    Some(v) => *v,
                    None => cnp_schedule_scaled(pm.variant, basis, *cnp_scale)?.value(n, pm.p)?,
                };
                let c = *c;
                build_plan(0.0, c_np, c)?;
                let sample = EmbeddedSample::new(&train, &Metric::Pseudo(spec))?;
                let plan = move |d: &[f64]| -> Result<BandwidthPlan> { Ok(build_plan(h_star_from_distances(d)?, c_np, c)?) };
                (sample, kernel.kernel(), Box::new(plan))
            }
        };

    let mut csv = String::from("query_index,prediction,effective_neighbors,h_used\n");
    let mut plans = Vec::with_capacity(query_curves.len());
    for (i, q) in query_curves.iter().enumerate() {
        let d = sample.distances(q)?;
        let plan = plan_for(&d)?;
        let fit = sample.fit_distances(&d, plan, &kernel);
        writeln!(
            csv,
            "{i},{},{},{}",
            format_number(fit.prediction),
            fit.effective_neighbors,
            format_number(plan.h_np)
        )
        .expect("writing to a String");
        plans.push(json!({ "query_index": i, "plan": plan }));
    }

    let mut outputs = Outputs::create(out)?;
    outputs.write("predictions.csv", &csv)?;
    let text = manifest("fit", cfg, &outputs, json!({ "plans": plans }));
    outputs.write(MANIFEST, &text)?;
    Ok(outputs.commit())
}

/// Runs the sweep: `sweep.csv` and the long-format `plot_data.csv`.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let conv = section(&cfg.convergence, "convergence")?;
    let process = ProcessSpec {
        kind: conv.process.clone(),
        seed: cfg.seed,
    };
    let design = SweepDesign {
        n_values: conv.n_values.clone(),
        p_values: conv.p_values.clone(),
        replications: conv.replications,
        queries: conv.queries,
        grid: reference_grid(cfg)?,
    };
    let sweep = consistency_sweep(&process, &conv.regression, &conv.estimator, &design)?;
    let exponent = conv.gamma_exponent;
    let rates = rate_transfer_check(&sweep, |n| (n as f64).powf(exponent))?;

    let mut table = String::from("n,p,variant,mse,mse_full,replications,seed\n");
    let mut plot = String::from("n,p,variant,series,value\n");
    for (cell, rate) in sweep.cells.iter().zip(&rates) {
        let variant = cell.variant.as_str();
        writeln!(
            table,
            "{},{},{variant},{},{},{},{}",
            cell.n,
            cell.p,
            format_number(cell.mse),
            format_number(cell.mse_full),
            cell.replications,
            cell.seed
        )
        .expect("writing to a String");
        for (series, value) in [
            ("mse", cell.mse),
            ("mse_full", cell.mse_full),
            ("gamma", rate.gamma),
            ("gamma_mse", rate.scaled_mse),
            ("gamma_mse_full", rate.scaled_mse_full),
            ("ratio", rate.ratio),
        ] {
            writeln!(plot, "{},{},{variant},{series},{}", cell.n, cell.p, format_number(value))
                .expect("writing to a String");
        }
    }

    let mut outputs = Outputs::create(out)?;
    outputs.write("sweep.csv", &table)?;
    outputs.write("plot_data.csv", &plot)?;
    let text = manifest("convergence", cfg, &outputs, json!({}));
    outputs.write(MANIFEST, &text)?;
    Ok(outputs.commit())
}

/// Besicovitch table, H2 table and basis-condition report, each only when
/// its section is configured.
pub fn cmd_diagnose(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let diag = section(&cfg.diagnose, "diagnose")?;
    let grid = reference_grid(cfg)?;
    let mut files: Vec<(&str, String)> = Vec::new();

    if let Some(b) = &diag.besicovitch {
        let process = ProcessSpec {
            kind: diag.process.clone(),
            seed: derive_seed(cfg.seed, &[10]),
        };
        let data = generate(&process, &diag.regression, b.n, Arc::clone(&grid))?;
        let eta: Vec<f64> = data.curves().iter().map(|c| diag.regression.eta.evaluate(c)).collect();
        let rows = besicovitch_probe(&data, &eta, &b.deltas)?;
        let mut csv = String::from("delta,value\n");
        for r in rows {
            writeln!(csv, "{},{}", format_number(r.delta), format_number(r.value)).expect("writing to a String");
        }
        files.push(("besicovitch.csv", csv));
    }

    if let Some(h2) = &diag.h2 {
        let process = ProcessSpec {
            kind: diag.process.clone(),
            seed: derive_seed(cfg.seed, &[11]),
        };
        let cells = h2_probe(
            &process,
            &h2.family,
            h2.cnp_scale,
            &h2.n_values,
            &h2.p_values,
            h2.mc,
            Arc::clone(&grid),
        )?;
        let mut csv = String::from("n,p,variant,c_np,estimate\n");
        for c in cells {
            writeln!(
                csv,
                "{},{},{},{},{}",
                c.n,
                c.p,
                h2.family.variant.as_str(),
                format_number(c.c_np),
                format_number(c.estimate)
            )
            .expect("writing to a String");
        }
        files.push(("h2.csv", csv));
    }

    if let Some(bc) = &diag.basis_check {
        let family = match bc.family {
            BasisFamilyName::Indicator => BasisFamily::indicator(bc.p)?,
            BasisFamilyName::KernelSmoother => {
                let h = bc.h.unwrap_or(1.0 / bc.p as f64);
                BasisFamily::kernel_smoother(bc.p, h, bc.kernel.kernel())?
            }
        };
        let report = check_basis_conditions(&family, &Grid::uniform(bc.p)?, bc.probes);
        let value = json!({
            "a": report.partition_of_unity,
            "C3": report.c3,
            "m": report.observed_locality,
            "declared_m": family.locality(),
            "locality_holds": report.locality_holds,
            "max_partition_error": report.max_partition_error,
            "partition_witness": report.partition_witness,
        });
        let mut s = serde_json::to_string_pretty(&value)?;
        s.push('\n');
        files.push(("basis_conditions.json", s));
    }

    if files.is_empty() {
        bail!("diagnose section enables none of besicovitch, h2, basis_check");
    }
    let mut outputs = Outputs::create(out)?;
    for (name, contents) in &files {
        outputs.write(name, contents)?;
    }
    let text = manifest("diagnose", cfg, &outputs, json!({}));
    outputs.write(MANIFEST, &text)?;
    Ok(outputs.commit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut o = Outputs::create(dir.path()).unwrap();
            o.write("a.csv", "1\n").unwrap();
            assert!(dir.path().join("a.csv").exists());
        }
        assert!(!dir.path().join("a.csv").exists());
        let mut o = Outputs::create(dir.path()).unwrap();
        o.write("b.csv", "1\n").unwrap();
        o.commit();
        assert!(dir.path().join("b.csv").exists());
    }

    #[test]
    fn missing_section_is_reported() {
        let cfg = RunConfig::from_json(r#"{"seed": 1}"#).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_fit(&cfg, dir.path()).unwrap_err().to_string();
        assert!(err.contains("\"fit\""), "{err}");
    }
}
