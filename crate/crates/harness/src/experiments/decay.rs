//! Algebraic decay exponents of the VCHE against a heat baseline.

use std::path::Path;

use aflow_core::diagnostics::{DiagnosticsRecord, SupBoundAudit};
use aflow_core::integrator::Model;

use super::{fan_out, run_recorded};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::fit::{fit_with_min, DecayFit};
use crate::output::{write_fit_summary, Check, SummaryRow, Verdict};

pub const DEFAULT_T_A: f64 = 10.0;

/// Fitted quantities: id, expected exponent offset from `-n/2`, and whether
/// the leading tolerance applies.
pub const NORMS: [(&str, f64, bool); 5] = [
    ("filtered_energy", 0.0, true),
    ("v_p0_m0", 0.0, true),
    ("v_p0_m1", -1.0, false),
    ("v_p0_m2", -2.0, false),
    ("v_p1_m0", -2.0, false),
];

pub fn expected_exponent(norm: &str, dim: usize) -> Option<f64> {
    NORMS.iter().find(|(id, _, _)| *id == norm).map(|(_, off, _)| off - dim as f64 / 2.0)
}

pub fn series(records: &[DiagnosticsRecord], norm: &str) -> Vec<(f64, f64)> {
    records
        .iter()
        .map(|r| {
            let v = match norm {
                "filtered_energy" => r.filtered_energy,
                "v_p0_m0" => r.v_norms[0],
                "v_p0_m1" => r.v_norms[1],
                "v_p0_m2" => r.v_norms[2],
                "v_p1_m0" => r.dt_v_norm,
                _ => f64::NAN,
            };
            (r.t, v)
        })
        .collect()
}

/// Resolves the fit window and checks it against the validity limit.
pub fn window(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let limit = cfg.validity_limit()?;
    let t_a = cfg.fit.t_a.unwrap_or(DEFAULT_T_A);
    let t_b = cfg.fit.t_b.unwrap_or(limit);
    if t_b > limit * (1.0 + 1e-12) {
        return Err(HarnessError::Config(format!(
            "fit window end t_b = {t_b} exceeds the validity limit 0.1/(nu k_min^2) = {limit}"
        )));
    }
    if !(t_a > 0.0 && t_b > t_a) {
        return Err(HarnessError::Config(format!("fit window ({t_a}, {t_b}) needs t_b > t_a > 0")));
    }
    if cfg.solver.t_end < t_b * (1.0 - 1e-12) {
        return Err(HarnessError::Config(format!(
            "[solver] t_end = {} ends before the fit window ({t_b})",
            cfg.solver.t_end
        )));
    }
    Ok((t_a, t_b))
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let grid = cfg.grid()?;
    let dim = grid.dim();
    let params = cfg.params()?;
    let (t_a, t_b) = window(cfg)?;
    let v0 = cfg.initial_field(&grid, params.alpha)?;
    let mut solver = cfg.solver_config()?;
    solver.t_end = t_b;

    let mut runs = vec![("vche", Model::Vche), ("heat", Model::Heat)];
    if cfg.fit.nse_comparison {
        runs.push(("nse", Model::Nse));
    }
    let results = fan_out(dim, runs, |(name, model)| {
        run_recorded(&v0, &solver, model, &out.join(format!("{name}.csv"))).map(|(r, _)| (name, r))
    });
    let mut by_name = Vec::new();
    for r in results {
        by_name.push(r?);
    }
    let records = |name: &str| &by_name.iter().find(|(n, _)| *n == name).expect("run present").1;

    let fit = |name: &str, norm: &str| -> Result<DecayFit> {
        let mut f = fit_with_min(&series(records(name), norm), (t_a, t_b), cfg.fit.min_samples)?;
        f.norm_id = if name == "vche" { norm.to_string() } else { format!("{name}:{norm}") };
        Ok(f)
    };
    let tolerance = |leading: bool| if leading { cfg.fit.tolerance_leading } else { cfg.fit.tolerance_higher };
    let judged: Vec<String> = cfg
        .fit
        .judged
        .clone()
        .unwrap_or_else(|| NORMS.iter().map(|(id, _, _)| id.to_string()).collect());
    for j in &judged {
        if expected_exponent(j, dim).is_none() {
            return Err(HarnessError::Config(format!("[fit] judged: unknown norm `{j}`")));
        }
    }

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (norm, _, leading) in NORMS {
        if norm == "v_p1_m0" && !cfg.diagnostics.time_derivative {
            continue;
        }
        let expected = expected_exponent(norm, dim).expect("known norm");
        let tol = tolerance(leading);
        let heat = fit("heat", norm)?;
        let vche = fit("vche", norm)?;
        let heat_pass = (heat.slope - expected).abs() <= tol;
        let vche_pass = (vche.slope - expected).abs() <= tol
            && (vche.slope - heat.slope).abs() <= cfg.fit.baseline_tolerance;
        if judged.iter().any(|j| j == norm) {
            checks.push(Check::new(
                format!("slope {norm}"),
                vche.slope,
                format!(
                    "{expected} +- {tol} and within {} of heat slope {:.4}",
                    cfg.fit.baseline_tolerance, heat.slope
                ),
                vche_pass,
            ));
        }
        if cfg.fit.nse_comparison {
            let nse = fit("nse", norm)?;
            let nse_pass = (nse.slope - expected).abs() <= tol
                && (nse.slope - heat.slope).abs() <= cfg.fit.baseline_tolerance;
            if norm == "v_p0_m0" {
                checks.push(Check::new(
                    "nse slope v_p0_m0",
                    nse.slope,
                    format!("{expected} +- {tol}"),
                    nse_pass,
                ));
            }
            rows.push(SummaryRow { fit: nse, expected, pass: nse_pass });
        }
        rows.push(SummaryRow { fit: vche, expected, pass: vche_pass });
        rows.push(SummaryRow { fit: heat, expected, pass: heat_pass });
    }
    write_fit_summary(&out.join("summary.csv"), &rows)?;

    let vche = records("vche");
    let mut audit = SupBoundAudit::new(v0.spectrum_sup(), grid.box_length(), dim);
    for r in vche {
        audit.push(r);
    }
    checks.push(Check::new(
        "max spectrum_sup / running sup bound",
        audit.worst_ratio,
        "<= 1",
        audit.worst_ratio <= 1.0,
    ));
    let notes = vec![
        format!("fit window [{t_a}, {t_b}], validity limit {}", cfg.validity_limit()?),
        format!("vche samples: {}", vche.len()),
    ];
    Ok(Verdict::new("decay", checks, notes))
}
