//! Integrating-factor RK4 time stepping and trajectory sampling.
//!
//! The viscous term is integrated exactly through `exp(-nu |k|^2 t)`; the
//! nonlinearity is advanced with classical RK4 in the transformed variable
//! (Lawson's scheme).

use num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsOptions, DiagnosticsRecord};
use crate::error::{FlowError, Result};
use crate::models::nonlinear::{nonlinear_unchecked, NonlinearForm, INPUT_DIVERGENCE_TOLERANCE};
use crate::spectral::checkpoint::write_field;
use crate::spectral::operators::{dealias_in_place, helmholtz_filter};
use crate::spectral::{transform_backward, ModelParams, SpectralVectorField};

/// Which right-hand side a run integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Vche,
    /// The VCHE with `alpha` forced to zero.
    Nse,
    /// Nonlinearity switched off: `v_t = nu Lap v`.
    Heat,
}

impl Model {
    /// Parameters the model actually integrates with.
    pub fn effective_params(&self, params: &ModelParams) -> ModelParams {
        match self {
            Model::Nse => ModelParams { alpha: 0.0, ..*params },
            _ => *params,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStepPolicy {
    Fixed(f64),
    Adaptive { cfl_number: f64, max_dt: Option<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// Every `sample_every` time units.
    Uniform,
    /// `per_decade` samples per decade of `1 + t`.
    Geometric { per_decade: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub step: TimeStepPolicy,
    pub t_end: f64,
    pub sample_every: f64,
    pub sampling: Sampling,
    pub checkpoint_every: Option<f64>,
    pub diagnostics: DiagnosticsOptions,
}

impl SolverConfig {
    pub fn fixed(params: ModelParams, dt: f64, t_end: f64, sample_every: f64) -> Self {
        Self {
            params,
            step: TimeStepPolicy::Fixed(dt),
            t_end,
            sample_every,
            sampling: Sampling::Uniform,
            checkpoint_every: None,
            diagnostics: DiagnosticsOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |msg: String| Err(FlowError::InvalidParameter(msg));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        match self.step {
            TimeStepPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("dt must be > 0, got {dt}"));
            }
            TimeStepPolicy::Adaptive { cfl_number, max_dt } => {
                if !(cfl_number > 0.0 && cfl_number <= 1.0) {
                    return bad(format!("cfl_number must lie in (0, 1], got {cfl_number}"));
                }
                if let Some(m) = max_dt {
                    if m.is_nan() || m <= 0.0 {
                        return bad(format!("max_dt must be > 0, got {m}"));
                    }
                }
            }
            _ => {}
        }
        match self.sampling {
            Sampling::Uniform if self.sample_every.is_nan() || self.sample_every <= 0.0 => {
                return bad(format!("sample_every must be > 0, got {}", self.sample_every));
            }
            Sampling::Geometric { per_decade } if per_decade.is_nan() || per_decade <= 0.0 => {
                return bad(format!("per_decade must be > 0, got {per_decade}"));
            }
            _ => {}
        }
        if let Some(c) = self.checkpoint_every {
            if c.is_nan() || c <= 0.0 {
                return bad(format!("checkpoint_every must be > 0, got {c}"));
            }
        }
        Ok(())
    }

    /// Sample times, starting at 0 and ending at `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        if self.t_end == 0.0 {
            return times;
        }
        let tol = 1e-9 * self.t_end;
        match self.sampling {
            Sampling::Uniform => {
                let mut k = 1u64;
                loop {
                    let t = k as f64 * self.sample_every;
                    if t >= self.t_end - tol {
                        break;
                    }
                    times.push(t);
                    k += 1;
                }
            }
            Sampling::Geometric { per_decade } => {
                let mut j = 1u64;
                loop {
                    let t = 10f64.powf(j as f64 / per_decade) - 1.0;
                    if t >= self.t_end - tol {
                        break;
                    }
                    times.push(t);
                    j += 1;
                }
            }
        }
        times.push(self.t_end);
        times
    }

    fn checkpoint_times(&self) -> Vec<f64> {
        let Some(every) = self.checkpoint_every else {
            return Vec::new();
        };
        let tol = 1e-9 * self.t_end.max(every);
        let mut out = Vec::new();
        let mut k = 1u64;
        loop {
            let t = k as f64 * every;
            if t > self.t_end + tol {
                break;
            }
            out.push(t.min(self.t_end));
            k += 1;
        }
        out
    }
}

/// `cfl_number * dx / max |u|`, capped at `cap` (returned as is for a
/// motionless field).
pub fn stable_dt(v: &SpectralVectorField, params: &ModelParams, cfl_number: f64, cap: f64) -> Result<f64> {
    let u = helmholtz_filter(v, params.alpha);
    let samples = transform_backward(&u)?;
    let mut umax: f64 = 0.0;
    for p in 0..v.grid().physical_len() {
        let s: f64 = samples.iter().map(|c| c[p] * c[p]).sum();
        umax = umax.max(s);
    }
    let umax = umax.sqrt();
    if umax == 0.0 {
        return Ok(cap);
    }
    Ok((cfl_number * v.grid().spacing() / umax).min(cap))
}

/// Holds the integrating factors for the most recent step size.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: ModelParams,
    model: Model,
    cached_h: f64,
    half: Vec<f64>,
    full: Vec<f64>,
}

impl Stepper {
    pub fn new(params: &ModelParams, model: Model) -> Self {
        Self {
            params: model.effective_params(params),
            model,
            cached_h: f64::NAN,
            half: Vec::new(),
            full: Vec::new(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn factors(&mut self, v: &SpectralVectorField, h: f64) {
        if self.cached_h.to_bits() == h.to_bits() && self.half.len() == v.grid().spectral_len() {
            return;
        }
        let nu = self.params.nu;
        self.half = v.grid().k_squared().iter().map(|k2| (-0.5 * nu * k2 * h).exp()).collect();
        self.full = self.half.iter().map(|e| e * e).collect();
        self.cached_h = h;
    }

    fn nonlinear(&self, v: &SpectralVectorField) -> SpectralVectorField {
        nonlinear_unchecked(v, &self.params, NonlinearForm::Rotational)
    }

    /// One step of size `h`. Blow-up is reported with `last_valid_time`
    /// 0, i.e. relative to the start of the step.
    pub fn step(&mut self, v: &SpectralVectorField, h: f64) -> Result<SpectralVectorField> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FlowError::InvalidParameter(format!("step size must be > 0, got {h}")));
        }
        self.factors(v, h);
        let (e1, e2) = (&self.half, &self.full);
        let grid = v.grid().clone();
        let vc = v.components();
        let out = if self.model == Model::Heat {
            vc.iter()
                .map(|c| c.iter().zip(e2).map(|(z, e)| z * e).collect())
                .collect()
        } else {
            let h6 = h / 6.0;
            let mut n = self.nonlinear(v).into_components();
            let mut acc: Vec<Vec<Complex64>> = vc
                .iter()
                .zip(&n)
                .map(|(vi, ni)| {
                    vi.iter().zip(ni).zip(e2).map(|((a, b), e)| (a + b * h6) * e).collect()
                })
                .collect();
            // stage 2 input: E (v + h/2 N(v))
            for (ni, vi) in n.iter_mut().zip(vc) {
                for ((b, a), e) in ni.iter_mut().zip(vi).zip(e1) {
                    *b = (a + *b * (0.5 * h)) * e;
                }
            }
            let stage = SpectralVectorField::from_parts(&grid, n, true);
            let mut n = self.nonlinear(&stage).into_components();
            drop(stage);
            for ((ai, ni), vi) in acc.iter_mut().zip(n.iter_mut()).zip(vc) {
                for (((a, b), x), e) in ai.iter_mut().zip(ni.iter_mut()).zip(vi).zip(e1) {
                    *a += *b * (2.0 * h6 * e);
                    *b = x * e + *b * (0.5 * h);
                }
            }
            let stage = SpectralVectorField::from_parts(&grid, n, true);
            let mut n = self.nonlinear(&stage).into_components();
            drop(stage);
            for ((ai, ni), vi) in acc.iter_mut().zip(n.iter_mut()).zip(vc) {
                for ((((a, b), x), e), ee) in ai.iter_mut().zip(ni.iter_mut()).zip(vi).zip(e1).zip(e2) {
                    *a += *b * (2.0 * h6 * e);
                    *b = x * ee + *b * (h * e);
                }
            }
            let stage = SpectralVectorField::from_parts(&grid, n, true);
            let n = self.nonlinear(&stage).into_components();
            drop(stage);
            for (ai, ni) in acc.iter_mut().zip(&n) {
                for (a, b) in ai.iter_mut().zip(ni) {
                    *a += b * h6;
                }
            }
            acc
        };
        let out = SpectralVectorField::from_parts(&grid, out, true);
        if !out.is_finite() {
            return Err(FlowError::BlowUp { last_valid_time: 0.0 });
        }
        Ok(out)
    }
}

/// One VCHE step.
pub fn if_rk4_step(v: &SpectralVectorField, dt: f64, params: &ModelParams) -> Result<SpectralVectorField> {
    Stepper::new(params, Model::Vche).step(v, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Callbacks during a run; all default to no-ops.
pub trait Observer {
    fn on_sample(&mut self, _record: &DiagnosticsRecord, _state: &SpectralVectorField) -> Result<Control> {
        Ok(Control::Continue)
    }

    fn on_checkpoint(&mut self, _t: f64, _state: &SpectralVectorField) -> Result<()> {
        Ok(())
    }

    /// Called after every accepted step with the new time and state.
    fn on_step(&mut self, _t: f64, _state: &SpectralVectorField) -> Result<Control> {
        Ok(Control::Continue)
    }
}

/// Collects samples and checkpoint states in memory.
#[derive(Default)]
pub struct Collector {
    pub records: Vec<DiagnosticsRecord>,
    pub checkpoints: Vec<(f64, SpectralVectorField)>,
}

impl Observer for Collector {
    fn on_sample(&mut self, record: &DiagnosticsRecord, _state: &SpectralVectorField) -> Result<Control> {
        self.records.push(record.clone());
        Ok(Control::Continue)
    }

    fn on_checkpoint(&mut self, t: f64, state: &SpectralVectorField) -> Result<()> {
        self.checkpoints.push((t, state.clone()));
        Ok(())
    }
}

/// Writes checkpoints as `<prefix>_<index>.bin` in a directory.
pub struct CheckpointWriter {
    pub dir: std::path::PathBuf,
    pub prefix: String,
    pub written: Vec<(f64, std::path::PathBuf)>,
}

impl CheckpointWriter {
    pub fn write(&mut self, t: f64, state: &SpectralVectorField) -> Result<()> {
        let path = self.dir.join(format!("{}_{:04}.bin", self.prefix, self.written.len()));
        let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        write_field(state, file)?;
        self.written.push((t, path));
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub checkpoints: Vec<(f64, SpectralVectorField)>,
    pub final_state: SpectralVectorField,
    pub final_time: f64,
    pub steps: usize,
    pub stopped_early: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

/// Outcome of [`run_observed`]; samples go to the observer.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: SpectralVectorField,
    pub final_time: f64,
    pub steps: usize,
    pub stopped_early: bool,
}

/// Diagnostics with the time derivative taken from the model's own RHS.
pub fn model_record(
    v: &SpectralVectorField,
    params: &ModelParams,
    model: Model,
    t: f64,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsRecord> {
    let params = model.effective_params(params);
    let wants_dt = opts.time_derivative;
    let inner = DiagnosticsOptions { time_derivative: false, ..opts.clone() };
    let mut rec = diagnostics::record(v, &params, t, &inner)?;
    if wants_dt {
        rec.dt_v_norm = match model {
            Model::Heat => {
                let nu2 = params.nu * params.nu;
                v.weighted_norm_sq(|k2| nu2 * k2 * k2)
            }
            _ => diagnostics::time_derivative_norm(v, &params, 0)?,
        };
    }
    Ok(rec)
}

/// Runs `model` from `v0` and keeps every sample in memory.
pub fn run(v0: &SpectralVectorField, config: &SolverConfig, model: Model) -> Result<Trajectory> {
    let mut c = Collector::default();
    let s = run_observed(v0, config, model, &mut c)?;
    Ok(Trajectory {
        records: c.records,
        checkpoints: c.checkpoints,
        final_state: s.final_state,
        final_time: s.final_time,
        steps: s.steps,
        stopped_early: s.stopped_early,
    })
}

/// Runs `model` from `v0`, streaming samples, checkpoints and steps to
/// `observer`. The initial state is first truncated to the retained
/// (dealiased) modes.
pub fn run_observed(
    v0: &SpectralVectorField,
    config: &SolverConfig,
    model: Model,
    observer: &mut dyn Observer,
) -> Result<RunSummary> {
    config.validate()?;
    if !v0.is_divergence_free() {
        let defect = v0.divergence_defect();
        if defect > INPUT_DIVERGENCE_TOLERANCE {
            return Err(FlowError::NotDivergenceFree(defect));
        }
    }
    let mut v = v0.clone();
    dealias_in_place(&mut v, config.params.dealias_fraction);
    v.set_divergence_free_unchecked(true);

    let mut stepper = Stepper::new(&config.params, model);
    let samples = config.sample_times();
    let checkpoints = config.checkpoint_times();
    let mut targets: Vec<(f64, bool, bool)> = samples.iter().map(|&t| (t, true, false)).collect();
    for &t in &checkpoints {
        match targets.iter_mut().find(|x| (x.0 - t).abs() <= 1e-9 * t.max(1.0)) {
            Some(x) => x.2 = true,
            None => targets.push((t, false, true)),
        }
    }
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut t = 0.0;
    let mut steps = 0usize;
    for (target, is_sample, is_checkpoint) in targets {
        while t < target {
            let remaining = target - t;
            let h = match config.step {
                // the integrating factor is exact without a nonlinearity
                _ if model == Model::Heat => remaining,
                TimeStepPolicy::Fixed(dt) => remaining / (remaining / dt - 1e-9).ceil().max(1.0),
                TimeStepPolicy::Adaptive { cfl_number, max_dt } => {
                    let cap = max_dt.map_or(remaining, |m| m.min(remaining));
                    let h = stable_dt(&v, stepper.params(), cfl_number, cap)?;
                    // avoid a sliver step just before the target
                    if remaining - h < 1e-6 * h { remaining } else { h }
                }
            };
            let last_valid_time = t;
            v = stepper.step(&v, h).map_err(|e| match e {
                FlowError::BlowUp { .. } => FlowError::BlowUp { last_valid_time },
                other => other,
            })?;
            steps += 1;
            t = if remaining - h <= 1e-12 * target.max(1.0) { target } else { t + h };
            if observer.on_step(t, &v)? == Control::Stop {
                return Ok(RunSummary { final_state: v, final_time: t, steps, stopped_early: true });
            }
        }
        if is_checkpoint {
            observer.on_checkpoint(target, &v)?;
        }
        if is_sample {
            let rec = model_record(&v, &config.params, model, target, &config.diagnostics)?;
            if observer.on_sample(&rec, &v)? == Control::Stop {
                return Ok(RunSummary { final_state: v, final_time: t, steps, stopped_early: true });
            }
        }
    }
    Ok(RunSummary { final_state: v, final_time: t, steps, stopped_early: false })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::models::initial::{generate_initial_data, taylor_green, InitialDataSpec, InitialKind};
    use crate::spectral::operators::helmholtz_apply;
    use crate::spectral::Grid;

    fn light_opts() -> DiagnosticsOptions {
        DiagnosticsOptions { time_derivative: false, orthogonality: false, ..Default::default() }
    }

    #[test]
    fn heat_step_is_exact() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); g.spectral_len()]; 2];
        // mode (1, 0): row 1, column 0; divergence free in component 1
        comps[1][g.half_len()] = Complex64::new(0.7, 0.2);
        comps[1][(g.points_per_dim() - 1) * g.half_len()] = Complex64::new(0.7, -0.2);
        let v = SpectralVectorField::from_components(&g, comps, true).unwrap();
        let p = ModelParams::new(1.0, 0.0).unwrap();
        for dt in [0.01, 0.3, 2.0] {
            let out = Stepper::new(&p, Model::Heat).step(&v, dt).unwrap();
            let z = out.component(1)[g.half_len()];
            let expected = Complex64::new(0.7, 0.2) * (-dt).exp();
            assert!((z - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn small_amplitude_single_mode_follows_heat_multiplier() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); g.spectral_len()]; 2];
        comps[0][2] = Complex64::new(1e-8, 0.0);
        let v = SpectralVectorField::from_components(&g, comps, true).unwrap();
        let p = ModelParams::new(0.3, 0.0).unwrap();
        let out = if_rk4_step(&v, 0.1, &p).unwrap();
        let expected = 1e-8 * (-0.3f64 * 4.0 * 0.1).exp();
        assert!((out.component(0)[2].re - expected).abs() < 1e-15 * 1e-8 * 1e3);
    }

    #[test]
    fn stable_dt_formula_and_cap() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let p = ModelParams::new(0.1, 1.0).unwrap();
        let z = crate::spectral::leray_project(&SpectralVectorField::zeros(&g));
        assert_eq!(stable_dt(&z, &p, 0.5, 3.0).unwrap(), 3.0);
        let v = taylor_green(1.0, &g).unwrap();
        let dt = stable_dt(&v, &p, 0.5, 100.0).unwrap();
        // max |u| = 1/3 after filtering the unit cell with alpha = 1
        let expected = 0.5 * g.spacing() * 3.0;
        assert!((dt - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn sample_schedules() {
        let p = ModelParams::new(0.1, 0.0).unwrap();
        let c = SolverConfig::fixed(p, 0.1, 1.0, 0.25);
        assert_eq!(c.sample_times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let mut c = SolverConfig::fixed(p, 0.1, 99.0, 1.0);
        c.sampling = Sampling::Geometric { per_decade: 2.0 };
        let t = c.sample_times();
        assert_eq!(t.len(), 5);
        assert!((t[2] - 9.0).abs() < 1e-12 && t[4] == 99.0);
        let c = SolverConfig::fixed(p, 0.1, 0.0, 1.0);
        assert_eq!(c.sample_times(), vec![0.0]);
        assert!(SolverConfig::fixed(p, -1.0, 1.0, 1.0).validate().is_err());
    }

    #[test]
    fn zero_horizon_gives_single_record() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let v = taylor_green(1.0, &g).unwrap();
        let c = SolverConfig::fixed(ModelParams::new(0.1, 0.0).unwrap(), 0.01, 0.0, 1.0);
        let tr = run(&v, &c, Model::Vche).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.steps, 0);
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        for alpha in [0.0, 1.0] {
            let p = ModelParams::new(0.1, alpha).unwrap();
            let v = helmholtz_apply(&taylor_green(1.0, &g).unwrap(), alpha);
            let mut c = SolverConfig::fixed(p, 0.01, 1.0, 0.5);
            c.diagnostics = light_opts();
            let tr = run(&v, &c, Model::Vche).unwrap();
            assert_eq!(tr.times(), vec![0.0, 0.5, 1.0]);
            assert_eq!(tr.steps, 100);
            let e0 = tr.records[0].filtered_energy;
            let e1 = tr.records[2].filtered_energy;
            assert!((e1 - e0 * (-0.4f64).exp()).abs() < 1e-8 * e0);
        }
    }

    #[test]
    fn runs_are_deterministic_and_checkpoint() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1.0);
        spec.band = (1.0, 6.0);
        spec.seed = 3;
        let v = generate_initial_data(&spec, &g).unwrap();
        let p = ModelParams::new(0.02, 0.3).unwrap();
        let mut c = SolverConfig::fixed(p, 0.01, 0.2, 0.05);
        c.step = TimeStepPolicy::Adaptive { cfl_number: 0.5, max_dt: Some(0.02) };
        c.checkpoint_every = Some(0.1);
        let a = run(&v, &c, Model::Vche).unwrap();
        let b = run(&v, &c, Model::Vche).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.checkpoints.len(), 2);
        assert_eq!(a.final_time, 0.2);
        let mut prev = f64::INFINITY;
        for r in &a.records {
            assert!(r.filtered_energy <= prev + 1e-10 * a.records[0].filtered_energy);
            prev = r.filtered_energy;
        }
    }

    #[test]
    fn blow_up_is_reported_with_last_valid_time() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let mut spec = InitialDataSpec::new(InitialKind::BandRandom, 1e3);
        spec.band = (1.0, 4.0);
        let v = generate_initial_data(&spec, &g).unwrap();
        let p = ModelParams::new(1e-4, 0.0).unwrap();
        let c = SolverConfig::fixed(p, 0.5, 50.0, 50.0);
        match run(&v, &c, Model::Vche) {
            Err(FlowError::BlowUp { last_valid_time }) => assert!(last_valid_time >= 0.0),
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.final_time)),
        }
    }

    #[test]
    fn compressible_initial_state_is_rejected() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let s: Vec<Vec<f64>> = (0..2)
            .map(|c| (0..g.physical_len()).map(|i| ((i * 13 + c) % 5) as f64).collect())
            .collect();
        let bad = crate::spectral::transform_forward(&s, &g).unwrap();
        let c = SolverConfig::fixed(ModelParams::new(0.1, 0.0).unwrap(), 0.01, 0.1, 0.1);
        assert!(matches!(run(&bad, &c, Model::Vche), Err(FlowError::NotDivergenceFree(_))));
    }
}
