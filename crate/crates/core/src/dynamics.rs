//! Coupling schedules and Schrodinger propagation inside one excitation
//! subspace (`hbar = 1`, rotating frame).

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{SubspaceBasis, SubspaceSpec};
use crate::darkstates::two_mode_mixing_angle;
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_blocks, channels, Channel, Frame, ModelParams};

pub type State = DVector<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `g = G (cos theta, sin theta)` with `theta = (pi/2) smoothstep(t/T)`.
    ThetaRamp,
    /// Two `sin^2` pulses, `g1` first (counterintuitive for `|g,0,n> -> |g,n,0>`).
    Sin2Overlap,
    Constant,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta_ramp" => Ok(Self::ThetaRamp),
            "sin2_overlap" => Ok(Self::Sin2Overlap),
            "constant" => Ok(Self::Constant),
            other => Err(Error::InvalidSchedule(format!("unknown schedule kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseSchedule {
    pub kind: ScheduleKind,
    pub duration: f64,
    /// Peak magnitude `G`; unused by `Constant`.
    pub magnitude: f64,
    /// Fixed couplings for `Constant`.
    pub couplings: Vec<f64>,
    /// Upper bound on `||g(t)||`.
    pub g_max: f64,
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

fn sin2_pulse(t: f64, start: f64, width: f64) -> f64 {
    if t < start || t > start + width {
        return 0.0;
    }
    let s = (std::f64::consts::PI * (t - start) / width).sin();
    s * s
}

impl PulseSchedule {
    pub fn modes(&self) -> usize {
        match self.kind {
            ScheduleKind::Constant => self.couplings.len(),
            _ => 2,
        }
    }

    pub fn couplings_at(&self, t: f64) -> Vec<f64> {
        match self.kind {
            ScheduleKind::ThetaRamp => {
                let (s, c) = self.theta_ramp(t).sin_cos();
                vec![self.magnitude * c, self.magnitude * s]
            }
            ScheduleKind::Sin2Overlap => {
                let w = 2.0 * self.duration / 3.0;
                vec![
                    self.magnitude * sin2_pulse(t, 0.0, w),
                    self.magnitude * sin2_pulse(t, self.duration / 3.0, w),
                ]
            }
            ScheduleKind::Constant => self.couplings.clone(),
        }
    }

    fn theta_ramp(&self, t: f64) -> f64 {
        FRAC_PI_2 * smoothstep(t / self.duration)
    }

    /// Mixing angle `tan theta = g2 / g1` of a two-mode schedule. Where both
    /// couplings vanish the angle is taken from the nearer end of the run.
    pub fn mixing_angle(&self, t: f64) -> Option<f64> {
        if self.modes() != 2 {
            return None;
        }
        if self.kind == ScheduleKind::ThetaRamp {
            return Some(self.theta_ramp(t));
        }
        let g = self.couplings_at(t);
        if g[0] == 0.0 && g[1] == 0.0 {
            return Some(if t <= self.duration / 2.0 { 0.0 } else { FRAC_PI_2 });
        }
        Some(g[1].atan2(g[0]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleParams {
    pub duration: f64,
    pub magnitude: f64,
    pub couplings: Vec<f64>,
}

pub fn make_schedule(kind: ScheduleKind, params: &ScheduleParams) -> Result<PulseSchedule> {
    if !(params.duration.is_finite() && params.duration > 0.0) {
        return Err(Error::InvalidSchedule(format!("duration {} must be positive", params.duration)));
    }
    let (magnitude, couplings, g_max) = match kind {
        ScheduleKind::Constant => {
            if params.couplings.is_empty() || params.couplings.iter().any(|g| !g.is_finite()) {
                return Err(Error::InvalidSchedule("constant schedule needs finite couplings".into()));
            }
            let norm = params.couplings.iter().map(|g| g * g).sum::<f64>().sqrt();
            (norm, params.couplings.clone(), norm)
        }
        ScheduleKind::ThetaRamp | ScheduleKind::Sin2Overlap => {
            if !(params.magnitude.is_finite() && params.magnitude >= 0.0) {
                return Err(Error::InvalidSchedule(format!("magnitude {} must be non-negative", params.magnitude)));
            }
            let bound = if kind == ScheduleKind::ThetaRamp { 1.0 } else { 2f64.sqrt() };
            (params.magnitude, Vec::new(), params.magnitude * bound)
        }
    };
    Ok(PulseSchedule { kind, duration: params.duration, magnitude, couplings, g_max })
}

/* Propagation ****************************************************************/

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    /// Starting step; derived from a bound on `||H||` when absent.
    pub initial_dt: Option<f64>,
    /// Maximum `| ||psi(t)|| - 1 |` accepted over the run.
    pub drift_budget: f64,
    pub min_dt: f64,
    /// Stored samples after the initial state.
    pub samples: usize,
    /// Halve the step until the drift budget is met.
    pub adaptive: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { initial_dt: None, drift_budget: 1e-8, min_dt: 1e-6, samples: 200, adaptive: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub spec: SubspaceSpec,
    pub times: Vec<f64>,
    /// Full-subspace amplitudes, upper sector first.
    pub states: Vec<State>,
    pub dt: f64,
    pub steps: usize,
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }
}

struct Generator {
    diag: Vec<f64>,
    channels: Vec<Channel>,
    upper: usize,
}

impl Generator {
    fn new(basis: &SubspaceBasis, params: &ModelParams) -> Result<Self> {
        let bh = assemble_blocks(basis, params, Frame::Rotating)?;
        let mut diag = bh.upper.clone();
        diag.extend_from_slice(&bh.lower);
        Ok(Self { diag, channels: channels(basis), upper: basis.upper_len() })
    }

    /// `out = -i H(g) psi`.
    fn apply(&self, g: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
        for (o, (d, p)) in out.iter_mut().zip(self.diag.iter().zip(psi)) {
            *o = Complex64::new(p.im * d, -p.re * d);
        }
        for ch in &self.channels {
            let a = g[ch.mode] * ch.factor;
            let l = self.upper + ch.lower;
            let (pu, pl) = (psi[ch.upper], psi[l]);
            out[ch.upper] += Complex64::new(pl.im * a, -pl.re * a);
            out[l] += Complex64::new(pu.im * a, -pu.re * a);
        }
    }

    /// Gershgorin bound on `||H||` for couplings of magnitude at most `g_max`.
    fn norm_bound(&self, g_max: f64) -> f64 {
        let mut rows = self.diag.iter().map(|d| d.abs()).collect::<Vec<_>>();
        for ch in &self.channels {
            rows[ch.upper] += g_max * ch.factor;
            rows[self.upper + ch.lower] += g_max * ch.factor;
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rk4_run(
    gen: &Generator,
    schedule: &PulseSchedule,
    psi0: &State,
    steps: usize,
    samples: usize,
) -> (Vec<f64>, Vec<State>, f64) {
    let dim = psi0.len();
    let dt = schedule.duration / steps as f64;
    let stride = steps / samples;
    let n0 = psi0.norm();
    let mut psi: Vec<Complex64> = psi0.iter().copied().collect();
    let mut k = [vec![Complex64::default(); dim], vec![Complex64::default(); dim], vec![Complex64::default(); dim], vec![Complex64::default(); dim]];
    let mut tmp = vec![Complex64::default(); dim];
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut drift = 0.0f64;
    for step in 0..steps {
        let t = step as f64 * dt;
        let g0 = schedule.couplings_at(t);
        let gm = schedule.couplings_at(t + 0.5 * dt);
        let g1 = schedule.couplings_at(t + dt);
        gen.apply(&g0, &psi, &mut k[0]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[0][i] * (0.5 * dt);
        }
        gen.apply(&gm, &tmp, &mut k[1]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[1][i] * (0.5 * dt);
        }
        gen.apply(&gm, &tmp, &mut k[2]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[2][i] * dt;
        }
        gen.apply(&g1, &tmp, &mut k[3]);
        for i in 0..dim {
            psi[i] += (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (dt / 6.0);
        }
        drift = drift.max((norm(&psi) - n0).abs());
        if (step + 1) % stride == 0 {
            times.push((step + 1) as f64 * dt);
            states.push(DVector::from_column_slice(&psi));
        }
    }
    (times, states, drift)
}

/// Fixed-step RK4 from `psi0`; couplings come from the schedule, detunings
/// from `params`.
pub fn propagate(
    basis: &SubspaceBasis,
    params: &ModelParams,
    schedule: &PulseSchedule,
    psi0: &State,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    if psi0.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!("state has {} amplitudes, subspace {}", psi0.len(), basis.len())));
    }
    if schedule.modes() != basis.modes() {
        return Err(Error::DimensionMismatch(format!(
            "schedule drives {} modes, basis has {}",
            schedule.modes(),
            basis.modes()
        )));
    }
    if psi0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    if (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSchedule(format!("initial state has norm {}", psi0.norm())));
    }
    let gen = Generator::new(basis, params)?;
    let samples = options.samples.max(1);
    let dt0 = options.initial_dt.unwrap_or_else(|| 0.1 / gen.norm_bound(schedule.g_max).max(1e-12));
    let blocks = (schedule.duration / (dt0 * samples as f64)).ceil().max(1.0) as usize;
    let mut steps = blocks * samples;
    loop {
        let dt = schedule.duration / steps as f64;
        let (times, states, drift) = rk4_run(&gen, schedule, psi0, steps, samples);
        if drift <= options.drift_budget || !options.adaptive {
            return Ok(Trajectory { spec: basis.spec(), times, states, dt, steps, norm_drift: drift });
        }
        if dt / 2.0 < options.min_dt {
            return Err(Error::DriftBudget { drift, budget: options.drift_budget, dt });
        }
        steps *= 2;
    }
}

/// `exp(-i H t) psi` through the eigendecomposition of a real symmetric `H`.
pub fn exact_propagate(h: &DMatrix<f64>, psi0: &State, t: f64) -> State {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let re: DVector<f64> = psi0.map(|z| z.re);
    let im: DVector<f64> = psi0.map(|z| z.im);
    let (cr, ci) = (v.transpose() * re, v.transpose() * im);
    let mut out = State::zeros(psi0.len());
    for (k, e) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -e * t);
        let c = Complex64::new(cr[k], ci[k]) * phase;
        for i in 0..out.len() {
            out[i] += c * v[(i, k)];
        }
    }
    out
}

/// Piecewise-constant exact propagation with couplings sampled at interval
/// midpoints.
pub fn exact_piecewise(
    basis: &SubspaceBasis,
    params: &ModelParams,
    schedule: &PulseSchedule,
    psi0: &State,
    intervals: usize,
) -> Result<State> {
    let dt = schedule.duration / intervals as f64;
    let mut psi = psi0.clone();
    for k in 0..intervals {
        let g = schedule.couplings_at((k as f64 + 0.5) * dt);
        let h = assemble_blocks(basis, &params.with_couplings(g)?, Frame::Rotating)?.full_matrix();
        psi = exact_propagate(&h, &psi, dt);
    }
    Ok(psi)
}

/// Basis vector for a lower state given by its occupations.
pub fn lower_state(basis: &SubspaceBasis, occupations: &[u32]) -> Result<State> {
    let pos = basis.lower().position(occupations).ok_or_else(|| Error::StateNotInSubspace {
        state: format!("g:{occupations:?}"),
        modes: basis.modes(),
        excitations: basis.excitations(),
    })?;
    let mut psi = State::zeros(basis.len());
    psi[basis.upper_len() + pos] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// Embed a real lower-sector vector into the full subspace.
pub fn embed_lower(basis: &SubspaceBasis, v: &DVector<f64>) -> State {
    let mut psi = State::zeros(basis.len());
    for (i, x) in v.iter().enumerate() {
        psi[basis.upper_len() + i] = Complex64::new(*x, 0.0);
    }
    psi
}

/// `|<D(theta(t)) | psi(t)>|^2` along a two-mode trajectory.
pub fn instantaneous_dark_overlap(
    traj: &Trajectory,
    basis: &SubspaceBasis,
    schedule: &PulseSchedule,
) -> Result<Vec<f64>> {
    if basis.modes() != 2 {
        return Err(Error::InvalidSpec("instantaneous dark overlap is defined for two modes".into()));
    }
    let n = basis.excitations();
    let nu = basis.upper_len();
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, psi)| {
            let theta = schedule.mixing_angle(*t).expect("two-mode schedule");
            let d = two_mode_mixing_angle(n, theta)?;
            let amp: Complex64 = d.iter().enumerate().map(|(i, c)| psi[nu + i] * *c).sum();
            Ok(amp.norm_sqr())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StirapResult {
    pub fidelity: f64,
    pub min_dark_overlap: f64,
    pub dark_overlap: Vec<f64>,
    pub trajectory: Trajectory,
}

/// Transfer `|g,0,n> -> |g,n,0>` in the two-mode model at common detuning
/// `delta`; returns `|<g,n,0|psi(T)>|^2`.
pub fn stirap_fidelity(
    n: u32,
    magnitude: f64,
    kind: ScheduleKind,
    duration: f64,
    delta: f64,
    options: &IntegratorOptions,
) -> Result<StirapResult> {
    if kind == ScheduleKind::Constant {
        return Err(Error::InvalidSchedule("transfer needs a time-dependent schedule".into()));
    }
    let basis = SubspaceBasis::new(SubspaceSpec::new(2, n)?)?;
    let schedule = make_schedule(kind, &ScheduleParams { duration, magnitude, couplings: Vec::new() })?;
    let params = ModelParams::with_detunings(0.0, &[delta, delta], vec![magnitude, 0.0])?;
    let psi0 = lower_state(&basis, &[0, n])?;
    let trajectory = propagate(&basis, &params, &schedule, &psi0, options)?;
    let target = basis.upper_len() + basis.lower().position(&[n, 0]).expect("target state exists");
    let fidelity = trajectory.last()[target].norm_sqr();
    let dark_overlap = instantaneous_dark_overlap(&trajectory, &basis, &schedule)?;
    let min_dark_overlap = dark_overlap.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StirapResult { fidelity, min_dark_overlap, dark_overlap, trajectory })
}
