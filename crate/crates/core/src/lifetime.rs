//! Coherent-state lifetime from the Liouvillian restricted to the diagonal
//! coherences |ψ_m⁺⟩⟨ψ_m⁻| and |ψ_m⁻⟩⟨ψ_m⁺| of the parity-paired spectrum,
//! together with the sweep drivers built on it.

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::circuit::{effective_params, CircuitParams, EffectiveParams, Topology};
use crate::dissipation::{dephasing_term, model_for, BathSpec, DissipatorSet, DissipatorTerm};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, Operator};
use crate::hamiltonian::{build_kerr, KerrCoefficients};
use crate::spectra::paired_spectrum;

/// Reported lifetimes are capped here (μs).
pub const T_ALPHA_CAP: f64 = 1e9;

#[derive(Clone, Debug)]
pub struct CoherenceBlock {
    pub pairs: usize,
    /// δ_m = E_m⁺ − E_m⁻.
    pub splittings: Vec<f64>,
    /// 2M×2M generator; entries 0..M are |ψ_m⁺⟩⟨ψ_m⁻|, entries M..2M are
    /// |ψ_m⁻⟩⟨ψ_m⁺|.
    pub matrix: Mat<c64>,
    /// Largest Fock-tail population among the paired eigenstates.
    pub tail: f64,
}

/// Projects the Lindblad generator onto the diagonal coherences. Every channel
/// enters through ⟨a|O|c⟩⟨e|O†|b⟩ − ½⟨a|O†O|c⟩δ_eb − ½δ_ac⟨e|O†O|b⟩ for target
/// |a⟩⟨b| and source |c⟩⟨e|, which covers even jumps as well as odd ones.
pub fn coherence_block(h: &Operator, terms: &[DissipatorTerm], pairs: usize) -> Result<CoherenceBlock> {
    if pairs == 0 {
        return Err(Error::Size("coherence block needs at least one pair".into()));
    }
    let spec = paired_spectrum(h, pairs)?;
    let d = h.dim();
    let states: Vec<&crate::fock::StateVector> = spec.even_states.iter().chain(&spec.odd_states).collect();
    let n = states.len();
    let basis = Mat::from_fn(d, n, |i, k| states[k].amps()[i]);
    let tail = states.iter().map(|s| s.tail_population()).fold(0.0, f64::max);

    // Target/source index pairs into `states`: plus-minus then minus-plus.
    let index: Vec<(usize, usize)> = (0..pairs).map(|m| (m, pairs + m)).chain((0..pairs).map(|m| (pairs + m, m))).collect();
    let splittings: Vec<f64> = spec.pairs.iter().map(|p| p.splitting()).collect();
    let mut block = Mat::<c64>::zeros(2 * pairs, 2 * pairs);
    for m in 0..pairs {
        block[(m, m)] = c64::new(0.0, -splittings[m]);
        block[(pairs + m, pairs + m)] = c64::new(0.0, splittings[m]);
    }
    for t in terms {
        if t.rate == 0.0 {
            continue;
        }
        let o = basis.adjoint() * t.jump.mat() * &basis;
        let od = t.jump.mat().adjoint() * t.jump.mat();
        let p = basis.adjoint() * od * &basis;
        for (r, &(a, b)) in index.iter().enumerate() {
            for (s, &(c, e)) in index.iter().enumerate() {
                let mut v = o[(a, c)] * o[(b, e)].conj();
                if e == b {
                    v -= p[(a, c)] * 0.5;
                }
                if a == c {
                    v -= p[(e, b)] * 0.5;
                }
                block[(r, s)] += v * t.rate;
            }
        }
    }
    Ok(CoherenceBlock { pairs, splittings, matrix: block, tail })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMode {
    pub lambda: c64,
    /// −1/Re λ capped at `T_ALPHA_CAP`, μs.
    pub t_alpha: f64,
    /// Weight of the mode on the ground-pair coherences.
    pub ground_weight: f64,
}

fn capped_lifetime(re: f64) -> f64 {
    if re >= -1.0 / T_ALPHA_CAP {
        T_ALPHA_CAP
    } else {
        -1.0 / re
    }
}

/// Slowest mode of the block whose weight on the m = 0 coherences exceeds 0.5.
pub fn t_alpha(block: &CoherenceBlock) -> Result<BlockMode> {
    let eig = block.matrix.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let m = block.pairs;
    let mut best: Option<BlockMode> = None;
    for k in 0..2 * m {
        let col = u.col(k);
        let total: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        let w = (col[0].norm_sqr() + col[m].norm_sqr()) / total;
        if w <= 0.5 {
            continue;
        }
        let lambda = s[k];
        if best.is_none_or(|b| lambda.re > b.lambda.re) {
            best = Some(BlockMode { lambda, t_alpha: capped_lifetime(lambda.re), ground_weight: w });
        }
    }
    best.ok_or_else(|| Error::ModeIdentification { spectrum: s.iter().copied().collect() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifetimeOptions {
    pub initial_pairs: usize,
    pub max_pairs: usize,
    /// Relative change in T_α accepted when adding two pairs.
    pub pair_tolerance: f64,
    /// Fixed truncation; `None` starts from max(30, 8ε₂/K).
    pub dim: Option<usize>,
    pub max_dim: usize,
    pub dim_step: usize,
    /// Largest tolerated Fock-tail population of the paired eigenstates.
    pub tail_tolerance: f64,
}

impl Default for LifetimeOptions {
    fn default() -> Self {
        Self {
            initial_pairs: 4,
            max_pairs: 40,
            pair_tolerance: 0.01,
            dim: None,
            max_dim: 200,
            dim_step: 10,
            tail_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifetimeEstimate {
    pub t_alpha: f64,
    pub lambda: c64,
    pub pairs: usize,
    pub dim: usize,
    /// Both the pair count and the truncation met their tolerances.
    pub converged: bool,
}

/// Starting truncation for a cat of size ε₂/K.
pub fn default_dim(eps2_over_k: f64) -> usize {
    30usize.max((8.0 * eps2_over_k.abs()).ceil() as usize)
}

/// Grows the number of pairs by two until T_α settles, then grows the
/// truncation until the paired states are well inside the Fock space.
pub fn adaptive_t_alpha<F>(start_dim: usize, opts: &LifetimeOptions, build: F) -> Result<LifetimeEstimate>
where
    F: Fn(FockSpace) -> Result<(Operator, Vec<DissipatorTerm>)>,
{
    let mut dim = opts.dim.unwrap_or(start_dim).max(4);
    loop {
        let space = FockSpace::new(dim)?;
        let (h, terms) = build(space)?;
        let limit = opts.max_pairs.min(dim / 2);
        let mut pairs = opts.initial_pairs.clamp(1, limit);
        let mut block = coherence_block(&h, &terms, pairs)?;
        let mut mode = t_alpha(&block)?;
        let mut pairs_ok = false;
        while pairs + 2 <= limit {
            let next_block = coherence_block(&h, &terms, pairs + 2)?;
            let next = t_alpha(&next_block)?;
            let change = (next.t_alpha - mode.t_alpha).abs() / mode.t_alpha;
            pairs += 2;
            block = next_block;
            mode = next;
            if change < opts.pair_tolerance {
                pairs_ok = true;
                break;
            }
        }
        let tail_ok = block.tail < opts.tail_tolerance;
        if tail_ok || opts.dim.is_some() || dim >= opts.max_dim {
            return Ok(LifetimeEstimate { t_alpha: mode.t_alpha, lambda: mode.lambda, pairs, dim, converged: pairs_ok && tail_ok });
        }
        dim = (dim + opts.dim_step).min(opts.max_dim);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Target ε₂/K; the modulation depth is solved per point.
    Eps2Ratio,
    /// Target Δ/K at fixed ε₂/K.
    DetuningRatio,
    /// δφ directly.
    ModulationDepth,
    /// γ_φ/K at fixed ε₂/K.
    GammaPhi,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eps2Ratio => "eps2_over_K",
            SweepAxis::DetuningRatio => "delta_over_K",
            SweepAxis::ModulationDepth => "delta_phi",
            SweepAxis::GammaPhi => "gamma_phi_over_K",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [SweepAxis::Eps2Ratio, SweepAxis::DetuningRatio, SweepAxis::ModulationDepth, SweepAxis::GammaPhi]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

/// Everything fixed across a lifetime sweep. The circuit's own drive frequency
/// only sets the bath frequencies; the static detuning is `detuning_ratio`·K,
/// as if the drive frequency were retuned at every point.
#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeConfig {
    pub circuit: CircuitParams,
    pub bath: BathSpec,
    pub set: DissipatorSet,
    pub eps2_ratio: f64,
    pub detuning_ratio: f64,
    pub gamma_phi_ratio: f64,
    /// Add −2Λε₂/K to the detuning.
    pub compensate: bool,
    /// Drop the Λ term from the Hamiltonian (reference curves).
    pub suppress_lambda: bool,
    /// Keep the modulation-dependent part of the detuning instead of holding
    /// Δ at its target.
    pub track_drive_shift: bool,
    pub options: LifetimeOptions,
}

impl LifetimeConfig {
    pub fn new(circuit: CircuitParams, bath: BathSpec, set: DissipatorSet) -> Self {
        Self {
            circuit,
            bath,
            set,
            eps2_ratio: 0.0,
            detuning_ratio: 0.0,
            gamma_phi_ratio: 0.0,
            compensate: false,
            suppress_lambda: false,
            track_drive_shift: false,
            options: LifetimeOptions::default(),
        }
    }

    fn effective_at(&self, delta_phi: f64, space: FockSpace) -> Result<(EffectiveParams, Vec<DissipatorTerm>)> {
        let c = CircuitParams { delta_phi, ..self.circuit.clone() };
        model_for(self.set, &c, &self.bath, space)
    }

    /// Kerr constant of the circuit, rad/μs.
    pub fn kerr(&self) -> Result<f64> {
        Ok(effective_params(&CircuitParams { delta_phi: 0.0, ..self.circuit.clone() })?.kerr)
    }

    /// |ε₂| in units of K at modulation depth `delta_phi`.
    pub fn eps2_ratio_at(&self, delta_phi: f64) -> Result<f64> {
        let probe = FockSpace::new(2)?;
        let (p, _) = self.effective_at(delta_phi, probe)?;
        Ok(p.eps2.abs() / p.kerr)
    }

    /// Modulation depth producing |ε₂|/K = `target`, by bisection.
    pub fn depth_for_ratio(&self, target: f64) -> Result<f64> {
        if target == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, 1.5);
        if self.eps2_ratio_at(hi)? < target {
            return Err(Error::Domain(format!("ε₂/K = {target} not reachable with this circuit")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eps2_ratio_at(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Static coefficients and channels at one operating point.
    pub fn model(&self, delta_phi: f64, detuning_ratio: f64, gamma_phi_ratio: f64, space: FockSpace) -> Result<(Operator, Vec<DissipatorTerm>)> {
        let (p, mut terms) = self.effective_at(delta_phi, space)?;
        let mut coeffs = KerrCoefficients::from_params(&p);
        coeffs.delta = detuning_ratio * p.kerr;
        if self.track_drive_shift {
            let (p0, _) = self.effective_at(0.0, FockSpace::new(2)?)?;
            coeffs.delta += p.delta - p0.delta;
        }
        if self.compensate {
            coeffs.delta += -2.0 * p.lambda * p.eps2 / p.kerr;
        }
        if self.suppress_lambda {
            coeffs.lambda = 0.0;
        }
        if gamma_phi_ratio > 0.0 {
            terms.push(dephasing_term(gamma_phi_ratio * p.kerr, space)?);
        }
        Ok((build_kerr(&coeffs, space), terms))
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.bath.validate()?;
        if (self.bath.omega_d - self.circuit.omega_d).abs() > 1e-12 * self.circuit.omega_d {
            return Err(Error::BathSpec("bath and circuit disagree on the drive frequency".into()));
        }
        let needs_squid = self.set == DissipatorSet::Squid;
        if needs_squid != (self.circuit.topology == Topology::Squid) {
            return Err(Error::Topology(format!("dissipator set {} does not match the circuit topology", self.set.name())));
        }
        if !(self.gamma_phi_ratio >= 0.0) {
            return Err(Error::Domain("dephasing rate must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub eps2_over_k: f64,
    pub t_alpha: f64,
    pub lambda_re: f64,
    pub pairs: usize,
    pub dim: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn t_alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t_alpha).collect()
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }
}

/// Lifetime at one sweep coordinate.
pub fn lifetime_point(axis: SweepAxis, x: f64, cfg: &LifetimeConfig) -> Result<SweepPoint> {
    let (depth, detuning, gamma_phi) = match axis {
        SweepAxis::Eps2Ratio => (cfg.depth_for_ratio(x)?, cfg.detuning_ratio, cfg.gamma_phi_ratio),
        SweepAxis::DetuningRatio => (cfg.depth_for_ratio(cfg.eps2_ratio)?, x, cfg.gamma_phi_ratio),
        SweepAxis::ModulationDepth => (x, cfg.detuning_ratio, cfg.gamma_phi_ratio),
        SweepAxis::GammaPhi => (cfg.depth_for_ratio(cfg.eps2_ratio)?, cfg.detuning_ratio, x),
    };
    let ratio = cfg.eps2_ratio_at(depth)?;
    let est = adaptive_t_alpha(default_dim(ratio.max(detuning.abs() / 2.0)), &cfg.options, |space| {
        cfg.model(depth, detuning, gamma_phi, space)
    })?;
    Ok(SweepPoint {
        x,
        eps2_over_k: ratio,
        t_alpha: est.t_alpha,
        lambda_re: est.lambda.re,
        pairs: est.pairs,
        dim: est.dim,
        converged: est.converged,
        error: None,
    })
}

/// Evaluates every point independently and in parallel; output order follows
/// `values` and failed points are kept as gaps with their error message.
pub fn sweep(axis: SweepAxis, values: &[f64], cfg: &LifetimeConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let points = values
        .par_iter()
        .map(|&x| {
            lifetime_point(axis, x, cfg).unwrap_or_else(|e| SweepPoint {
                x,
                eps2_over_k: f64::NAN,
                t_alpha: f64::NAN,
                lambda_re: f64::NAN,
                pairs: 0,
                dim: 0,
                converged: false,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SweepResult { axis, points })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub start: f64,
    pub end: f64,
    /// Median T_α over the plateau.
    pub level: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StaircaseFeatures {
    pub plateaus: Vec<Plateau>,
    pub rise_onsets: Vec<f64>,
    pub onset_spacings: Vec<f64>,
    /// Spacing in ε₂/K between successive bound-state pairs, π.
    pub predicted_spacing: f64,
}

impl StaircaseFeatures {
    /// Plateaus preceded by at least one rise.
    pub fn plateaus_after_rise(&self) -> Vec<Plateau> {
        match self.rise_onsets.first() {
            Some(&first) => self.plateaus.iter().copied().filter(|p| p.start > first).collect(),
            None => vec![],
        }
    }

    /// Rise followed by a plateau.
    pub fn cycles(&self) -> usize {
        let mut count = 0;
        let mut last_end = f64::NEG_INFINITY;
        for &onset in &self.rise_onsets {
            if onset < last_end {
                continue;
            }
            if let Some(p) = self.plateaus.iter().find(|p| p.start > onset) {
                count += 1;
                last_end = p.end;
            }
        }
        count
    }
}

pub const PLATEAU_SLOPE: f64 = 0.05;
pub const PLATEAU_WIDTH: f64 = 0.5;
/// d ln T/d(ε₂/K) above which the curve counts as rising.
pub const RISE_SLOPE: f64 = 0.5;

/// Plateaus are runs with |d ln T/d(ε₂/K)| < 0.05 spanning at least 0.5; rise
/// onsets are where the slope first exceeds `RISE_SLOPE` after a flatter stretch.
pub fn staircase_features(sr: &SweepResult) -> StaircaseFeatures {
    let pts: Vec<&SweepPoint> = sr.points.iter().filter(|p| p.t_alpha.is_finite() && p.t_alpha > 0.0).collect();
    let mut f = StaircaseFeatures { predicted_spacing: std::f64::consts::PI, ..Default::default() };
    if pts.len() < 2 {
        return f;
    }
    let slopes: Vec<f64> =
        pts.windows(2).map(|w| (w[1].t_alpha.ln() - w[0].t_alpha.ln()) / (w[1].x - w[0].x)).collect();
    let mut i = 0;
    while i < slopes.len() {
        if slopes[i].abs() < PLATEAU_SLOPE {
            let start = i;
            while i < slopes.len() && slopes[i].abs() < PLATEAU_SLOPE {
                i += 1;
            }
            let (a, b) = (pts[start].x, pts[i].x);
            if b - a >= PLATEAU_WIDTH {
                let mut vals: Vec<f64> = pts[start..=i].iter().map(|p| p.t_alpha).collect();
                vals.sort_by(f64::total_cmp);
                f.plateaus.push(Plateau { start: a, end: b, level: vals[vals.len() / 2] });
            }
        } else {
            i += 1;
        }
    }
    for k in 0..slopes.len() {
        let rising = slopes[k] > RISE_SLOPE;
        let was_rising = k > 0 && slopes[k - 1] > RISE_SLOPE;
        if rising && !was_rising {
            f.rise_onsets.push(pts[k].x);
        }
    }
    f.onset_spacings = f.rise_onsets.windows(2).map(|w| w[1] - w[0]).collect();
    f
}
