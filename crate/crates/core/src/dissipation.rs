//! Bath description and the jump-operator sets of the effective master
//! equations.
//!
//! Rates are plain inverse microseconds. A channel at frequency ω with
//! spectral density κ contributes heating κ·n(ω) and loss κ·(1 + n(ω)).

use crate::circuit::{sts_effective_params, CircuitParams, EffectiveParams, Topology};
use crate::error::{Error, Result};
use crate::fock::{normal_monomial, FockSpace, Operator};

const HBAR: f64 = 1.054_571_817e-34;
const BOLTZMANN: f64 = 1.380_649e-23;

/// Bose-Einstein occupation at angular frequency `omega` (rad/μs) and
/// temperature `temperature` (K).
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    let x = HBAR * omega * 1e6 / (BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Bath frequencies as multiples of ω_d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FreqLabel {
    HalfDrive,
    Drive,
    ThreeHalvesDrive,
    FiveHalvesDrive,
    SevenHalvesDrive,
}

impl FreqLabel {
    pub const ALL: [FreqLabel; 5] = [
        FreqLabel::HalfDrive,
        FreqLabel::Drive,
        FreqLabel::ThreeHalvesDrive,
        FreqLabel::FiveHalvesDrive,
        FreqLabel::SevenHalvesDrive,
    ];

    pub fn multiple(self) -> f64 {
        match self {
            FreqLabel::HalfDrive => 0.5,
            FreqLabel::Drive => 1.0,
            FreqLabel::ThreeHalvesDrive => 1.5,
            FreqLabel::FiveHalvesDrive => 2.5,
            FreqLabel::SevenHalvesDrive => 3.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FreqLabel::HalfDrive => "wd/2",
            FreqLabel::Drive => "wd",
            FreqLabel::ThreeHalvesDrive => "3wd/2",
            FreqLabel::FiveHalvesDrive => "5wd/2",
            FreqLabel::SevenHalvesDrive => "7wd/2",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Spectral density, temperature and optional fixed occupation for each bath
/// frequency. A fixed occupation takes precedence over the temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpec {
    pub omega_d: f64,
    pub kappa: [Option<f64>; 5],
    pub temperature: [Option<f64>; 5],
    pub occupation: [Option<f64>; 5],
}

impl BathSpec {
    /// Frequency-flat κ at one temperature.
    pub fn uniform(kappa: f64, temperature: f64, omega_d: f64) -> Self {
        Self { omega_d, kappa: [Some(kappa); 5], temperature: [Some(temperature); 5], occupation: [None; 5] }
    }

    /// Frequency-flat κ with the same thermal occupation at every frequency.
    pub fn with_occupation(kappa: f64, n_th: f64, omega_d: f64) -> Self {
        Self { omega_d, kappa: [Some(kappa); 5], temperature: [None; 5], occupation: [Some(n_th); 5] }
    }

    pub fn set_kappa(&mut self, label: FreqLabel, kappa: f64) -> &mut Self {
        self.kappa[label.index()] = Some(kappa);
        self
    }

    pub fn set_temperature(&mut self, label: FreqLabel, temperature: f64) -> &mut Self {
        self.temperature[label.index()] = Some(temperature);
        self.occupation[label.index()] = None;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for k in out.kappa.iter_mut().flatten() {
            *k *= factor;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for label in FreqLabel::ALL {
            let i = label.index();
            if let Some(k) = self.kappa[i] {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(Error::BathSpec(format!("κ({}) = {k} must be nonnegative", label.name())));
                }
            }
            if let Some(t) = self.temperature[i] {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::BathSpec(format!("T({}) = {t} must be positive", label.name())));
                }
            }
            if let Some(n) = self.occupation[i] {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(Error::BathSpec(format!("n({}) = {n} must be nonnegative", label.name())));
                }
            }
        }
        Ok(())
    }

    pub fn kappa(&self, label: FreqLabel) -> Result<f64> {
        self.kappa[label.index()].ok_or_else(|| Error::BathSpec(format!("no κ entry for {}", label.name())))
    }

    pub fn occupation(&self, label: FreqLabel) -> Result<f64> {
        let i = label.index();
        if let Some(n) = self.occupation[i] {
            return Ok(n);
        }
        let t = self.temperature[i]
            .ok_or_else(|| Error::BathSpec(format!("no temperature or occupation for {}", label.name())))?;
        bose_einstein(label.multiple() * self.omega_d, t)
    }

    /// Absorption rate κ·n.
    pub fn heating(&self, label: FreqLabel) -> Result<f64> {
        Ok(self.kappa(label)? * self.occupation(label)?)
    }

    /// Emission rate κ·(1 + n).
    pub fn loss(&self, label: FreqLabel) -> Result<f64> {
        Ok(self.kappa(label)? * (1.0 + self.occupation(label)?))
    }
}

/// One Lindblad channel rate·D[jump].
#[derive(Clone, Debug)]
pub struct DissipatorTerm {
    pub rate: f64,
    pub jump: Operator,
    pub label: String,
}

impl DissipatorTerm {
    pub fn new(rate: f64, jump: Operator, label: impl Into<String>) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("dissipator rate {rate} must be nonnegative")));
        }
        Ok(Self { rate, jump, label: label.into() })
    }
}

/// Σ c·a†^p a^q.
fn polynomial(space: FockSpace, terms: &[(f64, u32, u32)]) -> Operator {
    let mut op = Operator::zeros(space);
    for &(c, p, q) in terms {
        if c != 0.0 {
            op = &op + &(&normal_monomial(space, p, q) * c);
        }
    }
    op
}

/// Heating and loss channels at `label` with the jump polynomials given;
/// coefficients multiply the jump, the bath supplies the rate.
fn thermal_pair(
    bath: &BathSpec,
    label: FreqLabel,
    space: FockSpace,
    heating: &[(f64, u32, u32)],
    loss: &[(f64, u32, u32)],
) -> Result<Vec<DissipatorTerm>> {
    Ok(vec![
        DissipatorTerm::new(bath.heating(label)?, polynomial(space, heating), format!("{} heating", label.name()))?,
        DissipatorTerm::new(bath.loss(label)?, polynomial(space, loss), format!("{} loss", label.name()))?,
    ])
}

fn require_omega(p: &EffectiveParams, bath: &BathSpec) -> Result<()> {
    bath.validate()?;
    if (p.omega_d - bath.omega_d).abs() > 1e-12 * p.omega_d.abs() {
        return Err(Error::BathSpec("bath and circuit disagree on the drive frequency".into()));
    }
    Ok(())
}

/// Leading-order single-photon dissipation. With `rwa` the dressed operators
/// reduce to a and a† and the 3ω_d/2 pair is dropped.
pub fn sts_dissipators_o2(p: &EffectiveParams, bath: &BathSpec, space: FockSpace, rwa: bool) -> Result<Vec<DissipatorTerm>> {
    require_omega(p, bath)?;
    single_photon_set(p.g2, p.omega_d, 2.0, bath, space, rwa)
}

/// Single-photon channels with dressing coefficient `mix`·g/ω_d.
fn single_photon_set(g: f64, wd: f64, mix: f64, bath: &BathSpec, space: FockSpace, rwa: bool) -> Result<Vec<DissipatorTerm>> {
    let dress = if rwa { 0.0 } else { mix * g / wd };
    let mut out = thermal_pair(
        bath,
        FreqLabel::HalfDrive,
        space,
        &[(1.0, 1, 0), (dress, 0, 1)],
        &[(1.0, 0, 1), (dress, 1, 0)],
    )?;
    if !rwa {
        let w = 3.0 * g / wd;
        let s = w * w;
        out.push(DissipatorTerm::new(
            s * bath.heating(FreqLabel::ThreeHalvesDrive)?,
            normal_monomial(space, 1, 0),
            "3wd/2 heating",
        )?);
        out.push(DissipatorTerm::new(s * bath.loss(FreqLabel::ThreeHalvesDrive)?, normal_monomial(space, 0, 1), "3wd/2 loss")?);
    }
    Ok(out)
}

/// Third- and fourth-order channels beyond the leading set. Each line of the
/// higher-order master equation is one composite jump; lines whose
/// coefficients all vanish are omitted.
pub fn sts_dissipators_o34(p: &EffectiveParams, bath: &BathSpec, space: FockSpace) -> Result<Vec<DissipatorTerm>> {
    require_omega(p, bath)?;
    let wd = p.omega_d;
    let wd2 = wd * wd;
    let two_photon = 8.0 * p.g3 / wd;
    let half_linear = 1.5 * p.g2 * p.g2 / wd2 - 24.0 * p.g1 * p.g3 / wd2;
    let g4a = 12.0 * p.g4 / wd;
    let g4b = 4.0 * p.g4 / wd;
    let three_main = 18.0 * p.g4 / wd;
    let three_cross = -11.0 * p.g2 * p.g2 / wd2 + 12.0 * p.g1t * p.g3 / (5.0 * wd2);
    let five_linear = 5.0 * p.g2 * p.g2 / (3.0 * wd2) + 4.0 * p.g1t * p.g3 / (3.0 * wd2);
    let five_cubic = 4.0 * p.g4 / (3.0 * wd);

    let lines: [(FreqLabel, Vec<(f64, u32, u32)>, Vec<(f64, u32, u32)>); 4] = [
        (FreqLabel::Drive, vec![(two_photon, 2, 0)], vec![(two_photon, 0, 2)]),
        (
            FreqLabel::HalfDrive,
            vec![(half_linear, 1, 0), (g4a, 0, 1), (g4b, 3, 0), (g4a, 1, 2)],
            vec![(half_linear, 0, 1), (g4a, 1, 0), (g4b, 0, 3), (g4a, 2, 1)],
        ),
        (
            FreqLabel::ThreeHalvesDrive,
            vec![(three_main, 1, 0), (three_cross, 0, 1), (g4a, 2, 1)],
            vec![(three_main, 0, 1), (three_cross, 1, 0), (g4a, 1, 2)],
        ),
        (
            FreqLabel::FiveHalvesDrive,
            vec![(five_linear, 1, 0), (five_cubic, 3, 0)],
            vec![(five_linear, 0, 1), (five_cubic, 0, 3)],
        ),
    ];
    let mut out = Vec::new();
    for (label, heat, loss) in lines {
        if heat.iter().chain(&loss).all(|t| t.0 == 0.0) {
            continue;
        }
        out.extend(thermal_pair(bath, label, space, &heat, &loss)?);
    }
    Ok(out)
}

/// γ_φ D[n̂].
pub fn dephasing_term(gamma_phi: f64, space: FockSpace) -> Result<DissipatorTerm> {
    if !(gamma_phi >= 0.0 && gamma_phi.is_finite()) {
        return Err(Error::Domain(format!("dephasing rate {gamma_phi} must be nonnegative")));
    }
    DissipatorTerm::new(gamma_phi, normal_monomial(space, 1, 1), "dephasing")
}

/// Third-order corrections in the modulation depth for a symmetric STS.
/// Returns the corrected effective parameters and the four-frequency
/// dissipator set. The 5ω_d/2 line pairs the heating rate κn(ω) with D[a]
/// and the loss rate with D[a†].
pub fn strong_modulation_set(c: &CircuitParams, bath: &BathSpec, space: FockSpace) -> Result<(EffectiveParams, Vec<DissipatorTerm>)> {
    if c.topology != Topology::Sts {
        return Err(Error::Topology("strong-modulation set applies to STS circuits".into()));
    }
    if c.ej_delta() != 0.0 {
        return Err(Error::Domain("strong-modulation set requires symmetric drive junctions".into()));
    }
    let mut p = sts_effective_params(c)?;
    require_omega(&p, bath)?;
    let m2 = (p.cells as f64).powi(2);
    let g2p = c.delta_phi.powi(3) * p.ej_sigma * p.phi_zps.powi(2) / 16.0;
    let g4p = p.phi_zps.powi(2) * g2p / (12.0 * m2);
    let g2e = p.g2 - g2p;
    let wd = p.omega_d;
    p.eps2 = g2e + 6.0 * (p.g4 - g4p);
    p.lambda = 4.0 * (p.g4 - g4p);
    p.delta = p.eps_c - wd / 2.0 - 2.0 * p.kerr - 2.0 * g2e * g2e / wd + g2p * g2p / (9.0 * wd) + p.delta_ext;

    let mut out = single_photon_set(g2e, wd, 2.0, bath, space, false)?;
    let five = (5.0 * g2p / (8.0 * wd)).powi(2);
    out.push(DissipatorTerm::new(five * bath.heating(FreqLabel::FiveHalvesDrive)?, normal_monomial(space, 0, 1), "5wd/2 heating")?);
    out.push(DissipatorTerm::new(five * bath.loss(FreqLabel::FiveHalvesDrive)?, normal_monomial(space, 1, 0), "5wd/2 loss")?);
    let seven = (11.0 * g2p / (36.0 * wd)).powi(2);
    out.push(DissipatorTerm::new(seven * bath.heating(FreqLabel::SevenHalvesDrive)?, normal_monomial(space, 1, 0), "7wd/2 heating")?);
    out.push(DissipatorTerm::new(seven * bath.loss(FreqLabel::SevenHalvesDrive)?, normal_monomial(space, 0, 1), "7wd/2 loss")?);
    Ok((p, out))
}

/// Single-SQUID master equation.
pub fn squid_dissipators(p: &EffectiveParams, bath: &BathSpec, space: FockSpace) -> Result<Vec<DissipatorTerm>> {
    require_omega(p, bath)?;
    let wd = p.omega_d;
    let dp = p.delta_phi;
    let dress = -std::f64::consts::SQRT_2 * p.g2 / wd;
    let mut out = thermal_pair(
        bath,
        FreqLabel::HalfDrive,
        space,
        &[(1.0, 1, 0), (dress, 0, 1)],
        &[(1.0, 0, 1), (dress, 1, 0)],
    )?;
    let three = (std::f64::consts::SQRT_2 * dp * p.ej_sigma * p.phi_zps.powi(2) / (4.0 * wd)).powi(2);
    let three_heat = polynomial(space, &[(3.0, 1, 0), (dp, 0, 1)]);
    let three_loss = polynomial(space, &[(3.0, 0, 1), (dp, 1, 0)]);
    out.push(DissipatorTerm::new(three * bath.heating(FreqLabel::ThreeHalvesDrive)?, three_heat, "3wd/2 heating")?);
    out.push(DissipatorTerm::new(three * bath.loss(FreqLabel::ThreeHalvesDrive)?, three_loss, "3wd/2 loss")?);
    let five = (dp * std::f64::consts::SQRT_2 * p.g2 / (3.0 * wd)).powi(2);
    out.push(DissipatorTerm::new(five * bath.heating(FreqLabel::FiveHalvesDrive)?, normal_monomial(space, 1, 0), "5wd/2 heating")?);
    out.push(DissipatorTerm::new(five * bath.loss(FreqLabel::FiveHalvesDrive)?, normal_monomial(space, 0, 1), "5wd/2 loss")?);
    Ok(out)
}

/// Named dissipator catalogs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DissipatorSet {
    /// Single-photon loss and gain with bare operators.
    O2Rwa,
    /// Leading order with dressed operators and the 3ω_d/2 pair.
    O2,
    /// O2 plus third- and fourth-order channels.
    O34,
    StrongModulation,
    Squid,
}

impl DissipatorSet {
    pub const ALL: [DissipatorSet; 5] =
        [DissipatorSet::O2Rwa, DissipatorSet::O2, DissipatorSet::O34, DissipatorSet::StrongModulation, DissipatorSet::Squid];

    pub fn name(self) -> &'static str {
        match self {
            DissipatorSet::O2Rwa => "o2-rwa",
            DissipatorSet::O2 => "o2",
            DissipatorSet::O34 => "o34",
            DissipatorSet::StrongModulation => "strong-mod",
            DissipatorSet::Squid => "squid",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Effective parameters and channels for `set` at circuit `c`.
pub fn model_for(set: DissipatorSet, c: &CircuitParams, bath: &BathSpec, space: FockSpace) -> Result<(EffectiveParams, Vec<DissipatorTerm>)> {
    match set {
        DissipatorSet::StrongModulation => strong_modulation_set(c, bath, space),
        DissipatorSet::Squid => {
            if c.topology != Topology::Squid {
                return Err(Error::Topology("squid dissipators need a SQUID circuit".into()));
            }
            let p = crate::circuit::squid_effective_params(c)?;
            let terms = squid_dissipators(&p, bath, space)?;
            Ok((p, terms))
        }
        _ => {
            if c.topology != Topology::Sts {
                return Err(Error::Topology(format!("{} dissipators need an STS circuit", set.name())));
            }
            let p = sts_effective_params(c)?;
            let terms = dissipators_for_params(set, &p, bath, space)?;
            Ok((p, terms))
        }
    }
}

/// Channels for the sets that depend only on effective parameters.
pub fn dissipators_for_params(set: DissipatorSet, p: &EffectiveParams, bath: &BathSpec, space: FockSpace) -> Result<Vec<DissipatorTerm>> {
    match set {
        DissipatorSet::O2Rwa => sts_dissipators_o2(p, bath, space, true),
        DissipatorSet::O2 => sts_dissipators_o2(p, bath, space, false),
        DissipatorSet::O34 => {
            let mut t = sts_dissipators_o2(p, bath, space, false)?;
            t.extend(sts_dissipators_o34(p, bath, space)?);
            Ok(t)
        }
        DissipatorSet::Squid => squid_dissipators(p, bath, space),
        DissipatorSet::StrongModulation => {
            Err(Error::Domain("strong-modulation channels need the circuit, not only effective parameters".into()))
        }
    }
}

/// Rate in μs⁻¹ for a frequency quoted in kHz, no 2π.
pub fn rate_from_khz(khz: f64) -> f64 {
    khz * 1e-3
}
