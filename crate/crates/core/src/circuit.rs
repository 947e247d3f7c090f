//! Circuit parameters and the closed-form coefficients of the static effective
//! Hamiltonian for STS arrays and for a single SQUID.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// rad/μs per MHz.
pub const ANGULAR_PER_MHZ: f64 = 2.0 * PI;

pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    f_mhz * ANGULAR_PER_MHZ
}

pub fn angular_to_mhz(w: f64) -> f64 {
    w / ANGULAR_PER_MHZ
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Sts,
    Squid,
}

/// Physical circuit. Josephson and charging energies are E/h in MHz and per
/// junction; `m` STS cells sit in series and the transmon branch holds `n`
/// junctions in total.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub ej1: f64,
    pub ej2: f64,
    pub ej3: f64,
    pub ec: f64,
    pub delta_phi: f64,
    /// Drive angular frequency, rad/μs.
    pub omega_d: f64,
    pub m: u32,
    pub n: u32,
    pub topology: Topology,
    /// Extra detuning added to Δ, rad/μs.
    pub delta_ext: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            ej1: 80_000.0,
            ej2: 80_000.0,
            ej3: 80_000.0,
            ec: 250.0,
            delta_phi: 0.0,
            omega_d: mhz_to_angular(12_000.0),
            m: 1,
            n: 1,
            topology: Topology::Sts,
            delta_ext: 0.0,
        }
    }
}

impl CircuitParams {
    pub fn ej_sigma(&self) -> f64 {
        0.5 * (self.ej1 + self.ej3)
    }

    pub fn ej_delta(&self) -> f64 {
        0.5 * (self.ej1 - self.ej3)
    }

    /// Transmon-branch Josephson energy of the whole array (MHz).
    pub fn ej2_total(&self) -> f64 {
        self.ej2 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let energies = [("E_J1", self.ej1), ("E_J2", self.ej2), ("E_J3", self.ej3), ("E_C", self.ec)];
        for (name, v) in energies {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..PI / 2.0).contains(&self.delta_phi) {
            return Err(Error::Domain(format!("modulation depth {} outside [0, π/2)", self.delta_phi)));
        }
        if !(self.omega_d > 0.0 && self.omega_d.is_finite()) {
            return Err(Error::Domain("drive frequency must be positive".into()));
        }
        if self.m == 0 || self.n < self.m || self.n % self.m != 0 {
            return Err(Error::Topology(format!("N = {} must be a positive multiple of M = {}", self.n, self.m)));
        }
        if self.topology == Topology::Squid && (self.m != 1 || self.n != 1) {
            return Err(Error::Topology("a single SQUID has no junction arrays (M = N = 1)".into()));
        }
        Ok(())
    }
}

/// Static effective Hamiltonian coefficients, all in rad/μs except `phi_zps`
/// and `delta_phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveParams {
    pub delta: f64,
    pub eps2: f64,
    pub kerr: f64,
    pub lambda: f64,
    /// Four-photon drive, single SQUID only.
    pub theta: f64,
    pub eps_c: f64,
    pub phi_zps: f64,
    pub g1: f64,
    pub g1t: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub delta_ext: f64,
    pub omega_d: f64,
    pub delta_phi: f64,
    /// Drive-branch Josephson energy entering G₂, after series dilution.
    pub ej_sigma: f64,
    pub cells: u32,
}

impl EffectiveParams {
    /// Δ rebuilt from the stored pieces, STS form.
    fn sts_detuning(&self) -> f64 {
        self.eps_c - self.omega_d / 2.0 - 2.0 * self.kerr - 2.0 * self.g2 * self.g2 / self.omega_d
            - 24.0 * self.g1 * self.g3 / self.omega_d
            + self.delta_ext
    }
}

pub fn sts_effective_params(c: &CircuitParams) -> Result<EffectiveParams> {
    c.validate()?;
    if c.topology != Topology::Sts {
        return Err(Error::Topology("STS coefficients requested for a SQUID circuit".into()));
    }
    let ej2 = c.ej2_total();
    if c.ec >= ej2 {
        return Err(Error::NotATransmon { ec: c.ec, ej2 });
    }
    let (m, n) = (c.m as f64, c.n as f64);
    let ec = mhz_to_angular(c.ec);
    let ej2 = mhz_to_angular(ej2);
    let ejs = mhz_to_angular(c.ej_sigma()) / m;
    // The linear sine term of the asymmetric drive is undiluted; its cubic term picks up 1/M².
    let ejd = mhz_to_angular(c.ej_delta());
    let dp = c.delta_phi;
    let phi = (2.0 * ec / ej2).powf(0.25);
    let g2 = dp * ejs * phi.powi(2) / 2.0;
    let g4 = -dp * ejs * phi.powi(4) / (24.0 * m * m);
    let mut p = EffectiveParams {
        delta: 0.0,
        eps2: g2 + 6.0 * g4,
        kerr: ec / (2.0 * n * n),
        lambda: 4.0 * g4,
        theta: 0.0,
        eps_c: (8.0 * ec * ej2).sqrt(),
        phi_zps: phi,
        g1: -2.0 * ejd * phi * (1.0 - dp * dp / 4.0),
        g1t: ejd * phi * dp * dp / 4.0,
        g2,
        g3: ejd / (m * m) * phi.powi(3) / 3.0,
        g4,
        delta_ext: c.delta_ext,
        omega_d: c.omega_d,
        delta_phi: dp,
        ej_sigma: ejs,
        cells: c.m,
    };
    p.delta = p.sts_detuning();
    Ok(p)
}

/// Rescales single-cell, single-junction coefficients to an array of `m` cells
/// with `n` transmon junctions.
pub fn dilution_scaling(base: &EffectiveParams, m: u32, n: u32) -> EffectiveParams {
    let (mf, nf) = (m as f64, n as f64);
    let mut p = base.clone();
    p.kerr = base.kerr / (nf * nf);
    p.g2 = nf.sqrt() / mf * base.g2;
    p.g4 = nf / mf.powi(3) * base.g4;
    p.phi_zps = nf.powf(0.25) * base.phi_zps;
    p.eps_c = base.eps_c / nf.sqrt();
    p.g1 = nf.powf(0.25) * base.g1;
    p.g1t = nf.powf(0.25) * base.g1t;
    p.g3 = nf.powf(0.75) / (mf * mf) * base.g3;
    p.ej_sigma = base.ej_sigma / mf;
    p.cells = base.cells * m;
    p.eps2 = p.g2 + 6.0 * p.g4;
    p.lambda = 4.0 * p.g4;
    p.delta = p.sts_detuning();
    p
}

pub fn squid_effective_params(c: &CircuitParams) -> Result<EffectiveParams> {
    c.validate()?;
    if c.topology != Topology::Squid {
        return Err(Error::Topology("SQUID coefficients requested for an STS circuit".into()));
    }
    if c.ec >= c.ej_sigma() {
        return Err(Error::NotATransmon { ec: c.ec, ej2: c.ej_sigma() });
    }
    let ec = mhz_to_angular(c.ec);
    let ej = mhz_to_angular(c.ej_sigma());
    let dp = c.delta_phi;
    let wd = c.omega_d;
    let phi = (2.0 * ec / ej).powf(0.25);
    let kerr = ec / 2.0;
    let eps2 = -(dp / (2.0 * SQRT_2)) * ((2.0 * ec * ej).sqrt() - ec) + dp.powi(3) * ec * ej / (4.0 * wd);
    // Static potential −√2 E_JΣ cos φ at the π/4 bias sets the oscillator frequency.
    let eps_c = (8.0 * ec * SQRT_2 * ej).sqrt();
    let drive_shift = dp * dp * ej * ej * phi.powi(4) / (2.0 * wd) * (-1.0 + dp * dp / 12.0);
    Ok(EffectiveParams {
        delta: eps_c - wd / 2.0 - 2.0 * kerr + drive_shift + c.delta_ext,
        eps2,
        kerr,
        lambda: SQRT_2 * dp * ej * phi.powi(4) / 12.0,
        theta: SQRT_2 * dp * dp * ej * phi.powi(4) / 192.0,
        eps_c,
        phi_zps: phi,
        g1: 0.0,
        g1t: 0.0,
        g2: dp * ej * phi * phi / 2.0,
        g3: 0.0,
        g4: -dp * ej * phi.powi(4) / 24.0,
        delta_ext: c.delta_ext,
        omega_d: wd,
        delta_phi: dp,
        ej_sigma: ej,
        cells: 1,
    })
}

pub fn effective_params(c: &CircuitParams) -> Result<EffectiveParams> {
    match c.topology {
        Topology::Sts => sts_effective_params(c),
        Topology::Squid => squid_effective_params(c),
    }
}

/// Jacobi–Anger amplitudes of the flux drive.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveHarmonics {
    /// δφ⁽ⁿ⁾ = 2(−1)ⁿ J_{2n+1}(δφ) for n = 0..=n_max.
    pub amplitudes: Vec<f64>,
    /// Correction factor 1 − δφ²/8 + δφ⁴/192 multiplying the leading squeeze amplitude.
    pub squeeze_correction: f64,
}

pub fn drive_harmonics(delta_phi: f64, n_max: usize) -> DriveHarmonics {
    let amplitudes = (0..=n_max)
        .map(|n| {
            let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
            sign * bessel_j(2 * n as u32 + 1, delta_phi)
        })
        .collect();
    let d2 = delta_phi * delta_phi;
    DriveHarmonics { amplitudes, squeeze_correction: 1.0 - d2 / 8.0 + d2 * d2 / 192.0 }
}

/// Power series of J_ν(x); accurate for the |x| ≲ 2 relevant to flux modulation.
pub fn bessel_j(nu: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(nu as i32) / (1..=nu).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for k in 1..60 {
        term *= -half * half / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub const VALIDITY_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    pub phi_zps: f64,
    pub delta_phi: f64,
    /// (n/9)·√(2E_C/E_J2): sixth-order Kerr relative to the quartic one at photon number n.
    pub sixth_order_ratio: f64,
    /// δφ²/8 and δφ⁴/192 from the corrected squeeze amplitude.
    pub squeeze_correction_2: f64,
    pub squeeze_correction_4: f64,
    /// (4E_C/3E_J2)·δφ²: sixth-harmonic squeeze contribution relative to ε₂.
    pub sixth_harmonic_ratio: f64,
    pub sixth_order_pass: bool,
    pub squeeze_pass: bool,
    pub sixth_harmonic_pass: bool,
}

impl ValidityReport {
    pub fn passes(&self) -> bool {
        self.sixth_order_pass && self.squeeze_pass && self.sixth_harmonic_pass
    }
}

pub fn validity_report(c: &CircuitParams, cat_n: f64) -> ValidityReport {
    let ej = match c.topology {
        Topology::Sts => c.ej2_total(),
        Topology::Squid => c.ej_sigma(),
    };
    let ratio = c.ec / ej;
    let d2 = c.delta_phi * c.delta_phi;
    let sixth_order_ratio = cat_n / 9.0 * (2.0 * ratio).sqrt();
    let squeeze_correction_2 = d2 / 8.0;
    let squeeze_correction_4 = d2 * d2 / 192.0;
    let sixth_harmonic_ratio = 4.0 * ratio / 3.0 * d2;
    ValidityReport {
        phi_zps: (2.0 * ratio).powf(0.25),
        delta_phi: c.delta_phi,
        sixth_order_ratio,
        squeeze_correction_2,
        squeeze_correction_4,
        sixth_harmonic_ratio,
        sixth_order_pass: sixth_order_ratio < VALIDITY_THRESHOLD,
        squeeze_pass: squeeze_correction_2 < VALIDITY_THRESHOLD,
        sixth_harmonic_pass: sixth_harmonic_ratio < VALIDITY_THRESHOLD,
    }
}

/// Modulation depth at which |ε₂| reaches `target` (rad/μs), found by
/// bisection. |ε₂| grows monotonically with δφ over the usable range.
pub fn delta_phi_for_squeezing(c: &CircuitParams, target: f64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::Domain(format!("squeezing target {target} must be nonnegative")));
    }
    let eps2_at = |dp: f64| -> Result<f64> {
        let probe = CircuitParams { delta_phi: dp, ..c.clone() };
        Ok(effective_params(&probe)?.eps2.abs())
    };
    if target == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.5);
    if eps2_at(hi)? < target {
        return Err(Error::Domain(format!(
            "squeezing {:.4} MHz not reachable below δφ = {hi}",
            angular_to_mhz(target)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eps2_at(mid)? < target {
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

/// Detuning −2Λε₂/K that cancels the Λ-induced shift of the degeneracy points.
pub fn compensation_detuning(p: &EffectiveParams) -> Result<f64> {
    if p.kerr == 0.0 {
        return Err(Error::Domain("compensation needs a nonzero Kerr coefficient".into()));
    }
    Ok(-2.0 * p.lambda * p.eps2 / p.kerr)
}
