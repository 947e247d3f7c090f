//! Static effective Hamiltonians, the driven lab-frame model and the classical
//! phase-space energy surface.

use faer::c64;

use crate::circuit::{CircuitParams, EffectiveParams, Topology};
use crate::error::{Error, Result};
use crate::fock::{ladder_ops, FockSpace, Operator, PhaseGrid};

/// Coefficients of Δn̂ + ε₂(a†²+a²) − K a†²a² + Λ(a†a³+a†³a) + Θ(a†⁴+a⁴).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KerrCoefficients {
    pub delta: f64,
    pub eps2: f64,
    pub kerr: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl KerrCoefficients {
    pub fn from_params(p: &EffectiveParams) -> Self {
        Self { delta: p.delta, eps2: p.eps2, kerr: p.kerr, lambda: p.lambda, theta: p.theta }
    }

    /// Coefficients quoted in units of K.
    pub fn from_ratios(kerr: f64, delta: f64, eps2: f64, lambda: f64) -> Self {
        Self { delta: delta * kerr, eps2: eps2 * kerr, kerr, lambda: lambda * kerr, theta: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianSpec {
    /// Detuned Kerr cat.
    Dkc { delta: f64, eps2: f64, kerr: f64 },
    /// Resonant Kerr cat.
    Rkc { eps2: f64, kerr: f64 },
    StsEffective(EffectiveParams),
    SquidEffective(EffectiveParams),
}

impl HamiltonianSpec {
    pub fn coefficients(&self) -> KerrCoefficients {
        match self {
            HamiltonianSpec::Dkc { delta, eps2, kerr } => {
                KerrCoefficients { delta: *delta, eps2: *eps2, kerr: *kerr, ..Default::default() }
            }
            HamiltonianSpec::Rkc { eps2, kerr } => KerrCoefficients { eps2: *eps2, kerr: *kerr, ..Default::default() },
            HamiltonianSpec::StsEffective(p) => KerrCoefficients { theta: 0.0, ..KerrCoefficients::from_params(p) },
            HamiltonianSpec::SquidEffective(p) => KerrCoefficients::from_params(p),
        }
    }
}

pub fn build_static(spec: &HamiltonianSpec, space: FockSpace) -> Result<Operator> {
    let h = build_kerr(&spec.coefficients(), space);
    if !h.is_hermitian() {
        return Err(Error::InternalConsistency(format!("static Hamiltonian not Hermitian ({:.2e})", h.hermitian_defect())));
    }
    Ok(h)
}

/// Assembles the static Hamiltonian from exact matrix elements of the
/// normal-ordered monomials.
pub fn build_kerr(c: &KerrCoefficients, space: FockSpace) -> Operator {
    let d = space.dim();
    let mut h = Operator::zeros(space).into_mat();
    for n in 0..d {
        let nf = n as f64;
        h[(n, n)] = c64::new(c.delta * nf - c.kerr * nf * (nf - 1.0), 0.0);
        if n + 2 < d {
            let root = ((nf + 1.0) * (nf + 2.0)).sqrt();
            // ⟨n+2|a†²|n⟩ and ⟨n+2|a†³a|n⟩ = n·√((n+1)(n+2)).
            let v = c64::new(c.eps2 * root + c.lambda * nf * root, 0.0);
            h[(n + 2, n)] = v;
            h[(n, n + 2)] = v;
        }
        if n + 4 < d && c.theta != 0.0 {
            let v = c64::new(c.theta * ((nf + 1.0) * (nf + 2.0) * (nf + 3.0) * (nf + 4.0)).sqrt(), 0.0);
            h[(n + 4, n)] = v;
            h[(n, n + 4)] = v;
        }
    }
    Operator::from_mat(space, h)
}

/// Driven STS circuit before any averaging.
#[derive(Clone, Debug, PartialEq)]
pub struct LabFrame {
    pub eps_c: f64,
    pub kerr: f64,
    pub ej_sigma: f64,
    pub ej_delta: f64,
    pub phi_zps: f64,
    pub delta_phi: f64,
    pub omega_d: f64,
    pub cells: u32,
    pub delta_ext: f64,
    /// Use sin(δφ cos ω_d t) instead of its linearization δφ cos ω_d t.
    pub exact_drive: bool,
}

impl LabFrame {
    pub fn from_circuit(c: &CircuitParams, exact_drive: bool) -> Result<Self> {
        if c.topology != Topology::Sts {
            return Err(Error::Topology("lab-frame model is defined for STS circuits".into()));
        }
        let p = crate::circuit::sts_effective_params(c)?;
        Ok(Self {
            eps_c: p.eps_c,
            kerr: p.kerr,
            ej_sigma: p.ej_sigma,
            ej_delta: crate::circuit::mhz_to_angular(c.ej_delta()),
            phi_zps: p.phi_zps,
            delta_phi: c.delta_phi,
            omega_d: c.omega_d,
            cells: c.m,
            delta_ext: c.delta_ext,
            exact_drive,
        })
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_d
    }

    fn modulation(&self, t: f64) -> f64 {
        let x = self.delta_phi * (self.omega_d * t).cos();
        if self.exact_drive {
            x.sin()
        } else {
            x
        }
    }

    /// Operator at time `t` with the phase operator φ_zps(a e^{−iθ} + a† e^{iθ})
    /// and the oscillator term `linear_coeff`·n̂.
    fn assemble(&self, space: FockSpace, t: f64, theta: f64, linear_coeff: f64) -> Operator {
        let (a, ad, n) = ladder_ops(space);
        let phase = c64::from_polar(1.0, theta);
        let x = &(&(&a * phase.conj()) + &(&ad * phase)) * self.phi_zps;
        let x2 = &x * &x;
        let x4 = &x2 * &x2;
        let m2 = (self.cells as f64).powi(2);
        let kerr_term = Operator::diagonal(space, |k| {
            let kf = k as f64;
            kf * (kf - 1.0)
        });
        let mut h = &(&n * linear_coeff) - &(&kerr_term * self.kerr);
        let s = self.modulation(t);
        let drive = &(&x2 * -0.5) + &(&x4 * (1.0 / (24.0 * m2)));
        h = &h - &(&drive * (2.0 * self.ej_sigma * s));
        if self.ej_delta != 0.0 {
            let x3 = &x2 * &x;
            let odd = &x - &(&x3 * (1.0 / (6.0 * m2)));
            let c = (self.delta_phi * (self.omega_d * t).cos()).cos();
            h = &h - &(&odd * (2.0 * self.ej_delta * c));
        }
        h
    }
}

/// Lab-frame H(t). The oscillator frequency carries the −2K normal-ordering
/// shift so that the rotating-frame detuning matches the effective Δ.
pub fn build_lab_frame(lab: &LabFrame, space: FockSpace, t: f64) -> Operator {
    lab.assemble(space, t, 0.0, lab.eps_c - 2.0 * lab.kerr + lab.delta_ext)
}

/// H(t) in the frame rotating at ω_d/2.
pub fn build_rotating_frame(lab: &LabFrame, space: FockSpace, t: f64) -> Operator {
    let detuning = lab.eps_c - 2.0 * lab.kerr - lab.omega_d / 2.0 + lab.delta_ext;
    lab.assemble(space, t, lab.omega_d * t / 2.0, detuning)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    /// Local maximum of E_cl: the Kerr term is negative, so the stable
    /// cat-state wells sit at the top of the surface.
    Well,
    Hill,
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub p: f64,
    pub energy: f64,
    pub kind: ExtremumKind,
}

#[derive(Clone, Debug)]
pub struct ClassicalSurface {
    pub grid: PhaseGrid,
    /// Row-major in p then x.
    pub values: Vec<f64>,
    pub extrema: Vec<Extremum>,
}

/// E_cl with a → x + ip, a† → x − ip and no ordering corrections.
pub fn classical_energy(c: &KerrCoefficients, x: f64, p: f64) -> f64 {
    let r = x * x + p * p;
    let q = x * x - p * p;
    c.delta * r + 2.0 * c.eps2 * q - c.kerr * r * r
        + 2.0 * c.lambda * r * q
        + 2.0 * c.theta * (x.powi(4) - 6.0 * x * x * p * p + p.powi(4))
}

fn classical_gradient(c: &KerrCoefficients, x: f64, p: f64) -> [f64; 2] {
    let r = x * x + p * p;
    let q = x * x - p * p;
    let ex = 2.0 * c.delta * x + 4.0 * c.eps2 * x - 4.0 * c.kerr * r * x
        + 4.0 * c.lambda * x * (q + r)
        + 8.0 * c.theta * (x.powi(3) - 3.0 * x * p * p);
    let ep = 2.0 * c.delta * p - 4.0 * c.eps2 * p - 4.0 * c.kerr * r * p
        + 4.0 * c.lambda * p * (q - r)
        + 8.0 * c.theta * (p.powi(3) - 3.0 * x * x * p);
    [ex, ep]
}

fn classical_hessian(c: &KerrCoefficients, x: f64, p: f64) -> [[f64; 2]; 2] {
    let h = 1e-6 * (1.0 + x.abs() + p.abs());
    let gxp = classical_gradient(c, x + h, p);
    let gxm = classical_gradient(c, x - h, p);
    let gpp = classical_gradient(c, x, p + h);
    let gpm = classical_gradient(c, x, p - h);
    let hxx = (gxp[0] - gxm[0]) / (2.0 * h);
    let hpp = (gpp[1] - gpm[1]) / (2.0 * h);
    let hxp = 0.5 * ((gxp[1] - gxm[1]) + (gpp[0] - gpm[0])) / (2.0 * h);
    [[hxx, hxp], [hxp, hpp]]
}

/// Evaluates E_cl on `grid` and locates its stationary points by a grid scan
/// for local minima of |∇E|² followed by Newton refinement.
pub fn classical_surface(c: &KerrCoefficients, grid: &PhaseGrid) -> ClassicalSurface {
    let (nx, np) = (grid.xs.len(), grid.ps.len());
    let mut values = Vec::with_capacity(nx * np);
    let mut grad2 = Vec::with_capacity(nx * np);
    for &p in &grid.ps {
        for &x in &grid.xs {
            values.push(classical_energy(c, x, p));
            let g = classical_gradient(c, x, p);
            grad2.push(g[0] * g[0] + g[1] * g[1]);
        }
    }
    let scale = c.kerr.abs().max(c.delta.abs()).max(c.eps2.abs()).max(f64::MIN_POSITIVE);
    let spacing = grid_spacing(&grid.xs).max(grid_spacing(&grid.ps));
    let mut extrema: Vec<Extremum> = Vec::new();
    for ip in 0..np {
        for ix in 0..nx {
            let here = grad2[ip * nx + ix];
            let mut is_min = true;
            for (dx, dp) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let (jx, jp) = (ix as i64 + dx, ip as i64 + dp);
                if jx < 0 || jp < 0 || jx >= nx as i64 || jp >= np as i64 {
                    continue;
                }
                if grad2[jp as usize * nx + jx as usize] < here {
                    is_min = false;
                    break;
                }
            }
            if !is_min {
                continue;
            }
            let Some((x, p)) = newton_stationary(c, grid.xs[ix], grid.ps[ip], scale) else { continue };
            if x < grid.xs[0] - spacing || x > grid.xs[nx - 1] + spacing {
                continue;
            }
            if p < grid.ps[0] - spacing || p > grid.ps[np - 1] + spacing {
                continue;
            }
            if extrema.iter().any(|e| (e.x - x).hypot(e.p - p) < 1e-6) {
                continue;
            }
            let hs = classical_hessian(c, x, p);
            let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
            let kind = if det < 0.0 {
                ExtremumKind::Saddle
            } else if hs[0][0] + hs[1][1] < 0.0 {
                ExtremumKind::Well
            } else {
                ExtremumKind::Hill
            };
            extrema.push(Extremum { x, p, energy: classical_energy(c, x, p), kind });
        }
    }
    extrema.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.p.total_cmp(&b.p)));
    ClassicalSurface { grid: grid.clone(), values, extrema }
}

fn grid_spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64
    }
}

fn newton_stationary(c: &KerrCoefficients, mut x: f64, mut p: f64, scale: f64) -> Option<(f64, f64)> {
    for _ in 0..100 {
        let g = classical_gradient(c, x, p);
        if g[0].hypot(g[1]) < 1e-12 * scale * (1.0 + x.abs() + p.abs()).powi(3) {
            return Some((x, p));
        }
        let h = classical_hessian(c, x, p);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dp = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        x -= dx;
        p -= dp;
        if !(x.is_finite() && p.is_finite()) {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{mhz_to_angular, sts_effective_params};
    use crate::fock::{coherent_state, parity_operator};

    fn space(d: usize) -> FockSpace {
        FockSpace::new(d).unwrap()
    }

    #[test]
    fn kerr_only_spectrum() {
        let h = build_static(&HamiltonianSpec::Rkc { eps2: 0.0, kerr: 2.0 }, space(12)).unwrap();
        for n in 0..12 {
            let nf = n as f64;
            assert_eq!(h.get(n, n).re, -2.0 * nf * (nf - 1.0));
        }
    }

    #[test]
    fn matches_ladder_products() {
        let s = space(14);
        let (a, ad, n) = ladder_ops(s);
        let c = KerrCoefficients { delta: 0.3, eps2: 1.7, kerr: 1.1, lambda: -0.2, theta: 0.05 };
        let a2 = &a * &a;
        let ad2 = &ad * &ad;
        let mut h = &n * c.delta;
        h = &h + &(&(&ad2 + &a2) * c.eps2);
        h = &h - &(&(&ad2 * &a2) * c.kerr);
        h = &h + &(&(&(&ad * &(&a2 * &a)) + &(&(&ad2 * &ad) * &a)) * c.lambda);
        h = &h + &(&(&ad.pow(4) + &a.pow(4)) * c.theta);
        assert!((&h - &build_kerr(&c, s)).max_norm() < 1e-12);
    }

    #[test]
    fn rkc_is_dkc_at_zero_detuning() {
        let s = space(20);
        let a = build_static(&HamiltonianSpec::Rkc { eps2: 3.0, kerr: 1.5 }, s).unwrap();
        let b = build_static(&HamiltonianSpec::Dkc { delta: 0.0, eps2: 3.0, kerr: 1.5 }, s).unwrap();
        assert_eq!((&a - &b).max_norm(), 0.0);
    }

    #[test]
    fn coherent_states_are_eigenstates() {
        let s = space(60);
        for ratio in [1.0, 2.0, 4.0] {
            let h = build_static(&HamiltonianSpec::Rkc { eps2: ratio, kerr: 1.0 }, s).unwrap();
            for sign in [1.0, -1.0] {
                let psi = coherent_state(c64::new(sign * ratio.sqrt(), 0.0), s).unwrap();
                let hv = h.apply(&psi);
                let resid: f64 =
                    hv.iter().zip(psi.amps()).map(|(x, y)| (x - y * ratio * ratio).norm_sqr()).sum::<f64>().sqrt();
                assert!(resid <= 1e-8 * h.max_norm());
            }
        }
    }

    #[test]
    fn parity_commutes() {
        let s = space(30);
        let p = parity_operator(s);
        let c = CircuitParams { delta_phi: 0.05, ..Default::default() };
        let sts = sts_effective_params(&c).unwrap();
        let h = build_static(&HamiltonianSpec::StsEffective(sts), s).unwrap();
        assert!(h.commutator(&p).max_norm() <= 1e-12 * h.max_norm());
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let hl = build_rotating_frame(&lab, s, 0.37 * lab.period());
        assert!(hl.commutator(&p).max_norm() <= 1e-12 * hl.max_norm());
    }

    #[test]
    fn lab_frame_drive_vanishes_at_node() {
        let c = CircuitParams { delta_phi: 0.1, m: 2, n: 4, ..Default::default() };
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let s = space(16);
        let t = lab.period() / 4.0;
        let h = build_lab_frame(&lab, s, t);
        let bare = build_lab_frame(&LabFrame { delta_phi: 0.0, ..lab.clone() }, s, t);
        assert!((&h - &bare).max_norm() < 1e-9 * h.max_norm());
    }

    #[test]
    fn lab_frame_period_average_and_periodicity() {
        let c = CircuitParams { delta_phi: 0.1, ..Default::default() };
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let s = space(12);
        let steps = 64;
        let mut avg = Operator::zeros(s);
        for k in 0..steps {
            let t = lab.period() * k as f64 / steps as f64;
            avg = &avg + &(&build_lab_frame(&lab, s, t) * (1.0 / steps as f64));
        }
        let bare = build_lab_frame(&LabFrame { delta_phi: 0.0, ..lab.clone() }, s, 0.0);
        assert!((&avg - &bare).max_norm() < 1e-10 * bare.max_norm());
        let t = 0.123 * lab.period();
        let h1 = build_lab_frame(&lab, s, t);
        let h2 = build_lab_frame(&lab, s, t + lab.period());
        assert!((&h1 - &h2).max_norm() < 1e-9 * h1.max_norm());
    }

    #[test]
    fn rotating_frame_average_reproduces_squeezing() {
        let c = CircuitParams { delta_phi: 0.02, m: 2, n: 4, ..Default::default() };
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let p = sts_effective_params(&c).unwrap();
        let s = space(10);
        let steps = 256;
        let mut avg = Operator::zeros(s);
        for k in 0..steps {
            let t = lab.period() * (k as f64 + 0.5) / steps as f64;
            avg = &avg + &(&build_rotating_frame(&lab, s, t) * (1.0 / steps as f64));
        }
        // ⟨2|H̄|0⟩ = √2 ε₂ from G₂ a†² plus the 6G₄ a†² part of the normal-ordered quartic.
        let expected = 2f64.sqrt() * p.eps2;
        assert!((avg.get(2, 0).re - expected).abs() < 1e-6 * expected.abs());
    }

    #[test]
    fn exact_drive_close_to_linear() {
        let c = CircuitParams { delta_phi: 0.2, ..Default::default() };
        let lin = LabFrame::from_circuit(&c, false).unwrap();
        let exact = LabFrame { exact_drive: true, ..lin.clone() };
        let s = space(8);
        let t = 0.1 * lin.period();
        let diff = (&build_lab_frame(&lin, s, t) - &build_lab_frame(&exact, s, t)).max_norm();
        let drive_part = (&build_lab_frame(&LabFrame { delta_phi: 1.0, ..lin.clone() }, s, 0.0)
            - &build_lab_frame(&LabFrame { delta_phi: 0.0, ..lin.clone() }, s, 0.0))
            .max_norm();
        assert!(diff > 0.0);
        assert!(diff <= 0.2f64.powi(3) / 6.0 * drive_part * 1.000_001);
    }

    #[test]
    fn symmetric_surface_without_squeezing() {
        let c = KerrCoefficients { delta: 2.0, kerr: 1.0, ..Default::default() };
        for r in [0.3, 1.0, 1.7] {
            let e0 = classical_energy(&c, r, 0.0);
            for k in 0..16 {
                let th = k as f64 * 0.4;
                assert!((classical_energy(&c, r * th.cos(), r * th.sin()) - e0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detuned_double_well_topology() {
        let c = KerrCoefficients::from_ratios(1.0, 4.0, 0.3, 0.0);
        let grid = PhaseGrid::uniform((-3.0, 3.0), 121, (-3.0, 3.0), 121);
        let surf = classical_surface(&c, &grid);
        let wells: Vec<_> = surf.extrema.iter().filter(|e| e.kind == ExtremumKind::Well).collect();
        let saddles: Vec<_> = surf.extrema.iter().filter(|e| e.kind == ExtremumKind::Saddle).collect();
        assert_eq!(wells.len(), 2);
        assert_eq!(saddles.len(), 2);
        for w in &wells {
            assert!(w.p.abs() < 1e-9 && (w.x.abs() - 2.3f64.sqrt()).abs() < 1e-9);
        }
        for s in &saddles {
            assert!(s.x.abs() < 1e-9 && (s.p.abs() - 1.7f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn resonant_well_position() {
        let c = KerrCoefficients::from_ratios(mhz_to_angular(1.0), 0.0, 2.5, 0.0);
        let grid = PhaseGrid::uniform((-3.0, 3.0), 61, (-2.0, 2.0), 41);
        let surf = classical_surface(&c, &grid);
        let wells: Vec<_> = surf.extrema.iter().filter(|e| e.kind == ExtremumKind::Well).collect();
        assert_eq!(wells.len(), 2);
        assert!((wells[1].x * wells[1].x - 2.5).abs() < 1e-9);
        for (k, v) in surf.values.iter().enumerate() {
            let (ix, ip) = (k % 61, k / 61);
            let mirrored = surf.values[(40 - ip) * 61 + (60 - ix)];
            assert!((v - mirrored).abs() < 1e-9 * v.abs().max(1.0));
        }
    }
}
