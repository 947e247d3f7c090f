//! Property checks shared by the invariant suite and the acceptance runner.

#![allow(dead_code)]

use faer::Mat;
use kerrcat::c64;
use kerrcat::circuit::{dilution_scaling, mhz_to_angular, sts_effective_params, CircuitParams, EffectiveParams};
use kerrcat::dissipation::{dephasing_term, DissipatorTerm};
use kerrcat::fock::{ladder_ops, parity_operator, DensityMatrix, FockSpace, Operator};
use kerrcat::hamiltonian::{build_kerr, build_rotating_frame, KerrCoefficients, LabFrame};
use kerrcat::liouvillian::{evolve, MasterEquation};
use kerrcat::spectra::{floquet_with, FloquetOptions};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

pub fn space(d: usize) -> FockSpace {
    FockSpace::new(d).unwrap()
}

/// STS array whose bare transition sits exactly at half the drive frequency.
pub fn resonant_circuit() -> CircuitParams {
    let base = CircuitParams { m: 2, n: 4, ..Default::default() };
    let p = sts_effective_params(&base).unwrap();
    CircuitParams { omega_d: 2.0 * (p.eps_c - 2.0 * p.kerr), ..base }
}

#[derive(Clone, Debug)]
pub struct ModelCase {
    pub dim: usize,
    pub kerr: f64,
    pub delta: f64,
    pub eps2: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub n_th: f64,
    pub gamma_phi: f64,
    pub seed: Vec<f64>,
}

impl ModelCase {
    pub fn coefficients(&self) -> KerrCoefficients {
        KerrCoefficients::from_ratios(self.kerr, self.delta, self.eps2, self.lambda)
    }

    pub fn hamiltonian(&self) -> Operator {
        build_kerr(&self.coefficients(), space(self.dim))
    }

    /// Single-photon loss and gain with bare operators, plus dephasing.
    pub fn rwa_terms(&self) -> Vec<DissipatorTerm> {
        let s = space(self.dim);
        let (a, ad, _) = ladder_ops(s);
        vec![
            DissipatorTerm::new(self.gamma * (1.0 + self.n_th), a, "loss").unwrap(),
            DissipatorTerm::new(self.gamma * self.n_th, ad, "heating").unwrap(),
            dephasing_term(self.gamma_phi, s).unwrap(),
        ]
    }

    /// Hermitian, positive, unit-trace matrix built from the seed.
    pub fn density(&self) -> DensityMatrix {
        let d = self.dim;
        let g = Mat::from_fn(d, d, |i, j| {
            let k = (i * d + j) % self.seed.len();
            c64::new(self.seed[k], self.seed[(k + 1) % self.seed.len()] - 0.5)
        });
        let mut rho = &g * g.adjoint();
        let tr: c64 = (0..d).map(|i| rho[(i, i)]).sum();
        rho = rho * faer::Scale(tr.inv());
        DensityMatrix::new(space(d), rho).unwrap()
    }
}

pub fn model_case() -> impl Strategy<Value = ModelCase> {
    (
        6usize..12,
        0.5f64..5.0,
        -3.0f64..3.0,
        0.0f64..3.0,
        -0.2f64..0.2,
        0.0f64..0.2,
        0.0f64..0.5,
        0.0f64..0.05,
        prop::collection::vec(0.0f64..1.0, 7..13),
    )
        .prop_map(|(dim, kerr, delta, eps2, lambda, gamma, n_th, gamma_phi, seed)| ModelCase {
            dim,
            kerr,
            delta: delta * kerr,
            eps2: eps2 * kerr,
            lambda: lambda * kerr,
            gamma: gamma * kerr,
            n_th,
            gamma_phi: gamma_phi * kerr,
            seed,
        })
}

/// Norm defect of the one-period propagator of the driven circuit.
pub fn check_unitarity(delta_phi: f64, dim: usize) -> Check {
    let c = CircuitParams { delta_phi, ..resonant_circuit() };
    let opts = FloquetOptions { initial_steps: 64, max_steps: 1 << 10, tolerance: 1e-3, exact_drive: false };
    let f = floquet_with(&c, space(dim), 2, &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(f.unitarity_defect < 1e-10, "defect {}", f.unitarity_defect);
    Ok(())
}

/// Tr L(ρ) vanishes and evolution keeps unit trace.
pub fn check_trace_preservation(case: &ModelCase) -> Check {
    let me = MasterEquation::new(case.hamiltonian(), case.rwa_terms()).unwrap();
    let rho = case.density();
    let out = me.apply(rho.mat());
    let tr: c64 = (0..case.dim).map(|i| out[(i, i)]).sum();
    let scale = out.norm_max().max(1.0);
    prop_assert!(tr.norm() < 1e-12 * scale, "Tr L(ρ) = {tr}");
    let t_end = 0.5 / case.kerr;
    let states = evolve(&me, &rho, &[0.0, t_end]).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let final_tr = states.last().unwrap().trace();
    prop_assert!((final_tr - c64::new(1.0, 0.0)).norm() < 1e-8, "Tr ρ(t) = {final_tr}");
    Ok(())
}

/// The static and rotating-frame Hamiltonians commute with the photon parity.
pub fn check_parity_commutation(case: &ModelCase, phase: f64) -> Check {
    let s = space(case.dim);
    let parity = parity_operator(s);
    let h = case.hamiltonian();
    let defect = h.commutator(&parity).max_norm() / h.max_norm().max(1e-300);
    prop_assert!(defect < 1e-13, "static defect {defect}");
    let c = CircuitParams { delta_phi: 0.05, ..resonant_circuit() };
    let lab = LabFrame::from_circuit(&c, false).unwrap();
    let hr = build_rotating_frame(&lab, s, phase * lab.period());
    let defect = hr.commutator(&parity).max_norm() / hr.max_norm();
    prop_assert!(defect < 1e-13, "driven defect {defect}");
    Ok(())
}

/// Under single-photon and dephasing channels, ρ_kl with k + l even never
/// feeds elements with k + l odd and vice versa.
pub fn check_sector_decoupling(case: &ModelCase) -> Check {
    let me = MasterEquation::new(case.hamiltonian(), case.rwa_terms()).unwrap();
    prop_assert!(me.is_parity_symmetric());
    let d = case.dim;
    let rho = case.density();
    for odd in [false, true] {
        let part = Mat::from_fn(d, d, |i, j| if ((i + j) % 2 == 1) == odd { rho.mat()[(i, j)] } else { c64::new(0.0, 0.0) });
        let out = me.apply(&part);
        let scale = out.norm_max().max(1e-300);
        for i in 0..d {
            for j in 0..d {
                if ((i + j) % 2 == 1) != odd {
                    prop_assert!(out[(i, j)].norm() < 1e-13 * scale, "leak into ({i},{j})");
                }
            }
        }
    }
    Ok(())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Λ and ε₂ against their closed forms: Λ = −δφE_C/3 for a single cell and
/// Λ/ε₂ = −(φ²/3M²)/(1 − φ²/2M²) for any array. E_C is drawn as a fraction
/// of the array's transmon-branch E_J so every sample is a transmon.
pub fn check_lambda_closed_form(delta_phi: f64, ec_fraction: f64, ej: f64, m: u32, ratio: u32) -> Check {
    let ec = ec_fraction * ej / (m * ratio) as f64;
    let single = CircuitParams { delta_phi, ec, ej1: ej, ej2: ej, ej3: ej, ..Default::default() };
    let p = sts_effective_params(&single).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(rel(p.lambda, -delta_phi * mhz_to_angular(ec) / 3.0) < 1e-12);
    prop_assert!(rel(p.eps2, delta_phi / 4.0 * (p.eps_c - 2.0 * mhz_to_angular(ec))) < 1e-12);
    let arr = CircuitParams { m, n: m * ratio, ..single };
    let q = sts_effective_params(&arr).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let x = q.phi_zps.powi(2) / (m * m) as f64;
    prop_assert!(rel(q.lambda / q.eps2, -(x / 3.0) / (1.0 - x / 2.0)) < 1e-11);
    Ok(())
}

fn close(a: &EffectiveParams, b: &EffectiveParams) -> bool {
    [
        (a.kerr, b.kerr),
        (a.g2, b.g2),
        (a.g4, b.g4),
        (a.g1, b.g1),
        (a.g3, b.g3),
        (a.phi_zps, b.phi_zps),
        (a.eps_c, b.eps_c),
        (a.eps2, b.eps2),
        (a.lambda, b.lambda),
        (a.delta, b.delta),
    ]
    .iter()
    .all(|&(x, y)| x == y || rel(x, y) < 1e-12)
}

/// Diluting twice equals diluting once by the products, and both equal the
/// directly built array.
pub fn check_dilution_composition(delta_phi: f64, asym: f64, m1: u32, r1: u32, m2: u32, r2: u32) -> Check {
    let single = CircuitParams { delta_phi, ej1: 80_000.0 + asym, ej3: 80_000.0 - asym, ..Default::default() };
    let base = sts_effective_params(&single).unwrap();
    let (n1, n2) = (m1 * r1, m2 * r2);
    let twice = dilution_scaling(&dilution_scaling(&base, m1, n1), m2, n2);
    let once = dilution_scaling(&base, m1 * m2, n1 * n2);
    prop_assert!(close(&twice, &once), "{twice:?} vs {once:?}");
    let direct = sts_effective_params(&CircuitParams { m: m1 * m2, n: n1 * n2, ..single }).unwrap();
    prop_assert!(close(&direct, &once), "{direct:?} vs {once:?}");
    Ok(())
}
