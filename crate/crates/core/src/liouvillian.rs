//! Dense Lindblad engine: superoperator assembly, time evolution, steady
//! states and the decay rate of the cat-doublet coherence.
//!
//! Vectorization is column-stacking, vec(ρ)[i + d·j] = ρ_ij, so that
//! vec(AρB) = (Bᵀ ⊗ A) vec(ρ).

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::dissipation::DissipatorTerm;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockSpace, Operator};
use crate::spectra::paired_spectrum;

/// Largest dimension for which the d²×d² superoperator is assembled.
pub const MAX_SUPEROPERATOR_DIM: usize = 128;
/// Largest dimension for the dense Liouvillian eigensolve.
pub const MAX_EIGEN_DIM: usize = 40;

#[derive(Clone, Debug)]
pub struct MasterEquation {
    h: Operator,
    terms: Vec<DissipatorTerm>,
    /// O†O for each term, cached.
    products: Vec<Mat<c64>>,
}

impl MasterEquation {
    pub fn new(h: Operator, terms: Vec<DissipatorTerm>) -> Result<Self> {
        for t in &terms {
            if t.jump.dim() != h.dim() {
                return Err(Error::DimensionMismatch { left: h.dim(), right: t.jump.dim() });
            }
            if !(t.rate >= 0.0 && t.rate.is_finite()) {
                return Err(Error::Domain(format!("rate of '{}' is {}", t.label, t.rate)));
            }
        }
        let products = terms.iter().map(|t| t.jump.mat().adjoint() * t.jump.mat()).collect();
        Ok(Self { h, terms, products })
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn terms(&self) -> &[DissipatorTerm] {
        &self.terms
    }

    pub fn space(&self) -> FockSpace {
        self.h.space()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// True when the Hamiltonian and every jump have definite photon-number
    /// parity, so the superoperator splits into population and coherence sectors.
    pub fn is_parity_symmetric(&self) -> bool {
        self.h.parity_class().is_some() && self.terms.iter().all(|t| t.rate == 0.0 || t.jump.parity_class().is_some())
    }

    /// L(ρ) applied to an unvectorized matrix.
    pub fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let h = self.h.mat();
        let minus_i = c64::new(0.0, -1.0);
        let mut out = (h * rho - rho * h) * faer::Scale(minus_i);
        for (t, m) in self.terms.iter().zip(&self.products) {
            if t.rate == 0.0 {
                continue;
            }
            let o = t.jump.mat();
            let d = o * rho * o.adjoint() - (m * rho + rho * m) * faer::Scale(c64::new(0.5, 0.0));
            out = out + d * faer::Scale(c64::new(t.rate, 0.0));
        }
        out
    }

    /// Superoperator element ⟨⟨ij|L|kl⟩⟩.
    fn element(&self, i: usize, j: usize, k: usize, l: usize) -> c64 {
        let h = self.h.mat();
        let zero = c64::new(0.0, 0.0);
        let mut v = zero;
        if j == l {
            v += c64::new(0.0, -1.0) * h[(i, k)];
        }
        if i == k {
            v += c64::new(0.0, 1.0) * h[(l, j)];
        }
        for (t, m) in self.terms.iter().zip(&self.products) {
            if t.rate == 0.0 {
                continue;
            }
            let o = t.jump.mat();
            let mut s = o[(i, k)] * o[(j, l)].conj();
            if j == l {
                s -= m[(i, k)] * 0.5;
            }
            if i == k {
                s -= m[(l, j)] * 0.5;
            }
            v += s * t.rate;
        }
        v
    }

    /// Restriction of L to the basis elements |k⟩⟨l| listed in `basis`.
    fn restricted(&self, basis: &[(usize, usize)]) -> Mat<c64> {
        Mat::from_fn(basis.len(), basis.len(), |r, c| {
            let (i, j) = basis[r];
            let (k, l) = basis[c];
            self.element(i, j, k, l)
        })
    }
}

fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        return Err(Error::ResourceGuard { what, value, limit });
    }
    Ok(())
}

pub fn build_superoperator(me: &MasterEquation) -> Result<Mat<c64>> {
    build_superoperator_with_limit(me, MAX_SUPEROPERATOR_DIM)
}

pub fn build_superoperator_with_limit(me: &MasterEquation, max_dim: usize) -> Result<Mat<c64>> {
    let d = me.dim();
    guard("superoperator dimension", d, max_dim)?;
    Ok(Mat::from_fn(d * d, d * d, |r, c| me.element(r % d, r / d, c % d, c / d)))
}

/// Basis |k⟩⟨l| with k + l of the given parity, in column-stacking order.
fn sector_basis(d: usize, odd: bool) -> Vec<(usize, usize)> {
    let mut b = Vec::with_capacity(d * d / 2 + 1);
    for l in 0..d {
        for k in 0..d {
            if ((k + l) % 2 == 1) == odd {
                b.push((k, l));
            }
        }
    }
    b
}

pub fn vectorize(rho: &Mat<c64>) -> Vec<c64> {
    let d = rho.nrows();
    (0..d * d).map(|r| rho[(r % d, r / d)]).collect()
}

pub fn unvectorize(v: &[c64], d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |i, j| v[i + d * j])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11, max_steps: 10_000_000 }
    }
}

pub fn evolve(me: &MasterEquation, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    evolve_with(me, rho0, t_grid, &EvolveOptions::default())
}

// Dormand-Prince 5(4) tableau.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn max_abs(m: &Mat<c64>) -> f64 {
    m.norm_max()
}

/// Adaptive Dormand-Prince integration of dρ/dt = L(ρ), reporting ρ at each
/// time of the nondecreasing grid `t_grid` (time zero is the initial state).
pub fn evolve_with(me: &MasterEquation, rho0: &DensityMatrix, t_grid: &[f64], opts: &EvolveOptions) -> Result<Vec<DensityMatrix>> {
    if rho0.space() != me.space() {
        return Err(Error::DimensionMismatch { left: me.dim(), right: rho0.space().dim() });
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be nonnegative and nondecreasing".into()));
    }
    let scale = me.h.max_norm()
        + me.terms.iter().zip(&me.products).map(|(t, m)| t.rate * m.norm_max()).sum::<f64>()
        + f64::MIN_POSITIVE;
    let mut h = 0.05 / scale;
    let mut t = 0.0;
    let mut y = rho0.mat().clone();
    let mut k1 = me.apply(&y);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut steps = 0usize;
    for &target in t_grid {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integrator(format!("step budget exhausted at t = {t}")));
            }
            let last = target - t <= h;
            let dt = if last { target - t } else { h };
            let mut ks: Vec<Mat<c64>> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        ys = ys + kj * faer::Scale(c64::new(dt * a, 0.0));
                    }
                }
                ks.push(me.apply(&ys));
            }
            let mut y5 = y.clone();
            let mut diff = Mat::<c64>::zeros(y.nrows(), y.ncols());
            for s in 0..7 {
                if DP_B5[s] != 0.0 {
                    y5 = y5 + &ks[s] * faer::Scale(c64::new(dt * DP_B5[s], 0.0));
                }
                let e = DP_B5[s] - DP_B4[s];
                if e != 0.0 {
                    diff = diff + &ks[s] * faer::Scale(c64::new(dt * e, 0.0));
                }
            }
            let tol = opts.atol + opts.rtol * max_abs(&y).max(max_abs(&y5));
            let err = max_abs(&diff) / tol;
            if err <= 1.0 {
                t = if last { target } else { t + dt };
                y = y5;
                k1 = ks.swap_remove(6);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(err <= 1.0 && last) {
                h = dt * factor;
            }
            if h < 1e-14 * (1.0 + t) {
                return Err(Error::Integrator(format!("step size underflow at t = {t}")));
            }
        }
        let sym = (&y + y.adjoint()) * faer::Scale(c64::new(0.5, 0.0));
        out.push(DensityMatrix::new_unchecked(me.space(), sym));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SteadyAnalysis {
    pub rho: DensityMatrix,
    /// Eigenvalues of ρ_ss, descending.
    pub probabilities: Vec<f64>,
    /// 1 − P₁ − P₂.
    pub leakage: f64,
    pub warnings: Vec<String>,
}

/// Solves L ρ = 0 with Tr ρ = 1 by replacing one equation with the trace
/// condition. A second solve with a different replaced equation detects a
/// degenerate kernel. Parity-symmetric problems are solved in the population
/// sector only.
pub fn steady_state(me: &MasterEquation) -> Result<SteadyAnalysis> {
    let d = me.dim();
    guard("superoperator dimension", d, MAX_SUPEROPERATOR_DIM)?;
    let basis = if me.is_parity_symmetric() {
        sector_basis(d, false)
    } else {
        (0..d * d).map(|r| (r % d, r / d)).collect()
    };
    let l = me.restricted(&basis);
    let diag_rows: Vec<usize> = basis.iter().enumerate().filter(|(_, &(k, l))| k == l).map(|(r, _)| r).collect();
    // Each solve swaps one equation for a normalization Σ w_k ρ_kk = 1. A
    // unique kernel gives the same normalized ρ for any weights; a degenerate
    // one generically does not.
    let solve_with = |row: usize, weight: &dyn Fn(usize) -> f64| -> Result<Mat<c64>> {
        let mut a = l.clone();
        for c in 0..basis.len() {
            a[(row, c)] = c64::new(0.0, 0.0);
        }
        for &r in &diag_rows {
            a[(row, r)] = c64::new(weight(basis[r].0), 0.0);
        }
        let mut rhs = Mat::<c64>::zeros(basis.len(), 1);
        rhs[(row, 0)] = c64::new(1.0, 0.0);
        let x = a.partial_piv_lu().solve(&rhs);
        let mut rho = Mat::<c64>::zeros(d, d);
        for (r, &(k, l)) in basis.iter().enumerate() {
            rho[(k, l)] = x[(r, 0)];
        }
        let tr: c64 = (0..d).map(|i| rho[(i, i)]).sum();
        if !(rho.norm_max().is_finite() && tr.norm() > 0.0) {
            return Err(Error::Linalg("steady-state system is singular".into()));
        }
        Ok(rho * faer::Scale(tr.inv()))
    };
    let first = solve_with(diag_rows[0], &|_| 1.0)?;
    let second = solve_with(diag_rows[diag_rows.len() / 2], &|k| 1.0 + 0.37 * k as f64)?;
    let mut warnings = Vec::new();
    let mismatch = (&first - &second).norm_max();
    if mismatch > 1e-6 {
        warnings.push(format!("degenerate steady-state kernel (solutions differ by {mismatch:.2e})"));
    }
    let rho = (&first + first.adjoint()) * faer::Scale(c64::new(0.5, 0.0));
    let rho = DensityMatrix::new_unchecked(me.space(), rho);
    let (probabilities, _) = rho.spectrum()?;
    let top2: f64 = probabilities.iter().take(2).sum();
    Ok(SteadyAnalysis { leakage: 1.0 - top2, rho, probabilities, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceRate {
    pub lambda: c64,
    /// −Re λ, μs⁻¹.
    pub rate: f64,
    /// Weight of the mode on |ψ₀⁺⟩⟨ψ₀⁻| and |ψ₀⁻⟩⟨ψ₀⁺|.
    pub doublet_weight: f64,
}

impl CoherenceRate {
    pub fn t_alpha(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Top even and odd eigenstates of H, or its top two eigenstates when H has
/// no definite parity.
fn ground_doublet(h: &Operator) -> Result<(Vec<c64>, Vec<c64>)> {
    match paired_spectrum(h, 1) {
        Ok(ps) => Ok((ps.even_states[0].amps().to_vec(), ps.odd_states[0].amps().to_vec())),
        Err(Error::ParitySymmetry(_)) => {
            let (vals, vecs) = h.hermitian_eigen()?;
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
            let col = |k: usize| vecs.col(order[k]).iter().copied().collect();
            Ok((col(0), col(1)))
        }
        Err(e) => Err(e),
    }
}

/// Slowest-decaying mode of the cat-doublet coherence in the full
/// Liouvillian. Coherences of excited pairs can outlive it, so modes are
/// selected by their weight on |ψ₀⁺⟩⟨ψ₀⁻| and its adjoint rather than by rate
/// alone. With definite parity everywhere only the coherence sector is
/// diagonalized.
pub fn slowest_coherence_rate(me: &MasterEquation) -> Result<CoherenceRate> {
    let d = me.dim();
    guard("Liouvillian eigensolve dimension", d, MAX_EIGEN_DIM)?;
    let (even, odd) = ground_doublet(me.hamiltonian())?;
    let (basis, l) = if me.is_parity_symmetric() {
        let basis = sector_basis(d, true);
        let l = me.restricted(&basis);
        (basis, l)
    } else {
        ((0..d * d).map(|r| (r % d, r / d)).collect(), build_superoperator(me)?)
    };
    let eig = l.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    // ⟨a|R|b⟩ for R = Σ v_r |k_r⟩⟨l_r|.
    let project = |v: &[c64], a: &[c64], b: &[c64]| -> c64 {
        basis.iter().zip(v).map(|(&(k, l), z)| a[k].conj() * z * b[l]).sum()
    };
    let mut best: Option<CoherenceRate> = None;
    for k in 0..basis.len() {
        let v: Vec<c64> = u.col(k).iter().copied().collect();
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let w = (project(&v, &even, &odd).norm_sqr() + project(&v, &odd, &even).norm_sqr()) / total;
        if w <= 0.5 {
            continue;
        }
        if best.is_none_or(|b| s[k].re > b.lambda.re) {
            best = Some(CoherenceRate { lambda: s[k], rate: -s[k].re, doublet_weight: w });
        }
    }
    best.ok_or_else(|| Error::ModeIdentification { spectrum: s.iter().copied().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::{dephasing_term, DissipatorTerm};
    use crate::fock::{ladder_ops, StateVector};
    use crate::hamiltonian::{build_kerr, KerrCoefficients};

    fn space(d: usize) -> FockSpace {
        FockSpace::new(d).unwrap()
    }

    fn loss(s: FockSpace, rate: f64) -> DissipatorTerm {
        let (a, _, _) = ladder_ops(s);
        DissipatorTerm::new(rate, a, "loss").unwrap()
    }

    fn gain(s: FockSpace, rate: f64) -> DissipatorTerm {
        let (_, ad, _) = ladder_ops(s);
        DissipatorTerm::new(rate, ad, "gain").unwrap()
    }

    fn sample_rho(s: FockSpace) -> DensityMatrix {
        let d = s.dim();
        let psi1 = StateVector::new(s, (0..d).map(|k| c64::new(1.0 / (k + 1) as f64, 0.3 * k as f64 / d as f64)).collect())
            .unwrap();
        let psi2 = StateVector::new(s, (0..d).map(|k| c64::new((k as f64).cos(), (k as f64 * 0.7).sin())).collect()).unwrap();
        DensityMatrix::mixture(&[(0.6, psi1), (0.4, psi2)]).unwrap()
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let s = space(6);
        let h = build_kerr(&KerrCoefficients::from_ratios(1.0, 0.4, 1.5, 0.1), s);
        let me = MasterEquation::new(h, vec![loss(s, 0.2), gain(s, 0.05), dephasing_term(0.03, s).unwrap()]).unwrap();
        let l = build_superoperator(&me).unwrap();
        let rho = sample_rho(s);
        let v = vectorize(rho.mat());
        let lv: Vec<c64> = (0..36).map(|r| (0..36).map(|c| l[(r, c)] * v[c]).sum()).collect();
        let direct = vectorize(&me.apply(rho.mat()));
        for (a, b) in lv.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
        let tr: c64 = (0..6).map(|i| me.apply(rho.mat())[(i, i)]).sum();
        assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn unitary_spectrum() {
        let s = space(5);
        let h = Operator::diagonal(s, |n| (n * n) as f64 * 0.7);
        let me = MasterEquation::new(h, vec![]).unwrap();
        let l = build_superoperator(&me).unwrap();
        let mut got: Vec<f64> = l.eigenvalues().unwrap().into_iter().map(|z| z.im).collect();
        let mut expect = vec![];
        for j in 0..5 {
            for k in 0..5 {
                expect.push(-0.7 * ((j * j) as f64 - (k * k) as f64));
            }
        }
        got.sort_by(f64::total_cmp);
        expect.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(slowest_coherence_rate(&me).unwrap().rate.abs() < 1e-12, true);
    }

    #[test]
    fn vacuum_is_dark() {
        let s = space(6);
        let me = MasterEquation::new(Operator::zeros(s), vec![loss(s, 1.0)]).unwrap();
        let vac = DensityMatrix::pure(&StateVector::fock(s, 0));
        assert!(me.apply(vac.mat()).norm_max() < 1e-15);
        let ss = steady_state(&me).unwrap();
        assert!((ss.probabilities[0] - 1.0).abs() < 1e-12);
        assert!(ss.leakage.abs() < 1e-12);
        assert!(ss.warnings.is_empty());
    }

    #[test]
    fn thermal_steady_state() {
        let s = space(30);
        let n_th: f64 = 0.2;
        let h = Operator::diagonal(s, |n| n as f64);
        let me = MasterEquation::new(h, vec![loss(s, 1.0 + n_th), gain(s, n_th)]).unwrap();
        let ss = steady_state(&me).unwrap();
        let ratio = n_th / (1.0 + n_th);
        for k in 0..5 {
            let expect = (1.0 - ratio) * ratio.powi(k as i32);
            assert!((ss.rho.mat()[(k, k)].re - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_system_flags_degenerate_kernel() {
        let s = space(4);
        let me = MasterEquation::new(Operator::diagonal(s, |n| n as f64 * 1.3), vec![]).unwrap();
        match steady_state(&me) {
            Ok(ss) => assert!(!ss.warnings.is_empty()),
            Err(Error::Linalg(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn single_photon_decay() {
        let s = space(4);
        let me = MasterEquation::new(Operator::zeros(s), vec![loss(s, 0.7)]).unwrap();
        let rho0 = DensityMatrix::pure(&StateVector::fock(s, 1));
        let ts = [0.0, 0.5, 1.0, 3.0];
        let traj = evolve(&me, &rho0, &ts).unwrap();
        let (_, _, n) = ladder_ops(s);
        for (t, r) in ts.iter().zip(&traj) {
            assert!((r.expect(&n).re - (-0.7 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn unitary_evolution_keeps_purity() {
        let s = space(12);
        let h = build_kerr(&KerrCoefficients::from_ratios(1.0, 0.3, 2.0, 0.0), s);
        let me = MasterEquation::new(h, vec![]).unwrap();
        let rho0 = DensityMatrix::pure(&StateVector::fock(s, 0));
        let traj = evolve(&me, &rho0, &[0.0, 1.0, 2.5]).unwrap();
        assert_eq!(traj[0].mat(), rho0.mat());
        for r in &traj {
            assert!((r.purity() - 1.0).abs() < 1e-8);
            assert!((r.trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn qubit_dephasing_rate() {
        let s = space(2);
        let me = MasterEquation::new(Operator::zeros(s), vec![dephasing_term(0.4, s).unwrap()]).unwrap();
        let r = slowest_coherence_rate(&me).unwrap();
        // D[n] damps ρ₀₁ at half the channel rate.
        assert!((r.rate - 0.2).abs() < 1e-12);
    }

    #[test]
    fn parity_breaking_uses_full_classification() {
        let s = space(8);
        let (a, ad, _) = ladder_ops(s);
        let h = &build_kerr(&KerrCoefficients::from_ratios(1.0, 0.0, 1.0, 0.0), s) + &(&(&a + &ad) * 1e-3);
        let me = MasterEquation::new(h, vec![loss(s, 0.1)]).unwrap();
        assert!(!me.is_parity_symmetric());
        let r = slowest_coherence_rate(&me).unwrap();
        assert!(r.rate > 0.0);
    }

    #[test]
    fn size_guards() {
        let s = space(41);
        let me = MasterEquation::new(Operator::zeros(s), vec![]).unwrap();
        assert!(matches!(slowest_coherence_rate(&me), Err(Error::ResourceGuard { .. })));
        assert!(matches!(build_superoperator_with_limit(&me, 40), Err(Error::ResourceGuard { .. })));
    }
}
