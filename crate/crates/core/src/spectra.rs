//! Parity-resolved spectra, degeneracy scans, Floquet quasienergies and
//! adiabatic preparation of cat states.
//!
//! The Kerr term is negative, so the cat manifold sits at the top of the
//! spectrum. Levels are therefore ordered by descending energy and the
//! "ground" pair is the highest one.

use faer::{c64, Mat, Side};

use crate::circuit::{delta_phi_for_squeezing, effective_params, CircuitParams, Topology};
use crate::error::{Error, Result};
use crate::fock::{cat_state, FockSpace, Operator, Parity, StateVector};
use crate::hamiltonian::{build_kerr, KerrCoefficients, LabFrame};

/// Relative size of parity-breaking matrix elements tolerated by the sector
/// decomposition.
pub const PARITY_TOLERANCE: f64 = 1e-6;

pub(crate) fn sector_indices(dim: usize, parity: Parity) -> Vec<usize> {
    (0..dim).filter(|&n| Parity::of_level(n) == parity).collect()
}

pub(crate) fn sector_block(m: &Mat<c64>, idx: &[usize]) -> Mat<c64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Largest parity-mixing element relative to the largest element.
pub(crate) fn parity_contamination(m: &Mat<c64>) -> f64 {
    let mut mix = 0.0f64;
    let mut all = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)].norm();
            all = all.max(v);
            if (i + j) % 2 == 1 {
                mix = mix.max(v);
            }
        }
    }
    if all == 0.0 {
        0.0
    } else {
        mix / all
    }
}

/// Eigenpairs of a Hermitian block, energies descending.
fn descending_eigen(h: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let n = h.nrows();
    let vals: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let u = eig.U();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals.into_iter().rev().collect(), vecs))
}

fn descending_eigenvalues(h: &Mat<c64>) -> Result<Vec<f64>> {
    let mut vals = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    vals.reverse();
    Ok(vals)
}

/// exp(−i h H) for Hermitian H.
fn unitary_step(h_mat: &Mat<c64>, dt: f64) -> Result<Mat<c64>> {
    let eig = h_mat.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let n = h_mat.nrows();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * c64::from_polar(1.0, -dt * s[j].re));
    Ok(&scaled * u.adjoint())
}

/// Nodes and weights of the fourth-order commutator-free Magnus step
/// exp(−ih(w₀H₁ + w₁H₂))·exp(−ih(w₁H₁ + w₀H₂)), H₁ and H₂ at the Gauss points.
const CF4_NODES: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];
const CF4_WEIGHTS: [f64; 2] = [(3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0, (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0];

fn cf4_step(h1: &Mat<c64>, h2: &Mat<c64>, dt: f64) -> Result<Mat<c64>> {
    let [w0, w1] = CF4_WEIGHTS;
    let late = h1 * faer::Scale(c64::new(w0, 0.0)) + h2 * faer::Scale(c64::new(w1, 0.0));
    let early = h1 * faer::Scale(c64::new(w1, 0.0)) + h2 * faer::Scale(c64::new(w0, 0.0));
    Ok(&unitary_step(&late, dt)? * &unitary_step(&early, dt)?)
}

fn unitarity_defect(u: &Mat<c64>) -> f64 {
    let n = u.nrows();
    let p = u * u.adjoint();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelPair {
    pub even: f64,
    pub odd: f64,
}

impl LevelPair {
    pub fn splitting(&self) -> f64 {
        self.even - self.odd
    }
}

#[derive(Clone, Debug)]
pub struct PairedSpectrum {
    /// Energies relative to the top even level.
    pub pairs: Vec<LevelPair>,
    pub even_states: Vec<StateVector>,
    pub odd_states: Vec<StateVector>,
    /// Absolute energy of the top even level.
    pub offset: f64,
}

impl PairedSpectrum {
    pub fn splittings(&self) -> Vec<f64> {
        self.pairs.iter().map(LevelPair::splitting).collect()
    }
}

fn check_parity(h: &Operator) -> Result<()> {
    let c = parity_contamination(h.mat());
    if c > PARITY_TOLERANCE {
        return Err(Error::ParitySymmetry(c));
    }
    Ok(())
}

/// Diagonalizes each parity sector, orders both by descending energy and pairs
/// the m-th even level with the m-th odd level.
pub fn paired_spectrum(h: &Operator, n_pairs: usize) -> Result<PairedSpectrum> {
    check_parity(h)?;
    let space = h.space();
    let d = space.dim();
    let mut sectors = Vec::with_capacity(2);
    for parity in [Parity::Even, Parity::Odd] {
        let idx = sector_indices(d, parity);
        if n_pairs > idx.len() {
            return Err(Error::Size(format!("{n_pairs} pairs requested from a sector of size {}", idx.len())));
        }
        let (vals, vecs) = descending_eigen(&sector_block(h.mat(), &idx))?;
        let states = (0..n_pairs)
            .map(|k| {
                let mut amps = vec![c64::new(0.0, 0.0); d];
                for (r, &i) in idx.iter().enumerate() {
                    amps[i] = vecs[(r, k)];
                }
                StateVector::new(space, amps)
            })
            .collect::<Result<Vec<_>>>()?;
        sectors.push((vals, states));
    }
    let (odd_vals, odd_states) = sectors.pop().unwrap();
    let (even_vals, even_states) = sectors.pop().unwrap();
    let offset = even_vals[0];
    let pairs = (0..n_pairs)
        .map(|k| LevelPair { even: even_vals[k] - offset, odd: odd_vals[k] - offset })
        .collect();
    Ok(PairedSpectrum { pairs, even_states, odd_states, offset })
}

/// Splittings δ_m = E_m^even − E_m^odd of the first `n_pairs` pairs.
pub fn splittings(c: &KerrCoefficients, space: FockSpace, n_pairs: usize) -> Result<Vec<f64>> {
    let h = build_kerr(c, space);
    let d = space.dim();
    let even = descending_eigenvalues(&sector_block(h.mat(), &sector_indices(d, Parity::Even)))?;
    let odd = descending_eigenvalues(&sector_block(h.mat(), &sector_indices(d, Parity::Odd)))?;
    if n_pairs > odd.len() {
        return Err(Error::Size(format!("{n_pairs} pairs requested from a sector of size {}", odd.len())));
    }
    Ok((0..n_pairs).map(|k| even[k] - odd[k]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanAxis {
    Detuning,
    Squeezing,
}

/// A one-parameter sweep in units of K around `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyScan {
    pub base: KerrCoefficients,
    pub axis: ScanAxis,
    pub range: (f64, f64),
    pub points: usize,
    pub n_pairs: usize,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub pair: usize,
    /// Swept coordinate in units of K.
    pub value: f64,
    /// |δ_m|/K at `value`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingCluster {
    pub center: f64,
    pub pairs: Vec<usize>,
    pub crossings: Vec<Crossing>,
}

/// Zero-splitting threshold in units of K.
pub const CROSSING_TOLERANCE: f64 = 1e-6;

impl DegeneracyScan {
    fn coefficients_at(&self, x: f64) -> KerrCoefficients {
        let mut c = self.base;
        match self.axis {
            ScanAxis::Detuning => c.delta = x * c.kerr,
            ScanAxis::Squeezing => c.eps2 = x * c.kerr,
        }
        c
    }

    fn splittings_at(&self, x: f64) -> Result<Vec<f64>> {
        let k = self.base.kerr;
        Ok(splittings(&self.coefficients_at(x), FockSpace::new(self.dim)?, self.n_pairs)?
            .into_iter()
            .map(|s| s / k)
            .collect())
    }
}

/// Locates zeros of each signed splitting by bisection on sign changes. Energies
/// sorted within a sector vary continuously, so the sign of δ_m flips only at a
/// genuine crossing. Grid points already within tolerance that are local minima
/// of |δ_m| are refined by golden-section search.
pub fn degeneracy_scan(scan: &DegeneracyScan) -> Result<Vec<Crossing>> {
    if scan.base.kerr == 0.0 {
        return Err(Error::Domain("degeneracy scan needs a nonzero Kerr coefficient".into()));
    }
    if scan.points < 2 {
        return Err(Error::Domain("degeneracy scan needs at least two points".into()));
    }
    let xs = crate::fock::linspace(scan.range.0, scan.range.1, scan.points);
    let table: Vec<Vec<f64>> = xs.iter().map(|&x| scan.splittings_at(x)).collect::<Result<_>>()?;
    let mut found: Vec<Crossing> = Vec::new();
    for m in 0..scan.n_pairs {
        let col: Vec<f64> = table.iter().map(|row| row[m]).collect();
        for i in 0..xs.len() - 1 {
            if col[i] * col[i + 1] < 0.0 {
                found.push(bisect(scan, m, xs[i], xs[i + 1], col[i])?);
            }
        }
        for i in 0..xs.len() {
            let v = col[i].abs();
            if v >= CROSSING_TOLERANCE {
                continue;
            }
            let left = if i > 0 { col[i - 1].abs() } else { f64::INFINITY };
            let right = if i + 1 < xs.len() { col[i + 1].abs() } else { f64::INFINITY };
            if v <= left && v <= right {
                let lo = if i > 0 { xs[i - 1] } else { xs[i] };
                let hi = if i + 1 < xs.len() { xs[i + 1] } else { xs[i] };
                found.push(golden_minimum(scan, m, lo, hi)?);
            }
        }
    }
    // A grid point sitting on a root is reported by both searches.
    let step = (scan.range.1 - scan.range.0).abs() / (scan.points - 1) as f64;
    found.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.value.total_cmp(&b.value)));
    let mut merged: Vec<Crossing> = Vec::with_capacity(found.len());
    for c in found {
        match merged.last_mut() {
            Some(last) if last.pair == c.pair && (c.value - last.value).abs() < step => {
                if c.residual < last.residual {
                    *last = c;
                }
            }
            _ => merged.push(c),
        }
    }
    merged.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.pair.cmp(&b.pair)));
    Ok(merged)
}

fn bisect(scan: &DegeneracyScan, m: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<Crossing> {
    let sign_lo = f_lo.signum();
    let mut best = (lo, f_lo.abs());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let v = scan.splittings_at(mid)?[m];
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v == 0.0 || hi - lo < 1e-14 * (1.0 + mid.abs()) {
            break;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossing { pair: m, value: best.0, residual: best.1 })
}

fn golden_minimum(scan: &DegeneracyScan, m: usize, mut lo: f64, mut hi: f64) -> Result<Crossing> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| -> Result<f64> { Ok(scan.splittings_at(x)?[m].abs()) };
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (value, residual) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok(Crossing { pair: m, value, residual })
}

/// Groups crossings whose locations lie within `width` (units of K).
pub fn cluster_crossings(crossings: &[Crossing], width: f64) -> Vec<CrossingCluster> {
    let mut sorted = crossings.to_vec();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut clusters: Vec<CrossingCluster> = Vec::new();
    for c in sorted {
        match clusters.last_mut() {
            Some(cl) if (c.value - cl.crossings.last().unwrap().value).abs() <= width => cl.crossings.push(c),
            _ => clusters.push(CrossingCluster { center: 0.0, pairs: Vec::new(), crossings: vec![c] }),
        }
    }
    for cl in &mut clusters {
        cl.center = cl.crossings.iter().map(|c| c.value).sum::<f64>() / cl.crossings.len() as f64;
        cl.pairs = cl.crossings.iter().map(|c| c.pair).collect();
        cl.pairs.sort_unstable();
        cl.pairs.dedup();
    }
    clusters
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetOptions {
    pub initial_steps: usize,
    pub max_steps: usize,
    /// Self-convergence target relative to ω_d.
    pub tolerance: f64,
    pub exact_drive: bool,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { initial_steps: 256, max_steps: 1 << 15, tolerance: 1e-8, exact_drive: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetLevel {
    pub parity: Parity,
    /// Quasienergy minus the cat-ground quasienergy, folded into (−ω_d/2, ω_d/2].
    pub quasi: f64,
    /// Matching level of the static effective Hamiltonian, relative to its top level.
    pub effective: f64,
    /// |⟨effective|Floquet⟩|² of the matched pair.
    pub overlap: f64,
}

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    /// All quasienergies −arg(λ)/T_d folded into [0, ω_d).
    pub quasienergies: Vec<f64>,
    /// Ground level followed by the tracked excited levels.
    pub levels: Vec<FloquetLevel>,
    pub steps: usize,
    pub unitarity_defect: f64,
}

/// Fourier components of the rotating-frame phase operator powers, restricted
/// to one parity sector. X = φ(a e^{−iθ} + a† e^{iθ}) with θ = ω_d t/2.
struct SectorTerms {
    idx: Vec<usize>,
    fixed: Mat<c64>,
    /// Components of X² with phases e^{ikθ}, k = −2, 0, 2.
    x2: Vec<(i32, Mat<c64>)>,
    /// Components of X⁴, k = −4 … 4.
    x4: Vec<(i32, Mat<c64>)>,
}

fn phase_components(a: &Mat<c64>, ad: &Mat<c64>, power: u32) -> Vec<(i32, Mat<c64>)> {
    let d = a.nrows();
    let mut out: Vec<(i32, Mat<c64>)> = (0..=power).map(|j| (2 * j as i32 - power as i32, Mat::zeros(d, d))).collect();
    for word in 0..(1u32 << power) {
        let mut prod = Mat::<c64>::identity(d, d);
        let mut raised = 0;
        for bit in 0..power {
            if word >> bit & 1 == 1 {
                prod = &prod * ad;
                raised += 1;
            } else {
                prod = &prod * a;
            }
        }
        out[raised].1 = &out[raised].1 + &prod;
    }
    out
}

impl SectorTerms {
    fn new(lab: &LabFrame, space: FockSpace, parity: Parity) -> Self {
        let d = space.dim();
        let (a, ad, _) = crate::fock::ladder_ops(space);
        let phi = c64::new(lab.phi_zps, 0.0);
        let a = a.mat() * faer::Scale(phi);
        let ad = ad.mat() * faer::Scale(phi);
        let idx = sector_indices(d, parity);
        let detuning = lab.eps_c - 2.0 * lab.kerr - lab.omega_d / 2.0 + lab.delta_ext;
        let fixed = Mat::from_fn(idx.len(), idx.len(), |i, j| {
            if i == j {
                let n = idx[i] as f64;
                c64::new(detuning * n - lab.kerr * n * (n - 1.0), 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let restrict = |v: Vec<(i32, Mat<c64>)>| v.into_iter().map(|(k, m)| (k, sector_block(&m, &idx))).collect();
        Self { x2: restrict(phase_components(&a, &ad, 2)), x4: restrict(phase_components(&a, &ad, 4)), fixed, idx }
    }

    fn at(&self, lab: &LabFrame, t: f64) -> Mat<c64> {
        let x = lab.delta_phi * (lab.omega_d * t).cos();
        let s = if lab.exact_drive { x.sin() } else { x };
        let c2 = lab.ej_sigma * s;
        let c4 = -lab.ej_sigma * s / (12.0 * (lab.cells as f64).powi(2));
        let theta = lab.omega_d * t / 2.0;
        let mut h = self.fixed.clone();
        for (k, m) in &self.x2 {
            h = h + m * faer::Scale(c64::from_polar(c2, *k as f64 * theta));
        }
        for (k, m) in &self.x4 {
            h = h + m * faer::Scale(c64::from_polar(c4, *k as f64 * theta));
        }
        h
    }

    fn period_propagator(&self, lab: &LabFrame, steps: usize) -> Result<Mat<c64>> {
        let period = lab.period();
        let dt = period / steps as f64;
        let n = self.idx.len();
        let mut u = Mat::<c64>::identity(n, n);
        for k in 0..steps {
            let t0 = k as f64 * dt;
            let h1 = self.at(lab, t0 + CF4_NODES[0] * dt);
            let h2 = self.at(lab, t0 + CF4_NODES[1] * dt);
            u = &cf4_step(&h1, &h2, dt)? * &u;
        }
        Ok(u)
    }
}

fn fold(x: f64, period: f64) -> f64 {
    x.rem_euclid(period)
}

fn fold_centered(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r > period / 2.0 {
        r - period
    } else {
        r
    }
}

struct SectorFloquet {
    quasi: Vec<f64>,
    vectors: Mat<c64>,
    defect: f64,
}

fn sector_floquet(terms: &SectorTerms, lab: &LabFrame, steps: usize) -> Result<SectorFloquet> {
    let u = terms.period_propagator(lab, steps)?;
    let defect = unitarity_defect(&u);
    if defect > 1e-8 {
        return Err(Error::PropagatorAccuracy(defect));
    }
    let eig = u.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let period = lab.period();
    let quasi = eig.S().column_vector().iter().map(|l| fold(-l.arg() / period, lab.omega_d)).collect();
    Ok(SectorFloquet { quasi, vectors: eig.U().to_owned(), defect })
}

/// One-period Floquet analysis of the driven STS circuit in the frame rotating
/// at ω_d/2. Each Floquet state is matched to the static effective eigenstate
/// of the same parity with which it overlaps most; the ground is the top level
/// of the effective spectrum and `n_levels` excited levels follow it.
pub fn floquet_quasienergies(c: &CircuitParams, space: FockSpace, n_levels: usize) -> Result<FloquetSpectrum> {
    floquet_with(c, space, n_levels, &FloquetOptions::default())
}

pub fn floquet_with(c: &CircuitParams, space: FockSpace, n_levels: usize, opts: &FloquetOptions) -> Result<FloquetSpectrum> {
    if c.topology != Topology::Sts {
        return Err(Error::Topology("Floquet analysis is implemented for STS circuits".into()));
    }
    let lab = LabFrame::from_circuit(c, opts.exact_drive)?;
    if lab.ej_delta != 0.0 {
        return Err(Error::Domain("Floquet analysis requires a symmetric drive branch (E_J1 = E_J3)".into()));
    }
    let d = space.dim();
    let h_eff = build_kerr(&KerrCoefficients::from_params(&effective_params(c)?), space);
    let mut effective: Vec<(f64, Parity, Vec<c64>)> = Vec::new();
    let parities = [Parity::Even, Parity::Odd];
    let terms: Vec<SectorTerms> = parities.iter().map(|&p| SectorTerms::new(&lab, space, p)).collect();
    for (s, &p) in parities.iter().enumerate() {
        let (vals, vecs) = descending_eigen(&sector_block(h_eff.mat(), &terms[s].idx))?;
        for (k, v) in vals.into_iter().enumerate() {
            effective.push((v, p, vecs.col(k).iter().copied().collect()));
        }
    }
    effective.sort_by(|a, b| b.0.total_cmp(&a.0));
    if n_levels + 1 > effective.len() {
        return Err(Error::Size(format!("{} levels requested from dimension {d}", n_levels + 1)));
    }
    effective.truncate(n_levels + 1);

    let mut steps = opts.initial_steps.max(1);
    let mut previous: Option<Vec<FloquetLevel>> = None;
    loop {
        let sectors = [sector_floquet(&terms[0], &lab, steps)?, sector_floquet(&terms[1], &lab, steps)?];
        let levels = match_levels(&effective, &sectors, &lab)?;
        let converged = previous.as_ref().is_some_and(|prev| {
            prev.iter()
                .zip(&levels)
                .all(|(a, b)| fold_centered(a.quasi - b.quasi, lab.omega_d).abs() < opts.tolerance * lab.omega_d)
        });
        if converged || steps >= opts.max_steps {
            if !converged && previous.is_some() {
                let worst = previous
                    .as_ref()
                    .unwrap()
                    .iter()
                    .zip(&levels)
                    .map(|(a, b)| fold_centered(a.quasi - b.quasi, lab.omega_d).abs() / lab.omega_d)
                    .fold(0.0, f64::max);
                return Err(Error::PropagatorAccuracy(worst));
            }
            let mut quasienergies: Vec<f64> = sectors.iter().flat_map(|s| s.quasi.iter().copied()).collect();
            quasienergies.sort_by(f64::total_cmp);
            return Ok(FloquetSpectrum {
                quasienergies,
                levels,
                steps,
                unitarity_defect: sectors[0].defect.max(sectors[1].defect),
            });
        }
        previous = Some(levels);
        steps *= 2;
    }
}

fn match_levels(effective: &[(f64, Parity, Vec<c64>)], sectors: &[SectorFloquet; 2], lab: &LabFrame) -> Result<Vec<FloquetLevel>> {
    let mut used = [vec![false; sectors[0].quasi.len()], vec![false; sectors[1].quasi.len()]];
    let mut picks = Vec::with_capacity(effective.len());
    for (energy, parity, v) in effective {
        let s = if *parity == Parity::Even { 0 } else { 1 };
        let f = &sectors[s];
        let mut best: Option<(usize, f64)> = None;
        for k in 0..f.quasi.len() {
            if used[s][k] {
                continue;
            }
            let col = f.vectors.col(k);
            let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let ov: c64 = v.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
            let w = ov.norm_sqr() / norm;
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((k, w));
            }
        }
        let (k, w) = best.ok_or_else(|| Error::InternalConsistency("no Floquet state left to match".into()))?;
        used[s][k] = true;
        picks.push((f.quasi[k], *energy, *parity, w));
    }
    let (q0, e0) = (picks[0].0, picks[0].1);
    Ok(picks
        .into_iter()
        .map(|(q, e, parity, overlap)| FloquetLevel {
            parity,
            quasi: fold_centered(q - q0, lab.omega_d),
            effective: e - e0,
            overlap,
        })
        .collect())
}

/// Smooth switch-on of the two-photon drive,
/// f(t) = [tanh(s(2t/T − 1)) + tanh s] / (2 tanh s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RampSchedule {
    pub target_eps2_over_k: f64,
    /// Ramp duration, μs.
    pub duration: f64,
    pub steepness: f64,
    pub steps: usize,
    pub records: usize,
}

impl RampSchedule {
    /// Default tanh ramp lasting 64/K.
    pub fn tanh(target_eps2_over_k: f64, kerr: f64) -> Self {
        Self { target_eps2_over_k, duration: 64.0 / kerr, steepness: 3.0, steps: 4000, records: 200 }
    }

    pub fn profile(&self, t: f64) -> f64 {
        if self.duration <= 0.0 {
            return 1.0;
        }
        let s = self.steepness;
        let x = (t / self.duration).clamp(0.0, 1.0);
        ((s * (2.0 * x - 1.0)).tanh() + s.tanh()) / (2.0 * s.tanh())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RampResult {
    pub times: Vec<f64>,
    /// |⟨C_α⁺|ψ(t)⟩|² with α = √(ε₂(t)/K).
    pub overlap: Vec<f64>,
    /// |⟨ψ₀⁺(t)|ψ(t)⟩|² with ψ₀⁺ the top even eigenstate of the instantaneous
    /// effective Hamiltonian. Differs from `overlap` when Λ ≠ 0.
    pub eigen_overlap: Vec<f64>,
    pub photon_number: Vec<f64>,
    pub final_eps2_over_k: f64,
    pub norm_drift: f64,
}

/// Schrödinger evolution from vacuum under the static effective Hamiltonian
/// while ε₂ follows `schedule`. The modulation depth tracks ε₂, so Λ and the
/// drive-dependent part of Δ follow along.
pub fn adiabatic_ramp(c: &CircuitParams, schedule: &RampSchedule, space: FockSpace) -> Result<RampResult> {
    let base = effective_params(&CircuitParams { delta_phi: 0.0, ..c.clone() })?;
    let kerr = base.kerr;
    let target = schedule.target_eps2_over_k;
    if !(target >= 0.0) {
        return Err(Error::Domain("ramp target must be nonnegative".into()));
    }
    let coeffs_at = |t: f64| -> Result<KerrCoefficients> {
        let eps2 = schedule.profile(t) * target * kerr;
        let dp = delta_phi_for_squeezing(c, eps2)?;
        Ok(KerrCoefficients::from_params(&effective_params(&CircuitParams { delta_phi: dp, ..c.clone() })?))
    };
    let d = space.dim();
    let idx = sector_indices(d, Parity::Even);
    let mut psi = Mat::<c64>::zeros(idx.len(), 1);
    psi[(0, 0)] = c64::new(1.0, 0.0);
    let steps = if schedule.duration > 0.0 { schedule.steps.max(1) } else { 0 };
    let dt = if steps > 0 { schedule.duration / steps as f64 } else { 0.0 };
    let every = (steps / schedule.records.max(1)).max(1);

    let mut result = RampResult { times: vec![], overlap: vec![], eigen_overlap: vec![], photon_number: vec![], final_eps2_over_k: 0.0, norm_drift: 0.0 };
    let record = |t: f64, psi: &Mat<c64>, result: &mut RampResult| -> Result<()> {
        let c_now = coeffs_at(t)?;
        let ratio = c_now.eps2 / kerr;
        let alpha = c64::new(ratio, 0.0).sqrt();
        let cat = cat_state(alpha, Parity::Even, space)?;
        let ov: c64 = idx.iter().enumerate().map(|(r, &i)| cat.amps()[i].conj() * psi[(r, 0)]).sum();
        let top = paired_spectrum(&build_kerr(&c_now, space), 1)?;
        let ground = top.even_states[0].amps();
        let ev: c64 = idx.iter().enumerate().map(|(r, &i)| ground[i].conj() * psi[(r, 0)]).sum();
        let n: f64 = idx.iter().enumerate().map(|(r, &i)| i as f64 * psi[(r, 0)].norm_sqr()).sum();
        let norm: f64 = (0..idx.len()).map(|r| psi[(r, 0)].norm_sqr()).sum();
        result.times.push(t);
        result.overlap.push(ov.norm_sqr());
        result.eigen_overlap.push(ev.norm_sqr());
        result.photon_number.push(n);
        result.final_eps2_over_k = ratio;
        result.norm_drift = result.norm_drift.max((norm - 1.0).abs());
        Ok(())
    };
    record(0.0, &psi, &mut result)?;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let h1 = sector_block(build_kerr(&coeffs_at(t0 + CF4_NODES[0] * dt)?, space).mat(), &idx);
        let h2 = sector_block(build_kerr(&coeffs_at(t0 + CF4_NODES[1] * dt)?, space).mat(), &idx);
        psi = &cf4_step(&h1, &h2, dt)? * &psi;
        if (k + 1) % every == 0 || k + 1 == steps {
            record(t0 + dt, &psi, &mut result)?;
        }
    }
    if result.norm_drift > 1e-8 {
        return Err(Error::Integrator(format!("norm drift {:.2e} during ramp", result.norm_drift)));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{mhz_to_angular, sts_effective_params};
    use crate::fock::parity_operator;
    use crate::hamiltonian::{build_rotating_frame, build_static, HamiltonianSpec};

    fn space(d: usize) -> FockSpace {
        FockSpace::new(d).unwrap()
    }

    #[test]
    fn kerr_only_pairs() {
        let h = build_static(&HamiltonianSpec::Rkc { eps2: 0.0, kerr: 1.0 }, space(20)).unwrap();
        let ps = paired_spectrum(&h, 4).unwrap();
        // Descending levels of −n(n−1): even n = 0, 2, 4, 6 and odd n = 1, 3, 5, 7.
        let expect_even = [0.0, -2.0, -12.0, -30.0];
        let expect_odd = [0.0, -6.0, -20.0, -42.0];
        for k in 0..4 {
            assert!((ps.pairs[k].even - expect_even[k]).abs() < 1e-12);
            assert!((ps.pairs[k].odd - expect_odd[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cat_pair_is_nearly_degenerate() {
        let h = build_static(&HamiltonianSpec::Rkc { eps2: 2.0, kerr: 1.0 }, space(40)).unwrap();
        let ps = paired_spectrum(&h, 3).unwrap();
        assert!(ps.pairs[0].splitting().abs() < (-4.0f64).exp());
        let p = parity_operator(space(40));
        for s in ps.even_states.iter().chain(&ps.odd_states) {
            assert!(p.expect(s).re.abs() >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn paired_spectrum_matches_full_diagonalization() {
        let c = KerrCoefficients { delta: 1.3, eps2: 2.2, kerr: 1.0, lambda: 0.05, theta: 0.0 };
        let s = space(30);
        let h = build_kerr(&c, s);
        let ps = paired_spectrum(&h, 5).unwrap();
        let (vals, vecs) = h.hermitian_eigen().unwrap();
        let p = parity_operator(s);
        let mut even = vec![];
        let mut odd = vec![];
        for k in (0..30).rev() {
            let v = StateVector::from_column(s, &vecs, k).unwrap();
            if p.expect(&v).re > 0.0 {
                even.push(vals[k]);
            } else {
                odd.push(vals[k]);
            }
        }
        for k in 0..5 {
            assert!((ps.pairs[k].even + ps.offset - even[k]).abs() < 1e-10);
            assert!((ps.pairs[k].odd + ps.offset - odd[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_parity_breaking() {
        let s = space(10);
        let (a, ad, _) = crate::fock::ladder_ops(s);
        let h = &build_kerr(&KerrCoefficients::from_ratios(1.0, 0.0, 1.0, 0.0), s) + &(&(&a + &ad) * 0.1);
        assert!(matches!(paired_spectrum(&h, 2), Err(Error::ParitySymmetry(_))));
    }

    #[test]
    fn bare_kerr_crossings_at_even_detunings() {
        let scan = DegeneracyScan {
            base: KerrCoefficients::from_ratios(1.0, 0.0, 0.0, 0.0),
            axis: ScanAxis::Detuning,
            range: (0.5, 6.5),
            points: 61,
            n_pairs: 2,
            dim: 20,
        };
        let cs = degeneracy_scan(&scan).unwrap();
        // At Δ = 2j the bare levels obey E_n = E_{2j+1−n}, which pairs opposite parities.
        for c in &cs {
            assert!(c.residual < CROSSING_TOLERANCE);
            assert!((c.value / 2.0 - (c.value / 2.0).round()).abs() < 1e-9, "{c:?}");
        }
        assert!(!cs.is_empty());
    }

    #[test]
    fn roots_on_grid_points_reported_once() {
        let scan = DegeneracyScan {
            base: KerrCoefficients::from_ratios(1.0, 0.0, 2.0, 0.0),
            axis: ScanAxis::Detuning,
            range: (-0.5, 6.5),
            points: 71,
            n_pairs: 4,
            dim: 30,
        };
        let cs = degeneracy_scan(&scan).unwrap();
        for cl in cluster_crossings(&cs, 0.05) {
            let mut pairs = cl.pairs.clone();
            pairs.dedup();
            assert_eq!(pairs, cl.pairs, "{cl:?}");
        }
        for m in 0..4 {
            let near_six = cs.iter().filter(|c| c.pair == m && (c.value - 6.0).abs() < 0.05).count();
            assert_eq!(near_six, 1, "pair {m}");
        }
    }

    #[test]
    fn clustering_groups_by_location() {
        let cs = [
            Crossing { pair: 0, value: 2.0, residual: 0.0 },
            Crossing { pair: 1, value: 2.0 + 1e-9, residual: 0.0 },
            Crossing { pair: 0, value: 4.0, residual: 0.0 },
        ];
        let cl = cluster_crossings(&cs, 0.05);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].pairs, vec![0, 1]);
    }

    fn floquet_circuit() -> CircuitParams {
        let base = CircuitParams { m: 2, n: 4, ..Default::default() };
        let p = sts_effective_params(&base).unwrap();
        CircuitParams { omega_d: 2.0 * (p.eps_c - 2.0 * p.kerr), ..base }
    }

    #[test]
    fn sector_terms_match_rotating_frame() {
        let c = CircuitParams { delta_phi: 0.03, ..floquet_circuit() };
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let s = space(12);
        let t = 0.31 * lab.period();
        let full = build_rotating_frame(&lab, s, t);
        for p in [Parity::Even, Parity::Odd] {
            let terms = SectorTerms::new(&lab, s, p);
            let diff = &terms.at(&lab, t) - &sector_block(full.mat(), &terms.idx);
            assert!(diff.norm_max() < 1e-9 * full.max_norm());
        }
    }

    #[test]
    fn undriven_quasienergies_are_transmon_levels() {
        let c = floquet_circuit();
        let s = space(16);
        let f = floquet_quasienergies(&c, s, 4).unwrap();
        let lab = LabFrame::from_circuit(&c, false).unwrap();
        let det = lab.eps_c - 2.0 * lab.kerr - lab.omega_d / 2.0;
        let mut expect: Vec<f64> =
            (0..16usize).map(|n| fold(det * n as f64 - lab.kerr * (n * n.saturating_sub(1)) as f64, c.omega_d)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in f.quasienergies.iter().zip(&expect) {
            let diff = fold_centered(a - b, c.omega_d).abs();
            assert!(diff <= 1e-8 * c.omega_d, "{a} {b}");
        }
        for l in &f.levels {
            assert!((l.quasi - l.effective).abs() < 1e-6 * lab.kerr);
        }
    }

    #[test]
    fn driven_quasienergies_track_effective_model() {
        let base = floquet_circuit();
        let p = sts_effective_params(&CircuitParams { delta_phi: 1.0, ..base.clone() }).unwrap();
        let c = CircuitParams { delta_phi: 2.0 * p.kerr / p.eps2, ..base };
        let f = floquet_quasienergies(&c, space(30), 4).unwrap();
        assert!(f.unitarity_defect < 1e-8);
        for l in &f.levels {
            assert!((l.quasi - l.effective).abs() < 0.2 * p.kerr, "{l:?}");
            assert!(l.overlap > 0.5);
        }
    }

    #[test]
    fn ramp_profile_endpoints() {
        let r = RampSchedule::tanh(4.0, 1.0);
        assert!(r.profile(0.0).abs() < 1e-15);
        assert!((r.profile(r.duration) - 1.0).abs() < 1e-15);
        assert!(r.profile(0.3 * r.duration) < r.profile(0.6 * r.duration));
    }

    #[test]
    fn zero_length_ramp() {
        let c = floquet_circuit();
        let sched = RampSchedule { target_eps2_over_k: 0.0, duration: 0.0, steepness: 3.0, steps: 10, records: 5 };
        let r = adiabatic_ramp(&c, &sched, space(20)).unwrap();
        assert_eq!(r.overlap, vec![1.0]);
        assert!((r.eigen_overlap[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.photon_number, vec![0.0]);
    }

    #[test]
    fn slow_ramp_follows_the_effective_ground_state() {
        let c = floquet_circuit();
        let kerr = sts_effective_params(&c).unwrap().kerr;
        let sched = RampSchedule { steps: 1500, records: 10, ..RampSchedule::tanh(3.0, kerr) };
        let r = adiabatic_ramp(&c, &sched, space(40)).unwrap();
        let (bare, eigen) = (*r.overlap.last().unwrap(), *r.eigen_overlap.last().unwrap());
        assert!(eigen > 0.999, "{eigen}");
        // Λ < 0 shrinks the cat below √(ε₂/K).
        assert!(bare < eigen);
        assert!(*r.photon_number.last().unwrap() < r.final_eps2_over_k);
    }

    #[test]
    fn cf4_is_exact_for_constant_hamiltonian() {
        let s = space(10);
        let h = build_kerr(&KerrCoefficients::from_ratios(mhz_to_angular(1.0), 0.5, 1.2, 0.0), s);
        let step = cf4_step(h.mat(), h.mat(), 0.3).unwrap();
        let exact = unitary_step(h.mat(), 0.3).unwrap();
        assert!((&step - &exact).norm_max() < 1e-12);
    }
}
