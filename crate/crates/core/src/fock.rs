//! Truncated Fock-space operators, states and phase-space functions.
//!
//! Every object carries its [`FockSpace`]; mixing dimensions is a programming
//! error and panics in the arithmetic operators.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};

/// Fraction of the top Fock levels inspected by the truncation diagnostic.
pub const TAIL_FRACTION: f64 = 0.1;
/// Population allowed in the inspected tail for a computation to count as adequate.
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSpace(format!("dimension {dim} < 2")));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, other: &FockSpace) {
        assert_eq!(self.dim, other.dim, "operands live in different Fock spaces");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn of_level(n: usize) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Clone, Debug)]
pub struct Operator {
    space: FockSpace,
    mat: Mat<c64>,
}

impl Operator {
    pub fn from_mat(space: FockSpace, mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), space.dim());
        assert_eq!(mat.ncols(), space.dim());
        Self { space, mat }
    }

    pub fn from_fn(space: FockSpace, f: impl FnMut(usize, usize) -> c64) -> Self {
        let d = space.dim();
        Self { space, mat: Mat::from_fn(d, d, f) }
    }

    pub fn zeros(space: FockSpace) -> Self {
        let d = space.dim();
        Self { space, mat: Mat::zeros(d, d) }
    }

    pub fn identity(space: FockSpace) -> Self {
        let d = space.dim();
        Self { space, mat: Mat::identity(d, d) }
    }

    pub fn diagonal(space: FockSpace, f: impl Fn(usize) -> f64) -> Self {
        Self::from_fn(space, |i, j| if i == j { c64::new(f(i), 0.0) } else { c64::new(0.0, 0.0) })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn dagger(&self) -> Operator {
        Self { space: self.space, mat: self.mat.adjoint().to_owned() }
    }

    pub fn transpose(&self) -> Operator {
        Self { space: self.space, mat: self.mat.transpose().to_owned() }
    }

    pub fn conj(&self) -> Operator {
        Self { space: self.space, mat: self.mat.conjugate().to_owned() }
    }

    pub fn pow(&self, k: u32) -> Operator {
        let mut out = Operator::identity(self.space);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn max_norm(&self) -> f64 {
        self.mat.norm_max()
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Max-norm of A − A†.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm_max()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= 1e-12 * self.max_norm().max(f64::MIN_POSITIVE)
    }

    /// Definite photon-number parity change, if any: `Even` when every nonzero
    /// element links levels of equal parity, `Odd` when it always flips.
    pub fn parity_class(&self) -> Option<Parity> {
        let scale = self.max_norm();
        if scale == 0.0 {
            return Some(Parity::Even);
        }
        let tol = 1e-14 * scale;
        let (mut even, mut odd) = (false, false);
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if self.mat[(i, j)].norm() > tol {
                    if (i + j) % 2 == 0 {
                        even = true;
                    } else {
                        odd = true;
                    }
                }
            }
        }
        match (even, odd) {
            (true, true) => None,
            (false, true) => Some(Parity::Odd),
            _ => Some(Parity::Even),
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Vec<c64> {
        self.space.check(&psi.space);
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.mat[(i, j)] * psi.amps[j]).sum()).collect()
    }

    pub fn expect(&self, psi: &StateVector) -> c64 {
        let v = self.apply(psi);
        psi.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }

    /// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Mat<c64>)> {
        let eig = self
            .mat
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let vals = eig.S().column_vector().iter().map(|z| z.re).collect();
        Ok((vals, eig.U().to_owned()))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.space.check(&rhs.space);
        Operator { space: self.space, mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.space.check(&rhs.space);
        Operator { space: self.space, mat: &self.mat - &rhs.mat }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.space.check(&rhs.space);
        Operator { space: self.space, mat: &self.mat * &rhs.mat }
    }
}

impl Mul<c64> for &Operator {
    type Output = Operator;
    fn mul(self, k: c64) -> Operator {
        Operator { space: self.space, mat: &self.mat * faer::Scale(k) }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, k: f64) -> Operator {
        self * c64::new(k, 0.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self * -1.0
    }
}

/// Normalized pure state.
#[derive(Clone, Debug)]
pub struct StateVector {
    space: FockSpace,
    amps: Vec<c64>,
}

impl StateVector {
    /// Normalizes `amps`; fails on the zero vector.
    pub fn new(space: FockSpace, amps: Vec<c64>) -> Result<Self> {
        assert_eq!(amps.len(), space.dim());
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InternalConsistency("cannot normalize zero state".into()));
        }
        Ok(Self { space, amps: amps.into_iter().map(|z| z / norm).collect() })
    }

    pub fn fock(space: FockSpace, n: usize) -> Self {
        let mut amps = vec![c64::new(0.0, 0.0); space.dim()];
        amps[n] = c64::new(1.0, 0.0);
        Self { space, amps }
    }

    pub fn from_column(space: FockSpace, m: &Mat<c64>, col: usize) -> Result<Self> {
        Self::new(space, m.col(col).iter().copied().collect())
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amps(&self) -> &[c64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> c64 {
        self.space.check(&other.space);
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn tail_population(&self) -> f64 {
        tail_population(self.amps.iter().map(|z| z.norm_sqr()))
    }

    pub fn is_adequate(&self) -> bool {
        self.tail_population() < TAIL_TOLERANCE
    }
}

/// Population of the top `TAIL_FRACTION` of levels, given per-level populations.
pub fn tail_population(pops: impl ExactSizeIterator<Item = f64>) -> f64 {
    let d = pops.len();
    let tail = ((d as f64 * TAIL_FRACTION).ceil() as usize).max(1);
    pops.skip(d - tail).sum()
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: FockSpace,
    mat: Mat<c64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(space: FockSpace, mat: Mat<c64>) -> Result<Self> {
        let rho = Self::new_unchecked(space, mat);
        rho.validate(1e-9)?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(space: FockSpace, mat: Mat<c64>) -> Self {
        assert_eq!(mat.nrows(), space.dim());
        Self { space, mat }
    }

    pub fn pure(psi: &StateVector) -> Self {
        let d = psi.space.dim();
        let mat = Mat::from_fn(d, d, |i, j| psi.amps[i] * psi.amps[j].conj());
        Self { space: psi.space, mat }
    }

    /// Convex combination Σ w_k |ψ_k⟩⟨ψ_k| with weights normalized to one.
    pub fn mixture(states: &[(f64, StateVector)]) -> Result<Self> {
        let space = states.first().ok_or_else(|| Error::Domain("empty mixture".into()))?.1.space;
        let total: f64 = states.iter().map(|(w, _)| *w).sum();
        let mut mat = Mat::<c64>::zeros(space.dim(), space.dim());
        for (w, psi) in states {
            if *w < 0.0 {
                return Err(Error::Domain("negative mixture weight".into()));
            }
            mat += &DensityMatrix::pure(psi).mat * faer::Scale(c64::new(w / total, 0.0));
        }
        Ok(Self { space, mat })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn trace(&self) -> c64 {
        (0..self.space.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        let d = self.space.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += (self.mat[(i, j)] * self.mat[(j, i)]).re;
            }
        }
        s
    }

    pub fn expect(&self, op: &Operator) -> c64 {
        self.space.check(&op.space);
        let d = self.space.dim();
        let mut s = c64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                s += self.mat[(i, j)] * op.mat[(j, i)];
            }
        }
        s
    }

    /// Eigenvalues in descending order with their eigenvectors (columns).
    pub fn spectrum(&self) -> Result<(Vec<f64>, Mat<c64>)> {
        let (vals, vecs) = Operator::from_mat(self.space, self.mat.clone()).hermitian_eigen()?;
        let d = vals.len();
        let order: Vec<usize> = (0..d).rev().collect();
        let sorted = order.iter().map(|&k| vals[k]).collect();
        let v = Mat::from_fn(d, d, |i, j| vecs[(i, order[j])]);
        Ok((sorted, v))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = (&self.mat - self.mat.adjoint()).norm_max();
        if herm > tol {
            return Err(Error::InternalConsistency(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        let tr = self.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InternalConsistency(format!("density matrix trace {tr}")));
        }
        let (vals, _) = self.spectrum()?;
        if let Some(&min) = vals.last() {
            if min < -tol {
                return Err(Error::InternalConsistency(format!("negative eigenvalue {min:.2e}")));
            }
        }
        Ok(())
    }
}

/// Annihilation, creation and number operators.
pub fn ladder_ops(space: FockSpace) -> (Operator, Operator, Operator) {
    let a = Operator::from_fn(space, |i, j| {
        if j == i + 1 {
            c64::new((j as f64).sqrt(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let ad = a.dagger();
    let n = Operator::diagonal(space, |i| i as f64);
    (a, ad, n)
}

/// Normal-ordered monomial a†^raise a^lower with exact truncated matrix elements.
pub fn normal_monomial(space: FockSpace, raise: u32, lower: u32) -> Operator {
    let d = space.dim();
    let (p, q) = (raise as usize, lower as usize);
    let falling = |top: usize, k: usize| -> f64 { (0..k).map(|j| (top - j) as f64).product::<f64>() };
    let mut m = Mat::<c64>::zeros(d, d);
    for n in q..d {
        let mid = n - q;
        let out = mid + p;
        if out < d {
            m[(out, n)] = c64::new((falling(n, q) * falling(out, p)).sqrt(), 0.0);
        }
    }
    Operator::from_mat(space, m)
}

pub fn parity_operator(space: FockSpace) -> Operator {
    Operator::diagonal(space, |n| Parity::of_level(n).sign())
}

/// Smallest dimension satisfying the coherent-state precondition |α|² ≤ d/4.
pub fn suggested_dim(norm_sq: f64) -> usize {
    ((4.0 * norm_sq).ceil() as usize).max(2)
}

fn check_alpha(alpha: c64, space: FockSpace) -> Result<()> {
    let norm_sq = alpha.norm_sqr();
    if norm_sq > space.dim() as f64 / 4.0 {
        return Err(Error::TruncationRisk { norm_sq, dim: space.dim(), suggested_dim: suggested_dim(norm_sq) });
    }
    Ok(())
}

fn coherent_amps(alpha: c64, d: usize) -> Vec<c64> {
    let mut amps = Vec::with_capacity(d);
    let mut c = c64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..d {
        amps.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    amps
}

pub fn coherent_state(alpha: c64, space: FockSpace) -> Result<StateVector> {
    check_alpha(alpha, space)?;
    StateVector::new(space, coherent_amps(alpha, space.dim()))
}

/// Normalized (|α⟩ ± |−α⟩).
pub fn cat_state(alpha: c64, parity: Parity, space: FockSpace) -> Result<StateVector> {
    check_alpha(alpha, space)?;
    if parity == Parity::Odd && alpha.norm() == 0.0 {
        return Err(Error::DegenerateCat);
    }
    // Adding the two coherent states keeps only the Fock levels of one parity.
    let amps = coherent_amps(alpha, space.dim())
        .into_iter()
        .enumerate()
        .map(|(n, c)| if Parity::of_level(n) == parity { c } else { c64::new(0.0, 0.0) })
        .collect();
    StateVector::new(space, amps)
}

/// Rectangular phase-space grid, β = x + i p.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl PhaseGrid {
    pub fn uniform(x_range: (f64, f64), nx: usize, p_range: (f64, f64), np: usize) -> Self {
        Self { xs: linspace(x_range.0, x_range.1, nx), ps: linspace(p_range.0, p_range.1, np) }
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trapezoid-rule integral of a field stored row-major in `p` then `x`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let wx = trapezoid_weights(&self.xs);
        let wp = trapezoid_weights(&self.ps);
        let nx = self.xs.len();
        let mut s = 0.0;
        for (ip, w_p) in wp.iter().enumerate() {
            for (ix, w_x) in wx.iter().enumerate() {
                s += w_p * w_x * values[ip * nx + ix];
            }
        }
        s
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (xs[k] - xs[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

/// Real field over a [`PhaseGrid`], row-major in `p` then `x`.
#[derive(Clone, Debug)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub integral: f64,
    pub warnings: Vec<String>,
}

impl WignerField {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.grid.xs.len() + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// W(β) = (2/π) Tr[ρ D(β) P D†(β)].
///
/// Uses D(β) P D†(β) = D(2β) P with the closed-form matrix elements of D(2β),
/// which are exact for the truncated ρ. The generalized Laguerre polynomials
/// come from their three-term recurrence.
pub fn wigner(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<WignerField> {
    if grid.xs.iter().chain(&grid.ps).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite phase-space grid".into()));
    }
    let d = rho.space.dim();
    let mut ln_fact = vec![0.0; d + 1];
    for k in 1..=d {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut lag = vec![0.0; d];
    for &p in &grid.ps {
        for &x in &grid.xs {
            let two_beta = c64::new(2.0 * x, 2.0 * p);
            let b = two_beta.norm_sqr();
            let (ln_r, theta) = (two_beta.norm().ln(), two_beta.arg());
            let mut w = 0.0;
            for k in 0..d {
                if k > 0 && b == 0.0 {
                    break;
                }
                laguerre_column(k as f64, b, &mut lag[..d - k]);
                let mut acc = c64::new(0.0, 0.0);
                for m in 0..d - k {
                    let ln_pref = if k == 0 { 0.0 } else { k as f64 * ln_r }
                        + 0.5 * (ln_fact[m] - ln_fact[m + k])
                        - 0.5 * b;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    acc += rho.mat[(m, m + k)] * (sign * ln_pref.exp() * lag[m]);
                }
                if k == 0 {
                    w += acc.re;
                } else {
                    w += 2.0 * (acc * c64::from_polar(1.0, k as f64 * theta)).re;
                }
            }
            values.push(2.0 / std::f64::consts::PI * w);
        }
    }
    let integral = grid.integrate(&values);
    let mut warnings = Vec::new();
    if (integral - 1.0).abs() > 0.05 {
        warnings.push(format!("Wigner grid integral {integral:.4} deviates from 1 by more than 5%; enlarge the grid"));
    }
    Ok(WignerField { grid: grid.clone(), values, integral, warnings })
}

/// Fills `out[m] = L_m^{(k)}(x)` for m = 0..out.len().
fn laguerre_column(k: f64, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 1.0 + k - x;
    }
    for m in 1..out.len().saturating_sub(1) {
        let mf = m as f64;
        out[m + 1] = ((2.0 * mf + 1.0 + k - x) * out[m] - (mf + k) * out[m - 1]) / (mf + 1.0);
    }
}
