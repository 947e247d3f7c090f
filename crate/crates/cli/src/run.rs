//! Validates resolved series and dispatches them to the simulator.

use rayon::prelude::*;
use serde_json::json;

use kerrcat::circuit::{angular_to_mhz, delta_phi_for_squeezing, effective_params, mhz_to_angular, validity_report, CircuitParams, Topology};
use kerrcat::dissipation::{dephasing_term, BathSpec, DissipatorSet, DissipatorTerm, FreqLabel};
use kerrcat::fock::{ladder_ops, wigner, FockSpace, PhaseGrid};
use kerrcat::hamiltonian::{build_kerr, classical_surface, ExtremumKind, KerrCoefficients};
use kerrcat::lifetime::{lifetime_point, LifetimeConfig, LifetimeOptions, SweepAxis};
use kerrcat::liouvillian::{steady_state, MasterEquation, SteadyAnalysis};
use kerrcat::spectra::{
    adiabatic_ramp, cluster_crossings, degeneracy_scan, floquet_with, paired_spectrum, DegeneracyScan, FloquetOptions, RampSchedule, ScanAxis,
};
use kerrcat::Error;

use crate::output::{f, i, Table};
use crate::scenario::{Command, Scenario, Series, SweepSection};

pub const MAX_POINTS: usize = 100_000;
pub const MAX_DIM: usize = 1000;
pub const MAX_GRID_POINTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub enum RunError {
    /// Invalid scenario; nothing was computed.
    Config(String),
    /// A size limit was hit.
    Resource(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(fm, "configuration error: {m}"),
            RunError::Resource(m) => write!(fm, "resource guard: {m}"),
        }
    }
}

fn config(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

fn classify(e: Error) -> Result<String, RunError> {
    match e {
        Error::ResourceGuard { .. } => Err(RunError::Resource(e.to_string())),
        e => Ok(e.to_string()),
    }
}

/// A validated series ready to run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub label: String,
    pub command: Command,
    pub scenario: Scenario,
    pub circuit: CircuitParams,
    pub kerr: f64,
    pub bath: BathSpec,
    pub set: Option<DissipatorSet>,
    pub xs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SeriesOutput {
    pub label: String,
    /// File suffix and table; the main table has an empty suffix.
    pub tables: Vec<(String, Table)>,
    pub points: usize,
    pub failures: Vec<(f64, String)>,
    pub warnings: Vec<String>,
}

fn default_dim_for(command: Command) -> usize {
    match command {
        Command::Floquet | Command::Ramp => 60,
        _ => 40,
    }
}

fn check_sweep(command: Command, sweep: Option<&SweepSection>) -> Result<Vec<f64>, RunError> {
    let axes = command.axes();
    let Some(s) = sweep else {
        if axes.is_empty() {
            return Ok(Vec::new());
        }
        return Err(config(format!("{} needs a [sweep] section with axis one of {axes:?}", command.name())));
    };
    if axes.is_empty() {
        return Err(config(format!("{} takes no [sweep] section", command.name())));
    }
    if !axes.contains(&s.axis.as_str()) {
        return Err(config(format!("sweep axis '{}' is not valid for {}; expected one of {axes:?}", s.axis, command.name())));
    }
    if !(s.min.is_finite() && s.max.is_finite()) {
        return Err(config("sweep range must be finite"));
    }
    if s.min > s.max {
        return Err(config(format!("malformed sweep range: min {} > max {}", s.min, s.max)));
    }
    if s.points == 0 || (s.points == 1 && s.min != s.max) {
        return Err(config(format!("sweep over [{}, {}] needs at least {} points", s.min, s.max, if s.min == s.max { 1 } else { 2 })));
    }
    if s.points > MAX_POINTS {
        return Err(RunError::Resource(format!("{} sweep points exceed the limit {MAX_POINTS}", s.points)));
    }
    Ok(s.values())
}

fn circuit_params(s: &Scenario) -> Result<CircuitParams, RunError> {
    let c = &s.circuit;
    let topology = match c.topology.as_str() {
        "sts" => Topology::Sts,
        "squid" => Topology::Squid,
        t => return Err(config(format!("circuit.topology '{t}' must be \"sts\" or \"squid\""))),
    };
    let mut p = CircuitParams {
        ej1: c.ej1,
        ej2: c.ej2,
        ej3: c.ej3,
        ec: c.ec,
        delta_phi: c.delta_phi,
        omega_d: mhz_to_angular(c.drive_mhz),
        m: c.m,
        n: c.n,
        topology,
        delta_ext: mhz_to_angular(c.detuning_ext_mhz),
    };
    p.validate().map_err(config)?;
    if c.resonant_drive {
        let e = effective_params(&CircuitParams { delta_phi: 0.0, ..p.clone() }).map_err(config)?;
        p.omega_d = 2.0 * (e.eps_c - 2.0 * e.kerr);
    }
    Ok(p)
}

fn bath_spec(s: &Scenario, omega_d: f64, kerr: f64) -> Result<BathSpec, RunError> {
    let b = &s.bath;
    let kappa = match b.gamma_over_k {
        Some(r) => r * kerr,
        None => kerrcat::dissipation::rate_from_khz(b.gamma_khz),
    };
    let spec = match b.n_th {
        Some(n) => BathSpec::with_occupation(kappa, n, omega_d),
        None => BathSpec::uniform(kappa, b.temperature_mk * 1e-3, omega_d),
    };
    spec.validate().map_err(config)?;
    Ok(spec)
}

fn check_numerics(p: &Prepared) -> Result<(), RunError> {
    let n = &p.scenario.numerics;
    if let Some(d) = n.dim {
        if d < 2 {
            return Err(config(format!("numerics.dim = {d} must be at least 2")));
        }
        if d > MAX_DIM {
            return Err(RunError::Resource(format!("numerics.dim = {d} exceeds the limit {MAX_DIM}")));
        }
    }
    if n.max_dim > MAX_DIM {
        return Err(RunError::Resource(format!("numerics.max_dim = {} exceeds the limit {MAX_DIM}", n.max_dim)));
    }
    let positive = [
        ("n_pairs", n.n_pairs),
        ("levels", n.levels),
        ("initial_pairs", n.initial_pairs),
        ("max_pairs", n.max_pairs),
        ("dim_step", n.dim_step),
        ("floquet_steps", n.floquet_steps),
        ("ramp_steps", n.ramp_steps),
        ("ramp_records", n.ramp_records),
    ];
    for (name, v) in positive {
        if v == 0 {
            return Err(config(format!("numerics.{name} must be positive")));
        }
    }
    let tolerances = [
        ("pair_tolerance", n.pair_tolerance),
        ("tail_tolerance", n.tail_tolerance),
        ("cluster_width", n.cluster_width),
        ("floquet_tolerance", n.floquet_tolerance),
        ("ramp_steepness", n.ramp_steepness),
        ("grid_extent", n.grid_extent),
    ];
    for (name, v) in tolerances {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config(format!("numerics.{name} = {v} must be positive")));
        }
    }
    if !(n.ramp_duration_k >= 0.0 && n.ramp_duration_k.is_finite()) {
        return Err(config("numerics.ramp_duration_k must be nonnegative"));
    }
    if n.grid_points < 2 {
        return Err(config("numerics.grid_points must be at least 2"));
    }
    if n.grid_points > MAX_GRID_POINTS {
        return Err(RunError::Resource(format!("numerics.grid_points = {} exceeds the limit {MAX_GRID_POINTS}", n.grid_points)));
    }
    let m = &p.scenario.model;
    for (name, v) in [("eps2_over_K", m.eps2_over_k), ("delta_over_K", m.delta_over_k), ("lambda_over_K", m.lambda_over_k)] {
        if !v.is_finite() {
            return Err(config(format!("model.{name} must be finite")));
        }
    }
    if !(m.gamma_phi_over_k >= 0.0 && m.gamma_phi_over_k.is_finite()) {
        return Err(config("model.gamma_phi_over_K must be nonnegative"));
    }
    Ok(())
}

pub fn prepare(command: Command, series: &Series) -> Result<Prepared, RunError> {
    let s = &series.scenario;
    if let Some(c) = s.command {
        if c != command {
            return Err(config(format!("scenario is for '{}' but '{}' was requested", c.name(), command.name())));
        }
    }
    if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(config(format!("name '{}' must be nonempty and use only [A-Za-z0-9_-]", s.name)));
    }
    if s.output.format != "csv" {
        return Err(config(format!("output.format '{}' is not supported; use \"csv\"", s.output.format)));
    }
    let xs = check_sweep(command, s.sweep.as_ref())?;
    let circuit = circuit_params(s)?;
    let kerr = effective_params(&CircuitParams { delta_phi: 0.0, ..circuit.clone() }).map_err(config)?.kerr;
    let bath = bath_spec(s, circuit.omega_d, kerr)?;
    let set = match command {
        Command::Lifetime => Some(DissipatorSet::from_name(&s.model.dissipators).ok_or_else(|| {
            config(format!(
                "model.dissipators '{}' is not one of {:?}",
                s.model.dissipators,
                DissipatorSet::ALL.map(DissipatorSet::name)
            ))
        })?),
        _ => None,
    };
    let p = Prepared { label: series.label.clone(), command, scenario: s.clone(), circuit, kerr, bath, set, xs };
    check_numerics(&p)?;
    if command == Command::Lifetime {
        lifetime_config(&p).validate().map_err(config)?;
    }
    Ok(p)
}

/// Resolved physical quantities recorded in the sidecar.
pub fn derived(p: &Prepared) -> serde_json::Value {
    let at_depth = effective_params(&p.circuit).ok();
    let n_th = p.bath.occupation(FreqLabel::HalfDrive).ok();
    json!({
        "kerr_over_h_mhz": angular_to_mhz(p.kerr),
        "omega_d_over_h_mhz": angular_to_mhz(p.circuit.omega_d),
        "eps_c_over_h_mhz": at_depth.as_ref().map(|e| angular_to_mhz(e.eps_c)),
        "phi_zps": at_depth.as_ref().map(|e| e.phi_zps),
        "eps2_over_K_at_delta_phi": at_depth.as_ref().map(|e| e.eps2 / p.kerr),
        "lambda_over_K_at_delta_phi": at_depth.as_ref().map(|e| e.lambda / p.kerr),
        "kappa_per_us": p.bath.kappa(FreqLabel::HalfDrive).ok(),
        "n_th_half_drive": n_th,
    })
}

fn lifetime_config(p: &Prepared) -> LifetimeConfig {
    let m = &p.scenario.model;
    let n = &p.scenario.numerics;
    LifetimeConfig {
        eps2_ratio: m.eps2_over_k,
        detuning_ratio: m.delta_over_k,
        gamma_phi_ratio: m.gamma_phi_over_k,
        compensate: m.compensate,
        suppress_lambda: m.suppress_lambda,
        track_drive_shift: m.track_drive_shift,
        options: LifetimeOptions {
            initial_pairs: n.initial_pairs,
            max_pairs: n.max_pairs,
            pair_tolerance: n.pair_tolerance,
            dim: n.dim,
            max_dim: n.max_dim,
            dim_step: n.dim_step,
            tail_tolerance: n.tail_tolerance,
        },
        ..LifetimeConfig::new(p.circuit.clone(), p.bath.clone(), p.set.expect("lifetime has a dissipator set"))
    }
}

fn space(p: &Prepared) -> Result<FockSpace, RunError> {
    FockSpace::new(p.scenario.numerics.dim.unwrap_or(default_dim_for(p.command))).map_err(config)
}

fn axis_name(p: &Prepared) -> &str {
    p.scenario.sweep.as_ref().map_or("", |s| s.axis.as_str())
}

/// Model ratios with the swept one replaced by `x`.
fn ratios_at(p: &Prepared, x: Option<f64>) -> KerrCoefficients {
    let m = &p.scenario.model;
    let (mut eps2, mut delta) = (m.eps2_over_k, m.delta_over_k);
    match (axis_name(p), x) {
        ("eps2_over_K", Some(x)) => eps2 = x,
        ("delta_over_K", Some(x)) => delta = x,
        _ => {}
    }
    KerrCoefficients::from_ratios(p.kerr, delta, eps2, m.lambda_over_k)
}

/// Evaluates `f` at every sweep value in parallel, keeping order.
fn per_point<T: Send>(xs: &[f64], f: impl Fn(f64) -> kerrcat::Result<T> + Sync) -> Result<Vec<Result<T, String>>, RunError> {
    let raw: Vec<kerrcat::Result<T>> = xs.par_iter().map(|&x| f(x)).collect();
    raw.into_iter().map(single).collect()
}

fn single<T>(r: kerrcat::Result<T>) -> Result<Result<T, String>, RunError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) => classify(e).map(Err),
    }
}

pub fn compute(p: &Prepared) -> Result<SeriesOutput, RunError> {
    let mut out = SeriesOutput { label: p.label.clone(), tables: Vec::new(), points: p.xs.len().max(1), failures: Vec::new(), warnings: Vec::new() };
    match p.command {
        Command::Spectrum => spectrum(p, &mut out)?,
        Command::Degeneracy => degeneracy(p, &mut out)?,
        Command::Floquet => floquet(p, &mut out)?,
        Command::Ramp => ramp(p, &mut out)?,
        Command::Lifetime => lifetime(p, &mut out)?,
        Command::Steady => steady(p, &mut out)?,
        Command::Wigner => wigner_map(p, &mut out)?,
        Command::Surface => surface(p, &mut out)?,
        Command::Validity => validity(p, &mut out)?,
    }
    Ok(out)
}

fn spectrum(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let s = space(p)?;
    let n_pairs = p.scenario.numerics.n_pairs;
    let axis = axis_name(p);
    let results = per_point(&p.xs, |x| paired_spectrum(&build_kerr(&ratios_at(p, Some(x)), s), n_pairs))?;
    let mut t = Table::new(&[axis, "pair", "even_over_K", "odd_over_K", "splitting_over_K"]);
    for (&x, r) in p.xs.iter().zip(results) {
        match r {
            Ok(ps) => {
                for (k, pair) in ps.pairs.iter().enumerate() {
                    t.push(vec![f(x), i(k), f(pair.even / p.kerr), f(pair.odd / p.kerr), f(pair.splitting() / p.kerr)]);
                }
            }
            Err(e) => {
                for k in 0..n_pairs {
                    t.push(vec![f(x), i(k), f(f64::NAN), f(f64::NAN), f(f64::NAN)]);
                }
                out.failures.push((x, e));
            }
        }
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn degeneracy(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let sweep = p.scenario.sweep.as_ref().expect("validated");
    let axis = if sweep.axis == "delta_over_K" { ScanAxis::Detuning } else { ScanAxis::Squeezing };
    let scan = DegeneracyScan {
        base: ratios_at(p, None),
        axis,
        range: (sweep.min, sweep.max),
        points: sweep.points,
        n_pairs: p.scenario.numerics.n_pairs,
        dim: space(p)?.dim(),
    };
    out.points = 1;
    let mut t = Table::new(&["cluster", "center", "pair", sweep.axis.as_str(), "residual"]);
    match single(degeneracy_scan(&scan))? {
        Ok(crossings) => {
            for (k, cl) in cluster_crossings(&crossings, p.scenario.numerics.cluster_width).iter().enumerate() {
                for c in &cl.crossings {
                    t.push(vec![i(k), f(cl.center), i(c.pair), f(c.value), f(c.residual)]);
                }
            }
        }
        Err(e) => out.failures.push((f64::NAN, e)),
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn floquet(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let s = space(p)?;
    let n = &p.scenario.numerics;
    let opts = FloquetOptions { initial_steps: n.floquet_steps, max_steps: n.floquet_max_steps, tolerance: n.floquet_tolerance, exact_drive: n.exact_drive };
    let results = per_point(&p.xs, |x| {
        let dp = delta_phi_for_squeezing(&p.circuit, x * p.kerr)?;
        floquet_with(&CircuitParams { delta_phi: dp, ..p.circuit.clone() }, s, n.levels, &opts)
    })?;
    let mut t = Table::new(&["eps2_over_K", "level", "parity", "quasi_over_K", "effective_over_K", "overlap"]);
    for (&x, r) in p.xs.iter().zip(results) {
        match r {
            Ok(spec) => {
                for (k, l) in spec.levels.iter().enumerate() {
                    t.push(vec![f(x), i(k), i(l.parity.sign() as i64), f(l.quasi / p.kerr), f(l.effective / p.kerr), f(l.overlap)]);
                }
            }
            Err(e) => {
                for k in 0..=n.levels {
                    t.push(vec![f(x), i(k), i(0), f(f64::NAN), f(f64::NAN), f(f64::NAN)]);
                }
                out.failures.push((x, e));
            }
        }
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn ramp(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let n = &p.scenario.numerics;
    let schedule = RampSchedule {
        target_eps2_over_k: p.scenario.model.eps2_over_k,
        duration: n.ramp_duration_k / p.kerr,
        steepness: n.ramp_steepness,
        steps: n.ramp_steps,
        records: n.ramp_records,
    };
    let mut t = Table::new(&["t_us", "eps2_over_K", "overlap", "eigen_overlap", "photon_number"]);
    match single(adiabatic_ramp(&p.circuit, &schedule, space(p)?))? {
        Ok(r) => {
            for k in 0..r.times.len() {
                let tk = r.times[k];
                let ratio = schedule.profile(tk) * schedule.target_eps2_over_k;
                t.push(vec![f(tk), f(ratio), f(r.overlap[k]), f(r.eigen_overlap[k]), f(r.photon_number[k])]);
            }
        }
        Err(e) => out.failures.push((f64::NAN, e)),
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn lifetime(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let cfg = lifetime_config(p);
    let axis = SweepAxis::from_name(axis_name(p)).expect("validated axis");
    let results = per_point(&p.xs, |x| lifetime_point(axis, x, &cfg))?;
    let mut header = vec!["eps2_over_K", "T_alpha_us", "lambda_re", "M_lv", "dim"];
    if axis != SweepAxis::Eps2Ratio {
        header.insert(0, axis.name());
    }
    let mut t = Table::new(&header);
    let mut unconverged = 0;
    for (&x, r) in p.xs.iter().zip(results) {
        let mut row = match r {
            Ok(pt) => {
                unconverged += usize::from(!pt.converged);
                vec![f(pt.eps2_over_k), f(pt.t_alpha), f(pt.lambda_re), i(pt.pairs), i(pt.dim)]
            }
            Err(e) => {
                out.failures.push((x, e));
                vec![f(f64::NAN), f(f64::NAN), f(f64::NAN), i(0), i(0)]
            }
        };
        if axis != SweepAxis::Eps2Ratio {
            row.insert(0, f(x));
        }
        t.push(row);
    }
    if unconverged > 0 {
        out.warnings.push(format!("{unconverged} points stopped at the pair or truncation limit"));
    }
    out.tables.push((String::new(), t));
    Ok(())
}

/// Single-photon loss and gain at κ and the half-drive occupation, plus
/// optional dephasing, around the Hamiltonian built from the model ratios.
fn ratio_master_equation(p: &Prepared, x: Option<f64>, s: FockSpace) -> kerrcat::Result<MasterEquation> {
    let kappa = p.bath.kappa(FreqLabel::HalfDrive)?;
    let n_th = p.bath.occupation(FreqLabel::HalfDrive)?;
    let (a, ad, _) = ladder_ops(s);
    let mut terms = vec![DissipatorTerm::new(kappa * (1.0 + n_th), a, "loss")?, DissipatorTerm::new(kappa * n_th, ad, "heating")?];
    let gamma_phi = p.scenario.model.gamma_phi_over_k * p.kerr;
    if gamma_phi > 0.0 {
        terms.push(dephasing_term(gamma_phi, s)?);
    }
    MasterEquation::new(build_kerr(&ratios_at(p, x), s), terms)
}

fn steady_at(p: &Prepared, x: Option<f64>, s: FockSpace) -> kerrcat::Result<SteadyAnalysis> {
    steady_state(&ratio_master_equation(p, x, s)?)
}

fn steady(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let s = space(p)?;
    let results = per_point(&p.xs, |x| steady_at(p, Some(x), s))?;
    let mut t = Table::new(&[axis_name(p), "P1", "P2", "P_leak"]);
    for (&x, r) in p.xs.iter().zip(results) {
        match r {
            Ok(ss) => {
                for w in &ss.warnings {
                    out.warnings.push(format!("{} = {x}: {w}", axis_name(p)));
                }
                t.push(vec![f(x), f(ss.probabilities[0]), f(ss.probabilities[1]), f(ss.leakage)]);
            }
            Err(e) => {
                t.push(vec![f(x), f(f64::NAN), f(f64::NAN), f(f64::NAN)]);
                out.failures.push((x, e));
            }
        }
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn grid(p: &Prepared) -> PhaseGrid {
    let n = &p.scenario.numerics;
    let e = n.grid_extent;
    PhaseGrid::uniform((-e, e), n.grid_points, (-e, e), n.grid_points)
}

fn wigner_map(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let g = grid(p);
    let mut t = Table::new(&["x", "p", "W"]);
    let field = steady_at(p, None, space(p)?).and_then(|ss| {
        out.warnings.extend(ss.warnings.iter().cloned());
        wigner(&ss.rho, &g)
    });
    match single(field)? {
        Ok(w) => {
            out.warnings.extend(w.warnings.iter().cloned());
            for (ip, &pv) in g.ps.iter().enumerate() {
                for (ix, &xv) in g.xs.iter().enumerate() {
                    t.push(vec![f(xv), f(pv), f(w.at(ix, ip))]);
                }
            }
        }
        Err(e) => out.failures.push((f64::NAN, e)),
    }
    out.tables.push((String::new(), t));
    Ok(())
}

fn surface(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let g = grid(p);
    let m = &p.scenario.model;
    // Energies in units of K.
    let c = KerrCoefficients::from_ratios(1.0, m.delta_over_k, m.eps2_over_k, m.lambda_over_k);
    let surf = classical_surface(&c, &g);
    let mut t = Table::new(&["x", "p", "E_over_K"]);
    let nx = g.xs.len();
    for (ip, &pv) in g.ps.iter().enumerate() {
        for (ix, &xv) in g.xs.iter().enumerate() {
            t.push(vec![f(xv), f(pv), f(surf.values[ip * nx + ix])]);
        }
    }
    let mut ext = Table::new(&["x", "p", "E_over_K", "kind"]);
    for e in &surf.extrema {
        let kind = match e.kind {
            ExtremumKind::Well => 1,
            ExtremumKind::Saddle => 0,
            ExtremumKind::Hill => -1,
        };
        ext.push(vec![f(e.x), f(e.p), f(e.energy), i(kind)]);
    }
    out.tables.push((String::new(), t));
    out.tables.push(("extrema".into(), ext));
    Ok(())
}

fn validity(p: &Prepared, out: &mut SeriesOutput) -> Result<(), RunError> {
    let results = per_point(&p.xs, |dp| {
        let c = CircuitParams { delta_phi: dp, ..p.circuit.clone() };
        let ratio = (effective_params(&c)?.eps2 / p.kerr).abs();
        Ok((ratio, validity_report(&c, ratio)))
    })?;
    let mut t = Table::new(&[
        "delta_phi",
        "eps2_over_K",
        "phi_zps",
        "sixth_order_ratio",
        "squeeze_correction_2",
        "squeeze_correction_4",
        "sixth_harmonic_ratio",
        "passes",
    ]);
    for (&x, r) in p.xs.iter().zip(results) {
        match r {
            Ok((ratio, v)) => t.push(vec![
                f(x),
                f(ratio),
                f(v.phi_zps),
                f(v.sixth_order_ratio),
                f(v.squeeze_correction_2),
                f(v.squeeze_correction_4),
                f(v.sixth_harmonic_ratio),
                i(i64::from(v.passes())),
            ]),
            Err(e) => {
                t.push(vec![f(x), f(f64::NAN), f(f64::NAN), f(f64::NAN), f(f64::NAN), f(f64::NAN), f(f64::NAN), i(0)]);
                out.failures.push((x, e));
            }
        }
    }
    out.tables.push((String::new(), t));
    Ok(())
}
