use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use super::data::{far_pair, far_pair_contraction, far_pair_unitary, gap_family, gap_pair};
use crate::channels::{KrausChannel, StinespringIsometry};
use crate::dilation::{example1_closed_form, maximize_scalar, minimize_over_env, MinimizeOptions};
use crate::error::Result;
use crate::linalg::{polar_unitary, ComplexMatrix, C64};
use crate::metrics::{diamond_distance, dist_sq_identity, env_distance, fidelity_sdp, gamma_mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// |actual − expected| ≤ tol
    Approx,
    /// actual ≤ expected + tol
    AtMost,
    /// actual ≥ expected − tol
    AtLeast,
    /// actual > expected
    Greater,
    /// actual < expected
    Less,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub label: String,
    pub actual: f64,
    pub expected: f64,
    pub tol: f64,
    pub relation: Relation,
    pub passed: bool,
}

/// Outcome of a reproduction: a table, named values and assertions.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub rows: Vec<serde_json::Value>,
    pub values: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
}

impl Report {
    fn new(name: &str) -> Self {
        Self { name: name.into(), rows: Vec::new(), values: BTreeMap::new(), assertions: Vec::new() }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), v);
    }

    fn check(&mut self, label: impl Into<String>, actual: f64, expected: f64, tol: f64, relation: Relation) {
        let passed = match relation {
            Relation::Approx => (actual - expected).abs() <= tol,
            Relation::AtMost => actual <= expected + tol,
            Relation::AtLeast => actual >= expected - tol,
            Relation::Greater => actual > expected,
            Relation::Less => actual < expected,
        };
        self.assertions.push(Assertion { label: label.into(), actual, expected, tol, relation, passed });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} ==", self.name);
        for row in &self.rows {
            if let Some(obj) = row.as_object() {
                let cells: Vec<String> = obj.iter().map(|(k, v)| format!("{k}={}", fmt_json(v))).collect();
                let _ = writeln!(s, "  {}", cells.join("  "));
            }
        }
        for (k, v) in &self.values {
            let _ = writeln!(s, "  {k:<32} {v:.9}");
        }
        for a in &self.assertions {
            let op = match a.relation {
                Relation::Approx => "≈",
                Relation::AtMost => "≤",
                Relation::AtLeast => "≥",
                Relation::Greater => ">",
                Relation::Less => "<",
            };
            let _ = writeln!(
                s,
                "  [{}] {}: {:.9} {op} {:.9} (tol {:e})",
                if a.passed { "ok" } else { "FAIL" },
                a.label,
                a.actual,
                a.expected,
                a.tol
            );
        }
        s
    }
}

fn fmt_json(v: &serde_json::Value) -> String {
    match v.as_f64() {
        Some(x) if v.is_f64() => format!("{x:.9}"),
        _ => v.to_string(),
    }
}

fn phase_rotation(n: usize) -> ComplexMatrix {
    let d: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, TAU * j as f64 / n as f64)).collect();
    ComplexMatrix::diag(&d)
}

/// Identity against the diagonal rotation by n-th roots of unity (m = 1).
pub fn repro_example1(n_max: usize) -> Result<Report> {
    let mut rep = Report::new("example1");
    let opts = MinimizeOptions::default();
    let mut prev_ratio = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let v1 = StinespringIsometry::new(ComplexMatrix::identity(n), n, 1)?;
        let v2 = StinespringIsometry::new(phase_rotation(n), n, 1)?;
        let (closed, closed_diamond) = example1_closed_form(n);
        let min = minimize_over_env(&v1, &v2, &opts)?;
        let diamond = diamond_distance(&v1.to_channel(), &v2.to_channel())?;
        let (lhs, rhs) = dist_sq_identity(&v1, &v2, &min.u_opt)?;
        rep.rows.push(json!({
            "n": n,
            "closed_form": closed,
            "lower": min.lower,
            "upper": min.upper,
            "diamond": diamond.value,
            "diamond_gap": diamond.gap,
        }));
        rep.check(format!("n={n} lower"), min.lower, closed, 1e-7, Relation::Approx);
        rep.check(format!("n={n} upper"), min.upper, closed, 1e-7, Relation::Approx);
        rep.check(format!("n={n} diamond"), diamond.value, closed_diamond, 1e-5, Relation::Approx);
        rep.check(format!("n={n} dist² = 2 − Γ"), lhs, rhs, 1e-6, Relation::Approx);
        if n >= 2 {
            let ratio = closed / closed_diamond.sqrt();
            rep.check(format!("n={n} ratio increases"), ratio, prev_ratio, 0.0, Relation::Greater);
            rep.check(format!("n={n} ratio below √2"), ratio, 2f64.sqrt(), 0.0, Relation::Less);
            prev_ratio = ratio;
        }
    }
    Ok(rep)
}

/// The 4×2 pair whose unitary maximum of Γ is strictly below the
/// contraction maximum.
pub fn repro_appendix_a() -> Result<Report> {
    let mut rep = Report::new("appendix-a");
    let (a, b) = gap_pair();
    let v1 = StinespringIsometry::new(a, 2, 2)?;
    let v2 = StinespringIsometry::new(b, 2, 2)?;
    let closed = (16.0 / 9.0 - 2.0 * (2.0f64 / 3.0).sqrt()).sqrt();
    let (x, one_d) = maximize_scalar(|x| gamma_mat(&v1, &v2, &gap_family(x)).unwrap_or(f64::NEG_INFINITY), 0.0, TAU, 2000);
    let min = minimize_over_env(&v1, &v2, &MinimizeOptions::default())?;
    let fid = fidelity_sdp(&v1, &v2)?;
    let two_f = fid.solution.value();
    let e10 = ComplexMatrix::unit(2, 2, 1, 0);
    let feasible = gamma_mat(&v1, &v2, &e10)?;

    rep.value("closed_form_unitary_max", closed);
    rep.value("one_parameter_argmax", x);
    rep.value("one_parameter_max", one_d);
    rep.value("riemannian_max", min.gamma_opt);
    rep.value("two_f_sdp", two_f);
    rep.value("two_f_sdp_gap", fid.solution.gap);
    rep.value("contraction_e10_value", feasible);
    rep.value("min_distance_upper", min.upper);
    rep.value("min_distance_lower", min.lower);
    rep.value("outlook_lhs", 2.0 * two_f);
    rep.value("outlook_rhs", 2.0 + min.gamma_opt);

    rep.check("one-parameter max", one_d, closed, 1e-6, Relation::Approx);
    rep.check("riemannian max", min.gamma_opt, closed, 1e-4, Relation::Approx);
    rep.check("contraction program 2F", two_f, 2.0 / 3.0, 1e-6, Relation::AtLeast);
    rep.check("E10 feasible value", feasible, 2.0 / 3.0, 1e-9, Relation::Approx);
    rep.check("strict gap", closed, 2.0 / 3.0, 0.0, Relation::Less);
    rep.check("min distance", min.upper, (2.0 - closed).sqrt(), 1e-4, Relation::Approx);
    Ok(rep)
}

/// The printed 6×3 pair whose minimal distance exceeds √2 although the
/// fidelity is nonzero.
pub fn repro_appendix_b() -> Result<Report> {
    let mut rep = Report::new("appendix-b");
    let (a, b) = far_pair();
    let id = ComplexMatrix::identity(3);
    let raw = (&a.adjoint_mul(&a) - &id).max_abs().max((&b.adjoint_mul(&b) - &id).max_abs());
    let v1 = StinespringIsometry::new(polar_unitary(&a)?, 3, 2)?;
    let v2 = StinespringIsometry::new(polar_unitary(&b)?, 3, 2)?;
    let min = minimize_over_env(&v1, &v2, &MinimizeOptions::default())?;
    let fid = fidelity_sdp(&v1, &v2)?;
    let printed_u = env_distance(&v1, &v2, &polar_unitary(&far_pair_unitary())?)?;
    let w0 = 0.5 * gamma_mat(&v1, &v2, &far_pair_contraction())?;

    rep.value("raw_isometry_residual", raw);
    rep.value("min_distance_upper", min.upper);
    rep.value("min_distance_lower", min.lower);
    rep.value("fidelity", fid.fidelity.value);
    rep.value("fidelity_gap", fid.fidelity.gap);
    rep.value("printed_unitary_distance", printed_u);
    rep.value("printed_contraction_value", w0);

    rep.check("raw isometry residual", raw, 0.0, 1e-6, Relation::AtMost);
    rep.check("minimizer upper", min.upper, 1.478, 2e-3, Relation::Approx);
    rep.check("upper exceeds √2", min.upper, 2f64.sqrt(), 0.0, Relation::Greater);
    rep.check("fidelity", fid.fidelity.value, 0.04, 1e-3, Relation::AtLeast);
    rep.check("printed contraction value", w0, 0.04, 1e-3, Relation::Approx);
    rep.check("printed unitary distance", printed_u, 1.478, 2e-3, Relation::Approx);
    Ok(rep)
}

/// id, the qutrit phase rotation and their equal mixture violate the
/// triangle inequality for the minimal dilation distance.
pub fn repro_triangle_counterexample() -> Result<Report> {
    let mut rep = Report::new("triangle");
    let n = 3;
    let u = phase_rotation(n);
    let id = ComplexMatrix::identity(n);
    let e0 = ComplexMatrix::ket(2, 0);
    let e1 = ComplexMatrix::ket(2, 1);
    let s = 0.5f64.sqrt();
    let a1 = id.kron(&e0);
    let a2 = u.kron(&e0);
    let a3 = (&id.kron(&e0) + &u.kron(&e1)).scale_real(s);
    let v1 = StinespringIsometry::new(a1, n, 2)?;
    let v2 = StinespringIsometry::new(a2, n, 2)?;
    let v3 = StinespringIsometry::new(a3, n, 2)?;
    let ch3 = KrausChannel::mixture(&[(0.5, &KrausChannel::identity(n)), (0.5, &KrausChannel::isometric(u.clone())?)])?;
    let choi_defect = (ch3.to_choi().matrix() - v3.to_channel().to_choi().matrix()).max_abs();
    rep.check("mixture matches the dilation", choi_defect, 0.0, 1e-12, Relation::AtMost);

    let target = (2.0 - 2f64.sqrt()).sqrt();
    let sigma_x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let b13 = env_distance(&v1, &v3, &ComplexMatrix::identity(2))?;
    let b23 = env_distance(&v2, &v3, &sigma_x)?;
    rep.check("feasible bound d(1,3)", b13, target, 1e-9, Relation::Approx);
    rep.check("feasible bound d(2,3)", b23, target, 1e-9, Relation::Approx);

    // both channels are unitary, so d(1,2) is taken at m = 1
    let w1 = StinespringIsometry::new(id.clone(), n, 1)?;
    let w2 = StinespringIsometry::new(u.clone(), n, 1)?;
    let opts = MinimizeOptions::default();
    let d12 = minimize_over_env(&w1, &w2, &opts)?;
    let d21 = minimize_over_env(&w2, &w1, &opts)?;
    let at_two = minimize_over_env(&v1, &v2, &opts)?;
    let d13 = minimize_over_env(&v1, &v3, &opts)?;
    let d31 = minimize_over_env(&v3, &v1, &opts)?;
    let d23 = minimize_over_env(&v2, &v3, &opts)?;
    let d32 = minimize_over_env(&v3, &v2, &opts)?;
    let sqrt3 = 3f64.sqrt();

    rep.value("d12_lower", d12.lower);
    rep.value("d12_upper", d12.upper);
    rep.value("d12_at_m2_upper", at_two.upper);
    rep.value("d13_upper", d13.upper);
    rep.value("d23_upper", d23.upper);
    rep.value("sqrt3", sqrt3);
    rep.value("two_sqrt_2_minus_sqrt2", 2.0 * target);

    rep.check("closed form √3", example1_closed_form(3).0, sqrt3, 1e-12, Relation::Approx);
    rep.check("d(1,2) lower", d12.lower, sqrt3, 1e-9, Relation::Approx);
    rep.check("d(1,2) upper", d12.upper, sqrt3, 1e-9, Relation::Approx);
    rep.check("d(1,3) optimizer", d13.upper, target, 1e-9, Relation::AtMost);
    rep.check("d(2,3) optimizer", d23.upper, target, 1e-9, Relation::AtMost);
    rep.check("symmetry d(1,2)", d21.upper, d12.upper, 1e-9, Relation::Approx);
    rep.check("symmetry d(1,3)", d31.upper, d13.upper, 1e-6, Relation::Approx);
    rep.check("symmetry d(2,3)", d32.upper, d23.upper, 1e-6, Relation::Approx);
    rep.check("triangle violated", sqrt3, 2.0 * target, 0.0, Relation::Greater);
    rep.check("triangle violated by computed bounds", d12.lower, d13.upper + d23.upper, 0.0, Relation::Greater);
    Ok(rep)
}
