//! Sampled certification of the structural assumptions on `A` and the kernels.
//!
//! Audits never fail with an error: every check becomes an [`AuditEntry`]
//! with the worst sampled value, the bound it was held to and a witness.

use serde::{Deserialize, Serialize};

use super::{DiffusionSpec, ModelSpec, PotentialSpec};

/// Outcome of one sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub check: String,
    pub passed: bool,
    /// Worst sampled quantity (or the fitted constant).
    pub value: f64,
    /// Bound the value is held to.
    pub bound: f64,
    /// Sample point realizing `value`.
    pub witness: Vec<f64>,
    pub note: String,
}

/// All checks for one diffusion law or kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub subject: String,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, check: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.check == check)
    }

    fn push(&mut self, check: &str, passed: bool, value: f64, bound: f64, witness: Vec<f64>, note: impl Into<String>) {
        self.entries.push(AuditEntry { check: check.into(), passed, value, bound, witness, note: note.into() });
    }
}

/// Rectangle of densities `[lo1, hi1] × [lo2, hi2]` with `lo > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo1: f64,
    pub hi1: f64,
    pub lo2: f64,
    pub hi2: f64,
}

impl SampleBox {
    pub fn square(lo: f64, hi: f64) -> Self {
        Self { lo1: lo, hi1: hi, lo2: lo, hi2: hi }
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Smallest eigenvalue of the symmetric matrix `[[a, b], [b, d]]`.
fn min_eig(a: f64, b: f64, d: f64) -> f64 {
    let tr = 0.5 * (a + d);
    let diff = 0.5 * (a - d);
    tr - (diff * diff + b * b).sqrt()
}

/// Checks (D1), (D2), (D3), the exponent range and the lower bound `A ≥ C(ρ₁^{m₁} + ρ₂^{m₂})`.
pub fn audit_diffusion(spec: &DiffusionSpec, sample_box: &SampleBox, n_samples: usize) -> AuditReport {
    let mut rep = AuditReport { subject: "diffusion".into(), entries: Vec::new() };
    let mut sb = *sample_box;
    if let Some(r) = spec.r1_max {
        sb.hi1 = sb.hi1.min(r);
    }
    let (m1, m2) = (spec.m1, spec.m2);
    let n = n_samples.max(2);
    let xs1 = log_space(sb.lo1, sb.hi1, n);
    let xs2 = log_space(sb.lo2, sb.hi2, n);

    // (D1)
    let b0 = spec.b_jet(0.0, 0.0);
    let d1_val = b0[0].abs().max(b0[1].abs()).max(b0[2].abs());
    rep.push(
        "D1",
        m1 > 1.0 && m2 > 1.0 && d1_val <= 1e-10,
        d1_val,
        1e-10,
        vec![0.0, 0.0],
        format!("m1 = {m1}, m2 = {m2}; max(|B(0)|, |∇B(0)|)"),
    );

    // Exponent range m ≤ α < 3m.
    let alpha_ok = m1 <= spec.alpha1 && spec.alpha1 < 3.0 * m1 && m2 <= spec.alpha2 && spec.alpha2 < 3.0 * m2;
    rep.push(
        "alpha_range",
        alpha_ok,
        (spec.alpha1 / m1).max(spec.alpha2 / m2),
        3.0,
        vec![spec.alpha1, spec.alpha2],
        "max alpha_i / m_i, must lie in [1, 3)",
    );

    // A ≥ 0 and the lower bound constant, axes included.
    let mut axis1 = vec![0.0];
    axis1.extend(&xs1);
    let mut axis2 = vec![0.0];
    axis2.extend(&xs2);
    let mut a_min = f64::INFINITY;
    let mut a_wit = vec![0.0, 0.0];
    let mut c_ex = f64::INFINITY;
    let mut c_wit = vec![0.0, 0.0];
    for &r1 in &axis1 {
        for &r2 in &axis2 {
            if r1 == 0.0 && r2 == 0.0 {
                continue;
            }
            let a = spec.a(r1, r2);
            if a < a_min {
                a_min = a;
                a_wit = vec![r1, r2];
            }
            let ratio = a / (r1.powf(m1) + r2.powf(m2));
            if ratio < c_ex {
                c_ex = ratio;
                c_wit = vec![r1, r2];
            }
        }
    }
    rep.push("A_nonnegative", a_min >= 0.0, a_min, 0.0, a_wit, "min sampled A");
    rep.push("exD2", c_ex > 0.0, c_ex, 0.0, c_wit, "fitted C in A >= C (rho1^m1 + rho2^m2)");

    // (D3): smallest generalized eigenvalue of (D²A, diag(ξ^{m−2})).
    let mut best = (f64::INFINITY, f64::INFINITY, 0.0, 0.0);
    for &x1 in &xs1 {
        for &x2 in &xs2 {
            let j = spec.a_jet(x1, x2);
            let (w1, w2) = (x1.powf(m1 - 2.0), x2.powf(m2 - 2.0));
            let lam = min_eig(j[3] / w1, j[4] / (w1 * w2).sqrt(), j[5] / w2);
            let axis = (x1 / sb.hi1).min(x2 / sb.hi2);
            let tol = 1e-9 * (1.0 + best.0.abs());
            if lam < best.0 - tol || (lam <= best.0 + tol && axis < best.1) {
                best = (lam, axis, x1, x2);
            }
        }
    }
    let (c1_cert, _, w1x, w2x) = best;
    // Worst direction on a 32-direction fan at the witness.
    let j = spec.a_jet(w1x, w2x);
    let (w1, w2) = (w1x.powf(m1 - 2.0), w2x.powf(m2 - 2.0));
    let mut fan = (f64::INFINITY, 0.0);
    for k in 0..32 {
        let th = std::f64::consts::PI * k as f64 / 32.0;
        let (v1, v2) = (th.cos(), th.sin());
        let q = j[3] * v1 * v1 + 2.0 * j[4] * v1 * v2 + j[5] * v2 * v2;
        let r = q / (w1 * v1 * v1 + w2 * v2 * v2);
        if r < fan.0 {
            fan = (r, th);
        }
    }
    let declared_ok = spec.c1.map_or(true, |c| c <= c1_cert * (1.0 + 1e-9) + 1e-12);
    rep.push(
        "D3",
        c1_cert > 1e-12 && declared_ok,
        c1_cert,
        spec.c1.unwrap_or(0.0),
        vec![w1x, w2x, fan.1.cos(), fan.1.sin()],
        format!(
            "certified C1 (declared {:?}); witness (xi1, xi2, V1, V2), fan minimum {:.6e}",
            spec.c1, fan.0
        ),
    );

    // (D2): local growth exponents of the three Hessian terms at large η.
    let (e1_hi, e2_hi) = (spec.eta1(sb.hi1), spec.eta2(sb.hi2));
    let terms: [(&str, fn(&[f64; 6], f64, f64) -> f64); 3] = [
        ("D2:eta1^2*B11", |b, e1, _| e1 * e1 * b[3]),
        ("D2:eta2^2*B22", |b, _, e2| e2 * e2 * b[5]),
        ("D2:eta1*eta2*B12", |b, e1, e2| e1 * e2 * b[4]),
    ];
    let grid_hi = log_space(0.25, 1.0, 5);
    for (name, term) in terms {
        let f = |e1: f64, e2: f64| term(&spec.b_jet(e1, e2), e1, e2).abs();
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0);
        let d: f64 = 1e-4;
        let dl = ((1.0 + d) / (1.0 - d)).ln();
        for &s1 in &grid_hi {
            for &s2 in &grid_hi {
                let (e1, e2) = (s1 * e1_hi, s2 * e2_hi);
                let v = f(e1, e2);
                if !(v > 1e-300) {
                    continue;
                }
                let a = (f(e1 * (1.0 + d), e2).ln() - f(e1 * (1.0 - d), e2).ln()) / dl;
                let b = (f(e1, e2 * (1.0 + d)).ln() - f(e1, e2 * (1.0 - d)).ln()) / dl;
                let c = a * m1 / (2.0 * spec.alpha1) + b * m2 / (2.0 * spec.alpha2);
                if c > worst.0 {
                    worst = (c, a, b, e1, e2);
                }
            }
        }
        if worst.0 == f64::NEG_INFINITY {
            rep.push(name, true, 0.0, 1.0, Vec::new(), "term vanishes");
        } else {
            rep.push(
                name,
                worst.0 <= 1.0 + 1e-6,
                worst.0,
                1.0,
                vec![worst.3, worst.4],
                format!("fitted exponents a = {:.4}, b = {:.4}", worst.1, worst.2),
            );
        }
    }
    rep
}

/// Checks (HK1), (HK2), (H1) or (K1), evenness and gradient consistency.
pub fn audit_potential(spec: &PotentialSpec, sample_radius: f64, n_samples: usize) -> AuditReport {
    let mut rep = AuditReport { subject: spec.kind.name().into(), entries: Vec::new() };
    let n = n_samples.max(3) | 1;
    let r = sample_radius;
    let xs: Vec<f64> = (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
    let c = spec.constants;
    let h0 = spec.value(0.0);

    // (HK1), growth envelope of H − H(0).
    let mut c1_fit: f64 = 0.0;
    let mut c2_fit: f64 = 0.0;
    let mut wit1 = 0.0;
    let mut wit2 = 0.0;
    for &x in &xs {
        let v = spec.value(x) - h0;
        let lo = -v / (1.0 + x.abs().powf(c.growth_alpha));
        let hi = v / (1.0 + x * x);
        if lo > c1_fit {
            c1_fit = lo;
            wit1 = x;
        }
        if hi > c2_fit {
            c2_fit = hi;
            wit2 = x;
        }
    }
    let alpha_ok = c.growth_alpha > 0.0 && c.growth_alpha < 2.0;
    let note = if h0 == 0.0 {
        "fitted lower constant; H(0) = 0".to_string()
    } else {
        format!("fitted lower constant after shifting by H(0) = {h0}")
    };
    rep.push("HK1_lower", alpha_ok && c1_fit <= c.growth_c1, c1_fit, c.growth_c1, vec![wit1], note);
    rep.push("HK1_upper", c2_fit <= c.growth_c2, c2_fit, c.growth_c2, vec![wit2], "fitted upper constant");

    // (HK2), second difference quotients on a shrinking ladder.
    let ladder = [1e-1, 1e-2, 1e-3];
    let mut per_step = Vec::new();
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for &d in &ladder {
        let mut m = f64::NEG_INFINITY;
        for &x in &xs {
            let q = (spec.value(x + d) - 2.0 * spec.value(x) + spec.value(x - d)) / (d * d);
            if q > m {
                m = q;
            }
            if q > worst.0 {
                worst = (q, x, d);
            }
        }
        per_step.push(m);
    }
    let cbar = c.laplacian_bound;
    let diverging = per_step[2] > 5.0 * per_step[0].max(1e-12) && per_step[2] > cbar;
    rep.push(
        "HK2",
        worst.0 <= cbar + 1e-6 * (1.0 + cbar.abs()),
        worst.0,
        cbar,
        vec![worst.1, worst.2],
        if diverging {
            format!("second difference grows like 1/delta: {per_step:?}")
        } else {
            format!("max second difference per delta {per_step:?}")
        },
    );

    if spec.kind.is_self() {
        // (H1)
        let (mut m, mut w) = (0.0f64, 0.0);
        for &x in &xs {
            let q = spec.grad(x).abs() / (1.0 + x.abs());
            if q > m {
                m = q;
                w = x;
            }
        }
        rep.push("H1", m <= c.h1_const * (1.0 + 1e-9) + 1e-12, m, c.h1_const, vec![w], "sup |grad H| / (1 + |x|)");
        // Evenness.
        let (mut m, mut w) = (0.0f64, 0.0);
        for &x in &xs {
            let e = (spec.value(-x) - spec.value(x)).abs() / (1.0 + spec.value(x).abs());
            if e > m {
                m = e;
                w = x;
            }
        }
        rep.push("even", m <= 1e-12, m, 1e-12, vec![w], "relative |H(-x) - H(x)|");
    } else {
        // (K1): Lipschitz constants of K and its gradient.
        let lip = sup_abs(|x| spec.grad(x), &xs);
        let lip_grad = xs
            .windows(2)
            .map(|w| ((spec.grad(w[1]) - spec.grad(w[0])) / (w[1] - w[0])).abs())
            .fold(0.0, f64::max);
        let ok = c.lip_value.is_finite()
            && c.lip_grad.is_finite()
            && lip.0 <= c.lip_value * (1.0 + 1e-9) + 1e-12
            && lip_grad <= c.lip_grad * (1.0 + 1e-6) + 1e-9;
        rep.push(
            "K1",
            ok,
            lip.0,
            c.lip_value,
            vec![lip.1],
            format!("sampled Lip(grad K) = {lip_grad:.9}, declared {}", c.lip_grad),
        );
    }

    // Gradient against centered differences, away from kinks.
    let step = 1e-5;
    let (mut m, mut w) = (0.0f64, 0.0);
    for &x in xs.iter().filter(|x| x.abs() > 1e-3) {
        let fd = (spec.value(x + step) - spec.value(x - step)) / (2.0 * step);
        let e = (fd - spec.grad(x)).abs() / (1.0 + fd.abs());
        if e > m {
            m = e;
            w = x;
        }
    }
    rep.push("grad_consistency", m <= 1e-6, m, 1e-6, vec![w], "relative gap to centered differences");
    rep
}

/// `sup |f|` over samples, refined by golden-section search around the best sample.
fn sup_abs(f: impl Fn(f64) -> f64, xs: &[f64]) -> (f64, f64) {
    let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x).abs();
        if v > bv {
            bv = v;
            bi = i;
        }
    }
    let lo = xs[bi.saturating_sub(1)];
    let hi = xs[(bi + 1).min(xs.len() - 1)];
    let g = |x: f64| f(x).abs();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..100 {
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let xm = 0.5 * (a + b);
    if g(xm) > bv {
        (g(xm), xm)
    } else {
        (bv, xs[bi])
    }
}

/// Settings for a full model audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub sample_box: SampleBox,
    pub n_samples: usize,
    pub kernel_radius: f64,
    pub n_kernel_samples: usize,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self { sample_box: SampleBox::square(1e-3, 10.0), n_samples: 24, kernel_radius: 6.0, n_kernel_samples: 4001 }
    }
}

/// Audit of every component of a model, with the certified constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAudit {
    pub diffusion: AuditReport,
    pub kernels: Vec<AuditReport>,
    /// Certified coercivity constant of (D3).
    pub c1: f64,
    /// Fitted constant of the lower bound on `A`.
    pub c_exd2: f64,
}

impl ModelAudit {
    pub fn passed(&self) -> bool {
        self.diffusion.passed() && self.kernels.iter().all(|k| k.passed())
    }
}

/// Audits every component. A zero diffusion function has nothing to audit
/// and yields a single passing `not_applicable` entry with both constants 0.
pub fn audit_model(model: &ModelSpec, settings: &AuditSettings) -> ModelAudit {
    let diffusion = if model.diffusion.is_zero() {
        let mut rep = AuditReport { subject: "diffusion".into(), entries: Vec::new() };
        rep.push("not_applicable", true, 0.0, 0.0, Vec::new(), "zero diffusion function");
        rep
    } else {
        audit_diffusion(&model.diffusion, &settings.sample_box, settings.n_samples)
    };
    let kernels = [&model.h1, &model.h2, &model.k1, &model.k2]
        .iter()
        .map(|p| audit_potential(p, settings.kernel_radius, settings.n_kernel_samples))
        .collect();
    let c1 = diffusion.entry("D3").map_or(0.0, |e| e.value.max(0.0));
    let c_exd2 = diffusion.entry("exD2").map_or(0.0, |e| e.value.max(0.0));
    ModelAudit { diffusion, kernels, c1, c_exd2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, KernelForm, PotentialKind};

    fn sbox() -> SampleBox {
        SampleBox::square(1e-3, 10.0)
    }

    #[test]
    fn zero_model_is_not_applicable() {
        let audit = audit_model(&presets::zero_model(), &AuditSettings::default());
        assert!(audit.passed(), "{audit:#?}");
        assert_eq!((audit.c1, audit.c_exd2), (0.0, 0.0));
    }

    #[test]
    fn decoupled_passes_with_c1_two() {
        let rep = audit_diffusion(&presets::decoupled_diffusion(1.0, 1.0, 2.0, 2.0), &sbox(), 16);
        assert!(rep.passed(), "{rep:#?}");
        assert!((rep.entry("D3").unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn counterexample_fails_near_axis() {
        let rep = audit_diffusion(&presets::counterexample_diffusion(), &sbox(), 16);
        let d3 = rep.entry("D3").unwrap();
        assert!(!d3.passed);
        assert!(d3.witness[0].min(d3.witness[1]) <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn eta_linear_term_fails_d1() {
        let mut spec = presets::zero_diffusion();
        spec.law = crate::model::DiffusionLaw::EtaPolynomial {
            terms: vec![crate::model::Monomial { coef: 1.0, p: 1.0, q: 0.0 }],
        };
        assert!(!audit_diffusion(&spec, &sbox(), 8).entry("D1").unwrap().passed);
    }

    #[test]
    fn abs_kernel_fails_hk2() {
        let p = PotentialSpec::new(PotentialKind::SelfH1, KernelForm::Abs { coef: 1.0 });
        let rep = audit_potential(&p, 3.0, 601);
        assert!(rep.entry("even").unwrap().passed);
        assert!(!rep.entry("HK2").unwrap().passed);
    }

    #[test]
    fn gaussian_lipschitz_is_recovered() {
        let p = PotentialSpec::new(PotentialKind::CrossK1, KernelForm::Gaussian { weight: -1.0, width: 1.0 });
        let rep = audit_potential(&p, 4.0, 801);
        let k1 = rep.entry("K1").unwrap();
        assert!(k1.passed);
        assert!((k1.value - (2.0 / std::f64::consts::E).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn quadratic_cross_kernel_is_not_globally_lipschitz() {
        let p = PotentialSpec::new(PotentialKind::CrossK2, KernelForm::Quadratic { coef: 1.0 });
        assert!(!audit_potential(&p, 4.0, 201).entry("K1").unwrap().passed);
    }
}
