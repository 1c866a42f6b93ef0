//! Real polynomials, fixed points, normalization, Julia-set geometry and the
//! multiplier audits.

use crate::error::{CoreError, Result};
use crate::exact::{self, exact_nth_root, format_rational, rational_approximation, to_f64};
use crate::roots::{self, eval_with_derivative};
use crate::series::{self, Coeff};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

const ROOT_TOL: f64 = 1e-12;
const EQUALITY_TOL: f64 = 1e-9;
const IMAG_TOL: f64 = 1e-9;
const SNAP_DENOMINATOR: i64 = 1_000_000;

/// Real polynomial stored with exact rational coefficients, ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<BigRational>,
    float: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(CoreError::InvalidInput(
                "polynomial degree must be at least 2".into(),
            ));
        }
        let float: Vec<f64> = coeffs.iter().map(to_f64).collect();
        if float.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::InvalidInput("coefficients must be finite".into()));
        }
        Ok(Self { coeffs, float })
    }

    /// Exact conversion of binary floating-point coefficients.
    pub fn from_f64(coeffs: &[f64]) -> Result<Self> {
        let exact = coeffs
            .iter()
            .map(|&c| {
                BigRational::from_float(c)
                    .ok_or_else(|| CoreError::InvalidInput(format!("non-finite coefficient {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(exact)
    }

    pub fn from_integers(coeffs: &[i64]) -> Result<Self> {
        Self::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> &[f64] {
        &self.float
    }

    pub fn coeffs_c(&self) -> Vec<Complex64> {
        self.float.iter().map(|&c| Complex64::new(c, 0.0)).collect()
    }

    pub fn leading(&self) -> &BigRational {
        &self.coeffs[self.degree()]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        series::eval_c(&self.float, z)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        series::eval(&self.float, &x)
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        series::eval(&self.coeffs, x)
    }

    pub fn derivative_f64(&self) -> Vec<f64> {
        series::derivative(&self.float)
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        let c = self.coeffs_c();
        eval_with_derivative(&c, z).1
    }

    pub fn derivative_exact(&self, x: &BigRational) -> BigRational {
        series::eval(&series::derivative(&self.coeffs), x)
    }

    /// Sum of coefficient magnitudes.
    pub fn l1_norm(&self) -> f64 {
        self.float.iter().map(|c| c.abs()).sum()
    }

    /// Human-readable form such as `z^2 + 5z`.
    pub fn pretty(&self) -> String {
        let mut terms = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let coef = if mag.is_one() && k > 0 {
                String::new()
            } else {
                format_rational(&mag)
            };
            let var = match k {
                0 => String::new(),
                1 => "z".into(),
                _ => format!("z^{k}"),
            };
            let body = format!("{coef}{var}");
            if terms.is_empty() {
                terms.push(if c.is_negative() { format!("-{body}") } else { body });
            } else {
                terms.push(format!("{} {body}", if c.is_negative() { "-" } else { "+" }));
            }
        }
        terms.join(" ")
    }
}

impl Serialize for RealPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("RealPolynomial", 3)?;
        let exact: Vec<String> = self.coeffs.iter().map(format_rational).collect();
        st.serialize_field("coefficients", &exact)?;
        st.serialize_field("coefficients_f64", &self.float)?;
        st.serialize_field("display", &self.pretty())?;
        st.end()
    }
}

/// Coefficients of `c(s + t)` as a polynomial in `t`.
pub fn taylor_shift<T: Coeff>(c: &[T], s: &T) -> Vec<T> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] = out[j].clone() + s.clone() * out[j + 1].clone();
        }
    }
    out
}

/// Affine change of variables `w = scale (z - shift)` linking the user's
/// polynomial to its normalized form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conjugation {
    #[serde(serialize_with = "ser_q")]
    pub scale: BigRational,
    #[serde(serialize_with = "ser_q")]
    pub shift: BigRational,
    /// False when scale or shift had to be rounded to floating point.
    pub exact: bool,
    pub original: RealPolynomial,
}

fn ser_q<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizedSystem {
    pub poly: RealPolynomial,
    pub lambda: f64,
    pub d: usize,
    pub rho: f64,
    pub conjugation: Conjugation,
}

impl NormalizedSystem {
    pub fn lambda_exact(&self) -> &BigRational {
        &self.poly.coeffs[1]
    }

    /// Whether the coefficients are the exact image of the user's input.
    pub fn is_exact(&self) -> bool {
        self.conjugation.exact
    }

    pub fn p(&self, z: Complex64) -> Complex64 {
        self.poly.eval(z)
    }

    /// Reconstructs the original polynomial, `p(z) = shift + q(scale (z - shift)) / scale`.
    pub fn denormalize(&self) -> Result<RealPolynomial> {
        let s = &self.conjugation.scale;
        let xi = &self.conjugation.shift;
        let mut sk = BigRational::one() / s.clone();
        let mut c = Vec::with_capacity(self.poly.coeffs.len());
        for q in &self.poly.coeffs {
            c.push(q.clone() * sk.clone());
            sk *= s.clone();
        }
        let mut out = taylor_shift(&c, &-xi.clone());
        out[0] = out[0].clone() + xi.clone();
        RealPolynomial::new(out)
    }
}

/// Conjugates `p` so that the given fixed point moves to 0 and the result is monic.
/// Fixed points that are (numerically) rational are snapped and treated exactly.
pub fn normalize(p: &RealPolynomial, fixed_point: Complex64) -> Result<NormalizedSystem> {
    let fail = |reason: &str, m: Complex64| CoreError::Normalization {
        point: fixed_point,
        multiplier: m,
        reason: reason.to_string(),
    };
    let scale_mag = p.l1_norm().max(1.0) * fixed_point.norm().max(1.0).powi(p.degree() as i32);
    let residual = (p.eval(fixed_point) - fixed_point).norm();
    let multiplier = p.eval_derivative(fixed_point);
    if residual > 1e-9 * scale_mag {
        return Err(fail("not a fixed point", multiplier));
    }
    if fixed_point.im.abs() > IMAG_TOL * fixed_point.norm().max(1.0) {
        return Err(fail("fixed point is not real", multiplier));
    }
    if let Some(q) = rational_approximation(fixed_point.re, SNAP_DENOMINATOR) {
        if p.eval_exact(&q) == q {
            return normalize_exact(p, &q);
        }
    }
    let xi = roots::polish(&shifted_fixed_coeffs(p), Complex64::new(fixed_point.re, 0.0)).re;
    let xi_q = BigRational::from_float(xi).ok_or_else(|| fail("non-finite", multiplier))?;
    normalize_with(p, &xi_q, false)
}

/// Exact normalization at a rational fixed point.
pub fn normalize_exact(p: &RealPolynomial, xi: &BigRational) -> Result<NormalizedSystem> {
    if p.eval_exact(xi) != *xi {
        return Err(CoreError::Normalization {
            point: Complex64::new(to_f64(xi), 0.0),
            multiplier: Complex64::new(to_f64(&p.derivative_exact(xi)), 0.0),
            reason: "not a fixed point".into(),
        });
    }
    normalize_with(p, xi, true)
}

fn shifted_fixed_coeffs(p: &RealPolynomial) -> Vec<Complex64> {
    let mut c = p.coeffs_c();
    c[1] -= 1.0;
    c
}

fn normalize_with(p: &RealPolynomial, xi: &BigRational, exact_xi: bool) -> Result<NormalizedSystem> {
    let d = p.degree();
    let lambda_q = p.derivative_exact(xi);
    let lambda = to_f64(&lambda_q);
    let point = Complex64::new(to_f64(xi), 0.0);
    if lambda <= 1.0 {
        return Err(CoreError::Normalization {
            point,
            multiplier: Complex64::new(lambda, 0.0),
            reason: "multiplier must exceed 1".into(),
        });
    }
    let lead = p.leading().clone();
    let (scale, exact_scale) = match exact_nth_root(&lead, (d - 1) as u32) {
        Some(s) => (s, true),
        None => {
            let l = to_f64(&lead);
            if l < 0.0 && (d - 1).is_multiple_of(2) {
                return Err(CoreError::Normalization {
                    point,
                    multiplier: Complex64::new(lambda, 0.0),
                    reason: "no real affine map makes this polynomial monic".into(),
                });
            }
            let s = l.signum() * l.abs().powf(1.0 / (d - 1) as f64);
            (BigRational::from_float(s).expect("finite scale"), false)
        }
    };
    let exact = exact_xi && exact_scale;
    // q(w) = s (p(xi + w/s) - xi)
    let shifted = taylor_shift(p.coeffs(), xi);
    let mut q = Vec::with_capacity(d + 1);
    let mut s_pow = scale.clone();
    for c in shifted.iter() {
        q.push(c.clone() * s_pow.clone());
        s_pow /= scale.clone();
    }
    q[0] = BigRational::zero();
    q[1] = lambda_q.clone();
    q[d] = BigRational::one();
    let lambda_q = q[1].clone();
    let poly = RealPolynomial::new(q)?;
    let lambda = to_f64(&lambda_q);
    Ok(NormalizedSystem {
        rho: (d as f64).ln() / lambda.ln(),
        poly,
        lambda,
        d,
        conjugation: Conjugation {
            scale,
            shift: xi.clone(),
            exact,
            original: p.clone(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointClass {
    Repelling,
    Attracting,
    Superattracting,
    Indifferent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointRecord {
    pub location: Complex64,
    pub multiplier: Complex64,
    pub class: FixedPointClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superattract_order: Option<usize>,
    /// Exact location when the root is rational.
    #[serde(serialize_with = "exact::serialize_rational_opt")]
    pub exact: Option<BigRational>,
}

impl FixedPointRecord {
    pub fn is_real(&self) -> bool {
        self.location.im.abs() <= IMAG_TOL * self.location.norm().max(1.0)
    }
}

/// All roots of `p(z) = z` with multiplicity, classified by multiplier.
pub fn fixed_points(p: &RealPolynomial) -> Result<Vec<FixedPointRecord>> {
    let found = roots::roots(&shifted_fixed_coeffs(p))?;
    let mut out = Vec::with_capacity(found.len());
    for z in found {
        let snapped = (z.im.abs() < 1e-9 * z.norm().max(1.0))
            .then(|| rational_approximation(z.re, SNAP_DENOMINATOR))
            .flatten()
            .filter(|q| p.eval_exact(q) == *q);
        let (location, multiplier) = match &snapped {
            Some(q) => (
                Complex64::new(to_f64(q), 0.0),
                Complex64::new(to_f64(&p.derivative_exact(q)), 0.0),
            ),
            None => (z, p.eval_derivative(z)),
        };
        let m = multiplier.norm();
        let exactly_zero = snapped.as_ref().is_some_and(|q| p.derivative_exact(q).is_zero());
        let class = if exactly_zero || m < ROOT_TOL {
            FixedPointClass::Superattracting
        } else if m < 1.0 - EQUALITY_TOL {
            FixedPointClass::Attracting
        } else if m > 1.0 + EQUALITY_TOL {
            FixedPointClass::Repelling
        } else {
            FixedPointClass::Indifferent
        };
        let superattract_order =
            (class == FixedPointClass::Superattracting).then(|| local_order(p, location, snapped.as_ref()));
        out.push(FixedPointRecord {
            location,
            multiplier,
            class,
            superattract_order,
            exact: snapped,
        });
    }
    Ok(out)
}

/// Index of the first nonvanishing Taylor coefficient of `p(w0 + t) - w0` beyond `t^1`.
fn local_order(p: &RealPolynomial, w0: Complex64, exact: Option<&BigRational>) -> usize {
    match exact {
        Some(q) => {
            let c = taylor_shift(p.coeffs(), q);
            (2..c.len()).find(|&k| !c[k].is_zero()).unwrap_or(p.degree())
        }
        None => {
            let c = taylor_shift(&p.coeffs_c(), &w0);
            let scale = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
            (2..c.len())
                .find(|&k| c[k].norm() > 1e-9 * scale)
                .unwrap_or(p.degree())
        }
    }
}

/// Picks the fixed point used by `auto` normalization: 0 when it is repelling
/// with real multiplier, otherwise the real fixed point with the largest real
/// multiplier above 1.
pub fn auto_fixed_point(p: &RealPolynomial) -> Result<Complex64> {
    let zero = BigRational::zero();
    if p.eval_exact(&zero).is_zero() && to_f64(&p.derivative_exact(&zero)) > 1.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    fixed_points(p)?
        .into_iter()
        .filter(|f| f.is_real() && f.multiplier.im.abs() < IMAG_TOL && f.multiplier.re > 1.0)
        .max_by(|a, b| a.multiplier.re.total_cmp(&b.multiplier.re))
        .map(|f| Complex64::new(f.location.re, 0.0))
        .ok_or_else(|| CoreError::InvalidInput("no real fixed point with real multiplier > 1".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JuliaKind {
    Interval,
    RealCantor,
    Circle,
    NonReal,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EndpointDynamics {
    BothFixed { a: f64, b: f64 },
    FixedAndPreimage { fixed: f64, preimage: f64 },
    TwoCycle { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JuliaGeometry {
    pub kind: JuliaKind,
    pub hull: Option<[f64; 2]>,
    pub endpoints_dynamics: Option<EndpointDynamics>,
}

impl JuliaGeometry {
    pub fn is_real(&self) -> bool {
        matches!(self.kind, JuliaKind::Interval | JuliaKind::RealCantor)
    }

    fn bare(kind: JuliaKind) -> Self {
        Self {
            kind,
            hull: None,
            endpoints_dynamics: None,
        }
    }
}

/// Decides whether the Julia set is real and, if so, whether it is the full hull interval.
pub fn real_julia_interval(sys: &NormalizedSystem) -> Result<JuliaGeometry> {
    if sys.d == 2 {
        return Ok(quadratic_geometry(sys));
    }
    match classify_exceptional(sys) {
        Exceptional::MonomialConjugate => return Ok(JuliaGeometry::bare(JuliaKind::Circle)),
        Exceptional::ChebyshevConjugate | Exceptional::Generic => {}
    }
    lap_geometry(&sys.poly)
}

/// For `z^2 + λz`, conjugate to `w^2 + c` with `c = λ/2 - λ²/4`.
fn quadratic_geometry(sys: &NormalizedSystem) -> JuliaGeometry {
    let lam = sys.lambda_exact().clone();
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let c = lam.clone() / two.clone() - lam.clone() * lam.clone() / four;
    let minus_two = -two;
    let real = |kind| JuliaGeometry {
        kind,
        hull: Some([-sys.lambda, 0.0]),
        endpoints_dynamics: Some(EndpointDynamics::FixedAndPreimage {
            fixed: 0.0,
            preimage: -sys.lambda,
        }),
    };
    if sys.is_exact() {
        if c.is_zero() {
            JuliaGeometry::bare(JuliaKind::Circle)
        } else if c == minus_two {
            real(JuliaKind::Interval)
        } else if c < minus_two {
            real(JuliaKind::RealCantor)
        } else {
            JuliaGeometry::bare(JuliaKind::NonReal)
        }
    } else {
        let cf = to_f64(&c);
        if cf.abs() < EQUALITY_TOL || (cf + 2.0).abs() < EQUALITY_TOL {
            JuliaGeometry::bare(JuliaKind::Unknown)
        } else if cf < -2.0 {
            real(JuliaKind::RealCantor)
        } else {
            JuliaGeometry::bare(JuliaKind::NonReal)
        }
    }
}

struct Candidate {
    a: f64,
    b: f64,
    dynamics: EndpointDynamics,
}

enum LapOutcome {
    Interval,
    Cantor,
    Borderline,
    Fail,
}

/// Lap test for degree ≥ 3: `[a, b]` is the hull of a real Julia set iff every
/// critical point lies inside and each monotone lap maps onto a superset of `[a, b]`.
fn lap_geometry(p: &RealPolynomial) -> Result<JuliaGeometry> {
    let scale = p.l1_norm().max(1.0);
    let crit = roots::real_roots(&p.derivative_f64())?;
    let max_im = crit.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-6 * scale {
        return Ok(JuliaGeometry::bare(JuliaKind::NonReal));
    }
    if max_im > 1e-9 * scale {
        return Ok(JuliaGeometry::bare(JuliaKind::Unknown));
    }
    let mut crit: Vec<f64> = crit.iter().map(|z| z.re).collect();
    crit.sort_by(f64::total_cmp);

    let mut borderline = false;
    for cand in candidates(p)? {
        match lap_test(p, &crit, cand.a, cand.b) {
            LapOutcome::Interval | LapOutcome::Cantor if !endpoints_repelling(p, &cand) => {
                borderline = true;
            }
            LapOutcome::Interval => {
                return Ok(JuliaGeometry {
                    kind: JuliaKind::Interval,
                    hull: Some([cand.a, cand.b]),
                    endpoints_dynamics: Some(cand.dynamics),
                })
            }
            LapOutcome::Cantor => {
                return Ok(JuliaGeometry {
                    kind: JuliaKind::RealCantor,
                    hull: Some([cand.a, cand.b]),
                    endpoints_dynamics: Some(cand.dynamics),
                })
            }
            LapOutcome::Borderline => borderline = true,
            LapOutcome::Fail => {}
        }
    }
    Ok(JuliaGeometry::bare(if borderline {
        JuliaKind::Unknown
    } else {
        JuliaKind::NonReal
    }))
}

fn real_points(z: &[Complex64]) -> Vec<f64> {
    let mut v: Vec<f64> = z
        .iter()
        .filter(|z| z.im.abs() < 1e-9 * z.norm().max(1.0))
        .map(|z| z.re)
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * a.abs().max(1.0));
    v
}

fn candidates(p: &RealPolynomial) -> Result<Vec<Candidate>> {
    let fixed = real_points(&roots::roots(&shifted_fixed_coeffs(p))?);
    let mut out = Vec::new();
    for (i, &a) in fixed.iter().enumerate() {
        for &b in &fixed[i + 1..] {
            out.push(Candidate {
                a,
                b,
                dynamics: EndpointDynamics::BothFixed { a, b },
            });
        }
        let mut pre = p.coeffs_c();
        pre[0] -= a;
        for x in real_points(&roots::roots(&pre)?) {
            if (x - a).abs() > 1e-9 * a.abs().max(1.0) {
                out.push(Candidate {
                    a: a.min(x),
                    b: a.max(x),
                    dynamics: EndpointDynamics::FixedAndPreimage {
                        fixed: a,
                        preimage: x,
                    },
                });
            }
        }
    }
    let pf = p.coeffs_f64();
    let mut pp = compose_poly(pf, pf);
    pp[1] -= 1.0;
    let cycle_pts = real_points(&roots::real_roots(&pp)?);
    for &a in &cycle_pts {
        let b = p.eval_f64(a);
        if (b - a).abs() > 1e-7 * a.abs().max(1.0) && a < b {
            out.push(Candidate {
                a,
                b,
                dynamics: EndpointDynamics::TwoCycle { a, b },
            });
        }
    }
    out.sort_by(|x, y| (x.b - x.a).total_cmp(&(y.b - y.a)));
    Ok(out)
}

/// Coefficients of `outer(inner(z))` for ordinary polynomials.
fn compose_poly(outer: &[f64], inner: &[f64]) -> Vec<f64> {
    let len = (outer.len() - 1) * (inner.len() - 1) + 1;
    let mut out = vec![0.0; len];
    for &c in outer.iter().rev() {
        out = series::mul(&out, inner, len);
        out[0] += c;
    }
    out
}

fn endpoints_repelling(p: &RealPolynomial, cand: &Candidate) -> bool {
    let dp = |x: f64| series::eval(&p.derivative_f64(), &x);
    let thr = 1.0 + EQUALITY_TOL;
    match cand.dynamics {
        EndpointDynamics::BothFixed { a, b } => dp(a).abs() > thr && dp(b).abs() > thr,
        EndpointDynamics::FixedAndPreimage { fixed, .. } => dp(fixed).abs() > thr,
        EndpointDynamics::TwoCycle { a, b } => (dp(a) * dp(b)).abs() > thr,
    }
}

fn lap_test(p: &RealPolynomial, crit: &[f64], a: f64, b: f64) -> LapOutcome {
    let width = b - a;
    let tol = EQUALITY_TOL * width.max(1.0);
    let clear = 1e-7 * width.max(1.0);
    if crit.iter().any(|&c| c <= a + tol || c >= b - tol) {
        return LapOutcome::Fail;
    }
    let mut knots = vec![a];
    knots.extend_from_slice(crit);
    knots.push(b);
    let values: Vec<f64> = knots.iter().map(|&x| p.eval_f64(x)).collect();
    let mut worst = f64::INFINITY;
    for w in values.windows(2) {
        let lo = w[0].min(w[1]);
        let hi = w[0].max(w[1]);
        worst = worst.min(a - lo).min(hi - b);
    }
    if worst < -clear {
        return LapOutcome::Fail;
    }
    if worst < -tol {
        return LapOutcome::Borderline;
    }
    let mut any_outside = false;
    for &v in &values[1..values.len() - 1] {
        let gap = (a - v).max(v - b);
        if gap.abs() <= tol {
            continue;
        }
        if gap > clear {
            any_outside = true;
        } else {
            return LapOutcome::Borderline;
        }
    }
    if any_outside {
        LapOutcome::Cantor
    } else {
        LapOutcome::Interval
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exceptional {
    MonomialConjugate,
    ChebyshevConjugate,
    Generic,
}

/// Chebyshev polynomial `T_d` coefficients, ascending.
pub fn chebyshev_t(d: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    let mut cur = vec![BigInt::zero(), BigInt::one()];
    if d == 0 {
        return prev;
    }
    for _ in 1..d {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += 2 * c;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Centre `β = -p_{d-1}/d` of the monic polynomial.
fn centre(poly: &RealPolynomial) -> BigRational {
    let d = poly.degree();
    -poly.coeffs()[d - 1].clone() / BigRational::from_integer(BigInt::from(d))
}

/// `(z - β)^d + β`, ascending.
fn monomial_model(d: usize, beta: &BigRational) -> Vec<BigRational> {
    let mut y = vec![BigRational::zero(); d + 1];
    y[d] = BigRational::one();
    y[0] = beta.clone();
    taylor_shift(&y, &-beta.clone())
}

/// `β + 2 T_d((z - β)/2)`, ascending.
pub fn chebyshev_model(d: usize, beta: &BigRational) -> Vec<BigRational> {
    let t = chebyshev_t(d);
    let mut y = Vec::with_capacity(d + 1);
    let mut half = BigRational::from_integer(2.into());
    for c in t {
        y.push(BigRational::from_integer(c) * half.clone());
        half /= BigRational::from_integer(2.into());
    }
    y[0] = y[0].clone() + beta.clone();
    taylor_shift(&y, &-beta.clone())
}

fn matches_model(sys: &NormalizedSystem, model: &[BigRational]) -> bool {
    let c = sys.poly.coeffs();
    if sys.is_exact() {
        return c == model;
    }
    let scale = sys.poly.l1_norm().max(1.0);
    c.iter()
        .zip(model)
        .all(|(x, y)| (to_f64(x) - to_f64(y)).abs() <= EQUALITY_TOL * scale)
}

/// Algebraic test for affine conjugacy to `z^d` or `T_d`.
pub fn classify_exceptional(sys: &NormalizedSystem) -> Exceptional {
    let beta = centre(&sys.poly);
    if matches_model(sys, &monomial_model(sys.d, &beta)) {
        Exceptional::MonomialConjugate
    } else if matches_model(sys, &chebyshev_model(sys.d, &beta)) {
        Exceptional::ChebyshevConjugate
    } else {
        Exceptional::Generic
    }
}

/// Elementary closed forms of the Poincaré function for exceptional systems.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ClosedForm {
    /// `β + c0 exp(z / c0)` with `c0 = -β`.
    Exponential { beta: f64 },
    /// `β + 2 cosh √z`.
    Cosh { beta: f64 },
    /// `β - 2 cos √z`.
    NegCos { beta: f64 },
    /// `β + 2 cos(θ0 - z / (2 sin θ0))`.
    Cosine { beta: f64, theta0: f64 },
}

impl ClosedForm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            ClosedForm::Exponential { beta } => {
                let c0 = -beta;
                beta + c0 * (z / c0).exp()
            }
            ClosedForm::Cosh { beta } => beta + 2.0 * z.sqrt().cosh(),
            ClosedForm::NegCos { beta } => beta - 2.0 * z.sqrt().cos(),
            ClosedForm::Cosine { beta, theta0 } => beta + 2.0 * (theta0 - z / (2.0 * theta0.sin())).cos(),
        }
    }
}

pub fn closed_form_oracle(sys: &NormalizedSystem) -> Option<ClosedForm> {
    let beta = to_f64(&centre(&sys.poly));
    match classify_exceptional(sys) {
        Exceptional::Generic => None,
        Exceptional::MonomialConjugate => Some(ClosedForm::Exponential { beta }),
        Exceptional::ChebyshevConjugate => {
            let x0 = -beta / 2.0;
            if (x0 - 1.0).abs() < EQUALITY_TOL {
                Some(ClosedForm::Cosh { beta })
            } else if (x0 + 1.0).abs() < EQUALITY_TOL {
                Some(ClosedForm::NegCos { beta })
            } else {
                let theta0 = x0.clamp(-1.0, 1.0).acos();
                let turns = (sys.d - 1) as f64 * theta0 / (2.0 * PI);
                let on_lattice = (turns - turns.round()).abs() < 1e-9;
                (on_lattice && (sys.lambda - sys.d as f64).abs() < EQUALITY_TOL)
                    .then_some(ClosedForm::Cosine { beta, theta0 })
            }
        }
    }
}

/// `-2 + 2 T_d((z + 2)/2)`: the Chebyshev system of degree `d` fixing 0 at
/// the interval endpoint (multiplier `d²`). Its Poincaré oscillation is constant.
pub fn chebyshev_companion(d: usize) -> Result<NormalizedSystem> {
    let beta = BigRational::from_integer((-2).into());
    let p = RealPolynomial::new(chebyshev_model(d, &beta))?;
    normalize_exact(&p, &BigRational::zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullPosition {
    Interior,
    Endpoint,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditFlag {
    Pass,
    Equality,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierEntry {
    pub location: f64,
    pub position: HullPosition,
    pub multiplier_abs: f64,
    pub bound: f64,
    pub flag: AuditFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttractingCount {
    pub count: usize,
    pub gamma: f64,
    /// `2 log_γ d`; infinite when no fixed point has `|p'| > 1`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierAudit {
    pub hull: [f64; 2],
    pub entries: Vec<MultiplierEntry>,
    pub exceptional: Exceptional,
    /// True when equality flags appear exactly for Chebyshev-conjugate systems.
    pub chebyshev_consistent: bool,
    pub any_violation: bool,
    pub attracting: AttractingCount,
}

/// Bound on the number of attracting fixed points, `2 log_γ d`.
pub fn attracting_count_bound(p: &RealPolynomial) -> Result<AttractingCount> {
    let fps = fixed_points(p)?;
    let count = fps
        .iter()
        .filter(|f| {
            matches!(
                f.class,
                FixedPointClass::Attracting | FixedPointClass::Superattracting
            )
        })
        .count();
    let gamma = fps.iter().map(|f| f.multiplier.norm()).fold(0.0, f64::max);
    let bound = if gamma > 1.0 {
        2.0 * (p.degree() as f64).ln() / gamma.ln()
    } else {
        f64::INFINITY
    };
    Ok(AttractingCount {
        count,
        gamma,
        bound,
        holds: count as f64 <= bound + EQUALITY_TOL,
    })
}

/// Checks `|p'(ξ)| ≥ d` at interior and `≥ d²` at endpoint fixed points of a real Julia set.
pub fn audit_multipliers(sys: &NormalizedSystem) -> Result<MultiplierAudit> {
    let geometry = real_julia_interval(sys)?;
    let hull = match (geometry.is_real(), geometry.hull) {
        (true, Some(h)) => h,
        _ => {
            return Err(CoreError::NotApplicable(format!(
                "Julia set is not certified real ({:?})",
                geometry.kind
            )))
        }
    };
    let d = sys.d as f64;
    let tol = EQUALITY_TOL * (hull[1] - hull[0]).max(1.0);
    let mut entries = Vec::new();
    for fp in fixed_points(&sys.poly)? {
        let x = fp.location.re;
        let position = if (x - hull[0]).abs() <= tol || (x - hull[1]).abs() <= tol {
            HullPosition::Endpoint
        } else if x > hull[0] && x < hull[1] {
            HullPosition::Interior
        } else {
            HullPosition::Outside
        };
        let bound = match position {
            HullPosition::Endpoint => d * d,
            _ => d,
        };
        let m = fp.multiplier.norm();
        let flag = if (m - bound).abs() < EQUALITY_TOL {
            AuditFlag::Equality
        } else if m > bound {
            AuditFlag::Pass
        } else {
            AuditFlag::Violation
        };
        entries.push(MultiplierEntry {
            location: x,
            position,
            multiplier_abs: m,
            bound,
            flag,
        });
    }
    let exceptional = classify_exceptional(sys);
    let any_equality = entries.iter().any(|e| e.flag == AuditFlag::Equality);
    Ok(MultiplierAudit {
        hull,
        chebyshev_consistent: !any_equality || exceptional == Exceptional::ChebyshevConjugate,
        any_violation: entries.iter().any(|e| e.flag == AuditFlag::Violation),
        entries,
        exceptional,
        attracting: attracting_count_bound(&sys.poly)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngularSector {
    pub alpha: f64,
    pub beta: f64,
}

impl AngularSector {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let width = beta - alpha;
        if !(width > 0.0 && width <= 2.0 * PI) {
            return Err(CoreError::InvalidInput(format!(
                "sector width {width} outside (0, 2π]"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        if z.norm() == 0.0 {
            return false;
        }
        let mut a = z.arg();
        while a <= self.alpha {
            a += 2.0 * PI;
        }
        while a > self.alpha + 2.0 * PI {
            a -= 2.0 * PI;
        }
        a < self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sys(c: &[i64]) -> NormalizedSystem {
        let p = RealPolynomial::from_integers(c).unwrap();
        normalize(&p, Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn normalizes_example_at_one() {
        let p = RealPolynomial::from_integers(&[0, -3, 4]).unwrap();
        let s = normalize(&p, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(s.poly.coeffs(), &[q(0, 1), q(5, 1), q(1, 1)]);
        assert_eq!(s.conjugation.scale, q(4, 1));
        assert!(s.is_exact());
        assert_eq!(s.denormalize().unwrap(), p);
    }

    #[test]
    fn scaled_quadratic() {
        let p = RealPolynomial::from_integers(&[0, 4, 4]).unwrap();
        let s = normalize(&p, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(s.poly.coeffs(), &[q(0, 1), q(4, 1), q(1, 1)]);
    }

    #[test]
    fn rejects_bad_points() {
        let p = RealPolynomial::from_integers(&[0, 5, 1]).unwrap();
        assert!(matches!(
            normalize(&p, Complex64::new(1.0, 0.0)),
            Err(CoreError::Normalization { .. })
        ));
        let p = RealPolynomial::from_integers(&[0, 2, 1]).unwrap();
        let err = normalize(&p, Complex64::new(-1.0, 0.0)).unwrap_err();
        match err {
            CoreError::Normalization { multiplier, .. } => assert_eq!(multiplier.re, 0.0),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn fixed_point_classes() {
        let p = RealPolynomial::from_integers(&[0, 2, 1]).unwrap();
        let fps = fixed_points(&p).unwrap();
        assert_eq!(fps.len(), 2);
        let sup = fps.iter().find(|f| f.location.re < -0.5).unwrap();
        assert_eq!(sup.class, FixedPointClass::Superattracting);
        assert_eq!(sup.superattract_order, Some(2));
        let rep = fps.iter().find(|f| f.location.re > -0.5).unwrap();
        assert_eq!(rep.multiplier.re, 2.0);
    }

    #[test]
    fn quadratic_geometries() {
        assert_eq!(
            real_julia_interval(&sys(&[0, 4, 1])).unwrap().kind,
            JuliaKind::Interval
        );
        let g = real_julia_interval(&sys(&[0, 5, 1])).unwrap();
        assert_eq!(g.kind, JuliaKind::RealCantor);
        assert_eq!(g.hull, Some([-5.0, 0.0]));
        assert_eq!(
            real_julia_interval(&sys(&[0, 2, 1])).unwrap().kind,
            JuliaKind::Circle
        );
        assert_eq!(
            real_julia_interval(&sys(&[0, 3, 1])).unwrap().kind,
            JuliaKind::NonReal
        );
    }

    #[test]
    fn cubic_geometries() {
        // Chebyshev T_3 conjugate fixing 0 with x0 = 1: β = -2.
        let g = real_julia_interval(&sys(&[0, 9, 6, 1])).unwrap();
        assert_eq!(g.kind, JuliaKind::Interval);
        let [a, b] = g.hull.unwrap();
        assert!((a + 4.0).abs() < 1e-9 && b.abs() < 1e-9);
        assert_eq!(
            real_julia_interval(&sys(&[0, 3, 3, 1])).unwrap().kind,
            JuliaKind::Circle
        );
        // Strongly expanding cubic with three real fixed points: real Cantor set.
        let g = real_julia_interval(&sys(&[0, 10, 0, 1])).unwrap();
        assert_eq!(g.kind, JuliaKind::NonReal);
        let g = real_julia_interval(&sys(&[0, 20, 9, 1])).unwrap();
        assert_eq!(g.kind, JuliaKind::RealCantor);
    }

    #[test]
    fn exceptional_classes() {
        assert_eq!(
            classify_exceptional(&sys(&[0, 2, 1])),
            Exceptional::MonomialConjugate
        );
        assert_eq!(
            classify_exceptional(&sys(&[0, 4, 1])),
            Exceptional::ChebyshevConjugate
        );
        assert_eq!(classify_exceptional(&sys(&[0, 5, 1])), Exceptional::Generic);
        assert_eq!(
            classify_exceptional(&sys(&[0, 3, 3, 1])),
            Exceptional::MonomialConjugate
        );
        assert_eq!(
            classify_exceptional(&sys(&[0, 9, 6, 1])),
            Exceptional::ChebyshevConjugate
        );
    }

    #[test]
    fn chebyshev_coefficients() {
        let t4: Vec<i64> = chebyshev_t(4).iter().map(|c| c.try_into().unwrap()).collect();
        assert_eq!(t4, vec![1, 0, -8, 0, 8]);
    }

    #[test]
    fn closed_forms_satisfy_functional_equation() {
        for c in [&[0, 4, 1][..], &[0, 2, 1], &[0, 3, 3, 1], &[0, 9, 6, 1]] {
            let s = sys(c);
            let f = closed_form_oracle(&s).unwrap();
            for z in [Complex64::new(0.3, 0.1), Complex64::new(-1.2, 0.4)] {
                let lhs = f.eval(z * s.lambda);
                let rhs = s.p(f.eval(z));
                assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{c:?}");
            }
            let h = 1e-6;
            let deriv = (f.eval(Complex64::new(h, 0.0)) - f.eval(Complex64::new(-h, 0.0))) / (2.0 * h);
            assert!((deriv - 1.0).norm() < 1e-8);
        }
        assert!(closed_form_oracle(&sys(&[0, 5, 1])).is_none());
    }

    #[test]
    fn interior_cosine_family() {
        // T_4 fixes x0 = -1/2 (θ0 = 2π/3, multiplier 4); with β = 1 it sits at 0.
        let beta = q(1, 1);
        let model = chebyshev_model(4, &beta);
        let p = RealPolynomial::new(model).unwrap();
        let s = normalize_exact(&p, &q(0, 1)).unwrap();
        assert!((s.lambda - 4.0).abs() < 1e-12);
        match closed_form_oracle(&s).unwrap() {
            ClosedForm::Cosine { theta0, .. } => assert!((theta0 - 2.0 * PI / 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn audits() {
        let a = audit_multipliers(&sys(&[0, 4, 1])).unwrap();
        assert!(a.entries.iter().all(|e| e.flag == AuditFlag::Equality));
        assert!(a.chebyshev_consistent);
        let a = audit_multipliers(&sys(&[0, 5, 1])).unwrap();
        assert!(a.entries.iter().all(|e| e.flag == AuditFlag::Pass));
        assert!(matches!(
            audit_multipliers(&sys(&[0, 2, 1])),
            Err(CoreError::NotApplicable(_))
        ));
    }

    #[test]
    fn sector_membership() {
        let s = AngularSector::new(-0.5, 0.5).unwrap();
        assert!(s.contains(Complex64::new(1.0, 0.1)));
        assert!(!s.contains(Complex64::new(-1.0, 0.0)));
        assert!(AngularSector::new(1.0, 0.0).is_err());
    }

    #[test]
    fn pretty_print() {
        let p = RealPolynomial::from_integers(&[0, -3, 4]).unwrap();
        assert_eq!(p.pretty(), "4z^2 - 3z");
    }
}
