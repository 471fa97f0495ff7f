use rayon::prelude::*;

use super::interp::MonotoneCubic;
use super::{FieldError, ScalarField};

/// Constitutive form of `p(ϱ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PressureKind {
    /// `p(ϱ) = coef · ϱ^γ`, `γ ≥ 1`.
    GammaLaw { coef: f64, gamma: f64 },
    /// Monotone piecewise-cubic (Fritsch–Carlson) interpolant of samples.
    Table(PressureTable),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureTable {
    curve: MonotoneCubic,
    /// `∫_{rho[0]}^{rho[k]} p(s)/s² ds`
    cumulative: Vec<f64>,
}

impl PressureTable {
    fn new(rho: Vec<f64>, p: Vec<f64>) -> Result<Self, FieldError> {
        if rho.len() < 2 || rho.len() != p.len() {
            return Err(FieldError::InvalidPressure(
                "table needs at least two (rho, p) samples of equal length".into(),
            ));
        }
        if rho[0] <= 0.0 || rho.iter().any(|r| !r.is_finite()) || p.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::InvalidPressure(
                "table densities must be positive and all samples finite".into(),
            ));
        }
        if rho.windows(2).any(|w| w[1] <= w[0]) || p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::InvalidPressure(
                "table must be strictly increasing in both rho and p".into(),
            ));
        }
        let k = rho.len();
        let curve = MonotoneCubic::new(rho, p).expect("validated samples");
        let mut table = Self {
            curve,
            cumulative: vec![0.0; k],
        };
        for i in 1..k {
            let (lo, hi) = (table.densities()[i - 1], table.densities()[i]);
            let piece = integrate(&|s| table.eval(s).0 / (s * s), lo, hi, 1e-15);
            table.cumulative[i] = table.cumulative[i - 1] + piece;
        }
        Ok(table)
    }

    /// `(p, p')` at `rho` (cubic Hermite on the bracketing piece).
    fn eval(&self, rho: f64) -> (f64, f64) {
        self.curve.eval(rho)
    }

    fn primitive(&self, rho: f64) -> f64 {
        let i = self.curve.piece(rho);
        let lo = self.densities()[i];
        self.cumulative[i] + integrate(&|s| self.eval(s).0 / (s * s), lo, rho, 1e-15)
    }

    pub fn densities(&self) -> &[f64] {
        self.curve.knots()
    }

    pub fn pressures(&self) -> &[f64] {
        self.curve.values()
    }
}

/// Barotropic pressure `p(ϱ)` valid on `(a, b)` with potential
/// `P(ϱ) = ϱ ∫_{ϱ_ref}^{ϱ} p(s)/s² ds`, so that `P′ϱ − P = p` and
/// `P(ϱ_ref) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureLaw {
    kind: PressureKind,
    a: f64,
    b: f64,
    rho_ref: f64,
}

impl PressureLaw {
    pub fn gamma_law(coef: f64, gamma: f64) -> Result<Self, FieldError> {
        if !(coef > 0.0 && coef.is_finite()) || !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(FieldError::InvalidPressure(format!(
                "gamma law needs coef > 0 and gamma >= 1 (got coef={coef}, gamma={gamma})"
            )));
        }
        Ok(Self {
            kind: PressureKind::GammaLaw { coef, gamma },
            a: 0.0,
            b: f64::INFINITY,
            rho_ref: 1.0,
        })
    }

    pub fn table(rho: Vec<f64>, p: Vec<f64>) -> Result<Self, FieldError> {
        let table = PressureTable::new(rho, p)?;
        let a = table.densities()[0];
        let b = *table.densities().last().unwrap();
        let rho_ref = if a < 1.0 && 1.0 < b { 1.0 } else { 0.5 * (a + b) };
        let law = Self {
            kind: PressureKind::Table(table),
            a,
            b,
            rho_ref,
        };
        law.check_hyperbolic(64)?;
        Ok(law)
    }

    /// Narrows the validity interval to `(a, b)`.
    pub fn with_interval(mut self, a: f64, b: f64) -> Result<Self, FieldError> {
        if !(a >= 0.0 && a < b) {
            return Err(FieldError::InvalidPressure(format!(
                "need 0 <= a < b, got ({a}, {b})"
            )));
        }
        if let PressureKind::Table(t) = &self.kind {
            if a < t.densities()[0] || b > *t.densities().last().unwrap() {
                return Err(FieldError::InvalidPressure(
                    "interval extends beyond the tabulated densities".into(),
                ));
            }
        }
        self.a = a;
        self.b = b;
        if !self.contains(self.rho_ref) {
            self.rho_ref = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
        }
        Ok(self)
    }

    pub fn with_rho_ref(mut self, rho_ref: f64) -> Result<Self, FieldError> {
        if !self.contains(rho_ref) {
            return Err(FieldError::DensityOutOfRange {
                rho: rho_ref,
                a: self.a,
                b: self.b,
            });
        }
        self.rho_ref = rho_ref;
        Ok(self)
    }

    pub fn kind(&self) -> &PressureKind {
        &self.kind
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn rho_ref(&self) -> f64 {
        self.rho_ref
    }

    #[inline]
    pub fn contains(&self, rho: f64) -> bool {
        rho > self.a && rho < self.b
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        match &self.kind {
            PressureKind::GammaLaw { coef, gamma } => coef * rho.powf(*gamma),
            PressureKind::Table(t) => t.eval(rho).0,
        }
    }

    /// `p′(ϱ)`.
    #[inline]
    pub fn dp(&self, rho: f64) -> f64 {
        match &self.kind {
            PressureKind::GammaLaw { coef, gamma } => coef * gamma * rho.powf(gamma - 1.0),
            PressureKind::Table(t) => t.eval(rho).1,
        }
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }

    fn check_domain(&self, rho: f64) -> Result<(), FieldError> {
        if self.contains(rho) {
            Ok(())
        } else {
            Err(FieldError::DensityOutOfRange {
                rho,
                a: self.a,
                b: self.b,
            })
        }
    }

    /// Pressure potential with gauge `P(ϱ_ref) = 0`; closed form for gamma
    /// laws, quadrature for tables.
    pub fn potential(&self, rho: f64) -> Result<f64, FieldError> {
        self.check_domain(rho)?;
        Ok(match &self.kind {
            PressureKind::GammaLaw { coef, gamma } => {
                if *gamma == 1.0 {
                    coef * rho * (rho / self.rho_ref).ln()
                } else {
                    coef * (rho.powf(*gamma) - rho * self.rho_ref.powf(gamma - 1.0)) / (gamma - 1.0)
                }
            }
            PressureKind::Table(t) => rho * (t.primitive(rho) - t.primitive(self.rho_ref)),
        })
    }

    /// `ϱ ∫_{ϱ_ref}^{ϱ} p(s)/s² ds` by adaptive Gauss–Kronrod quadrature,
    /// independent of any closed form.
    pub fn potential_by_quadrature(&self, rho: f64) -> Result<f64, FieldError> {
        self.check_domain(rho)?;
        let f = |s: f64| self.pressure(s) / (s * s);
        Ok(rho * integrate(&f, self.rho_ref, rho, 1e-15))
    }

    pub fn pressure_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.pressure(r))
    }

    pub fn potential_field(&self, rho: &ScalarField) -> Result<ScalarField, FieldError> {
        let values: Result<Vec<f64>, FieldError> = rho
            .values()
            .par_iter()
            .with_min_len(1024)
            .map(|&r| self.potential(r))
            .collect();
        ScalarField::new(rho.grid(), values?)
    }

    /// Checks `p′ > 0` on `samples` interior points of `(a, b)` (or of
    /// `(a, a + 10)` when unbounded).
    pub fn check_hyperbolic(&self, samples: usize) -> Result<(), FieldError> {
        let hi = if self.b.is_finite() { self.b } else { self.a + 10.0 };
        for i in 1..=samples {
            let rho = self.a + (hi - self.a) * i as f64 / (samples + 1) as f64;
            let dp = self.dp(rho);
            if !(dp > 0.0) {
                return Err(FieldError::InvalidPressure(format!(
                    "p'({rho}) = {dp} is not positive"
                )));
            }
        }
        Ok(())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod rule on `[a, b]`: `(K15, |K15 − G7|, K15 of |f|)`.
fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (lo, hi) = (f(c - x), f(c + x));
        k += WGK[j] * (lo + hi);
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (lo + hi);
        }
    }
    (k * h, ((k - g) * h).abs(), (abs * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature; oriented (`b < a` flips the sign).
/// Stops when the local error estimate drops below `tol` or reaches
/// roundoff relative to `∫|f|`.
pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: (f64, f64, f64),
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (val, err, abs) = whole;
        if err <= tol.max(1e-15 * abs) || depth == 0 {
            return val;
        }
        let m = 0.5 * (a + b);
        let left = kronrod15(f, a, m);
        let right = kronrod15(f, m, b);
        rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, kronrod15(f, a, b), tol, 30)
}
