//! Generalized Fresnel integrals
//!
//! ```text
//! C(a, b, c) = ∫₀¹ cos(a σ²/2 + b σ + c) dσ
//! S(a, b, c) = ∫₀¹ sin(a σ²/2 + b σ + c) dσ
//! ```
//!
//! A clothoid segment of length `s` starting at heading `ψ̂` with curvature `κ̂`
//! and sharpness `κ′` ends at `s·(C, S)(κ′s², κ̂s, ψ̂)` relative to its start.

use num_complex::Complex64;

use crate::error::GeometryError;

/// Absolute tolerance used by [`fresnel_cs`].
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Below this `|a|` the quadratic phase is treated as a first-order correction.
const SMALL_A: f64 = 1e-6;

const MAX_PANELS: usize = 4096;

// Gauss–Kronrod 7/15 nodes on [-1, 1] (positive half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `C(a, b, c)`.
pub fn fresnel_c(a: f64, b: f64, c: f64) -> Result<f64, GeometryError> {
    fresnel_cs(a, b, c).map(|(cv, _)| cv)
}

/// `S(a, b, c)`.
pub fn fresnel_s(a: f64, b: f64, c: f64) -> Result<f64, GeometryError> {
    fresnel_cs(a, b, c).map(|(_, sv)| sv)
}

/// Both integrals at once, to [`DEFAULT_TOLERANCE`].
pub fn fresnel_cs(a: f64, b: f64, c: f64) -> Result<(f64, f64), GeometryError> {
    fresnel_cs_tol(a, b, c, DEFAULT_TOLERANCE)
}

/// Both integrals with a caller-chosen absolute tolerance.
pub fn fresnel_cs_tol(a: f64, b: f64, c: f64, tol: f64) -> Result<(f64, f64), GeometryError> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!(
            "Fresnel arguments must be finite, got ({a}, {b}, {c})"
        )));
    }
    if !(tol > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(eval(a, b, c, tol))
}

/// Unchecked evaluation for callers that already hold finite arguments.
pub(crate) fn eval(a: f64, b: f64, c: f64, tol: f64) -> (f64, f64) {
    let (cv, sv) = if a.abs() < SMALL_A { small_a(a, b, c) } else { adaptive(a, b, c, tol) };
    (cv.clamp(-1.0, 1.0), sv.clamp(-1.0, 1.0))
}

/// `∫₀¹ σ^k e^{ibσ} dσ` for k = 0, 1, 2.
fn moments(b: f64) -> [Complex64; 3] {
    let mut m = [Complex64::new(0.0, 0.0); 3];
    if b.abs() < 1.0 {
        // Σ (ib)^n / (n! (n + k + 1))
        let ib = Complex64::new(0.0, b);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..40 {
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += term / (n + k + 1) as f64;
            }
            term = term * ib / (n + 1) as f64;
            if term.norm() < 1e-18 {
                break;
            }
        }
    } else {
        let ib = Complex64::new(0.0, b);
        let e = Complex64::new(b.cos(), b.sin());
        m[0] = (e - 1.0) / ib;
        m[1] = (e - m[0]) / ib;
        m[2] = (e - 2.0 * m[1]) / ib;
    }
    m
}

/// `e^{ic}(M0 + i a/2 M2)`, exact to first order in `a`.
fn small_a(a: f64, b: f64, c: f64) -> (f64, f64) {
    let m = moments(b);
    let z = Complex64::new(c.cos(), c.sin()) * (m[0] + Complex64::new(0.0, 0.5 * a) * m[2]);
    (z.re, z.im)
}

/// G7/K15 on `[lo, hi]`, returning `((C, S), error estimate)`.
fn gk15(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> ((f64, f64), f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let f = |s: f64| {
        let phase = (0.5 * a * s + b) * s + c;
        let (sn, cs) = phase.sin_cos();
        (cs, sn)
    };
    let (fc, fs) = f(mid);
    let (mut kc, mut ks) = (WGK[7] * fc, WGK[7] * fs);
    let (mut gc, mut gs) = (WG[3] * fc, WG[3] * fs);
    for j in 0..7 {
        let dx = half * XGK[j];
        let (c1, s1) = f(mid - dx);
        let (c2, s2) = f(mid + dx);
        kc += WGK[j] * (c1 + c2);
        ks += WGK[j] * (s1 + s2);
        if j % 2 == 1 {
            gc += WG[j / 2] * (c1 + c2);
            gs += WG[j / 2] * (s1 + s2);
        }
    }
    // QUADPACK-style scaling of the Kronrod–Gauss difference; the integrand
    // is bounded by one, so the panel width stands in for the residual scale.
    let diff = ((kc - gc).abs()).max((ks - gs).abs()) * half;
    let width = 2.0 * half;
    let err = width * (200.0 * diff / width).powf(1.5).min(1.0);
    ((kc * half, ks * half), err)
}

fn adaptive(a: f64, b: f64, c: f64, tol: f64) -> (f64, f64) {
    let mut stack = vec![(0.0_f64, 1.0_f64)];
    let (mut sc, mut ss) = (0.0, 0.0);
    let mut panels = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let ((ic, is), err) = gk15(a, b, c, lo, hi);
        panels += 1;
        if err <= tol * (hi - lo) || panels + stack.len() >= MAX_PANELS || hi - lo < 1e-9 {
            sc += ic;
            ss += is;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    (sc, ss)
}
