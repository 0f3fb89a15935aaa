//! Compact-Fourier-support filter functions g, f, F and the Gaussian window.
//!
//! Conventions, fixed project-wide: f̃(ω) = ∫ f(t) e^{iωt} dt, inverse with
//! 1/2π. The bump is g̃(ω) = exp(1 − 1/(1−ω²)) on |ω| < 1 (zero outside),
//! so g̃(0) = 1 and g(t) is even and real. With f = δ − g,
//!
//!   F(t) = (i/2) ∫ f(u) sign(t−u) du = i·sign(t)·∫_{|t|}^∞ g(u) du   (t ≠ 0),
//!
//! which is odd, purely imaginary, and satisfies F̃(ω) = −f̃(ω)/ω, hence
//! F̃(ω) = −1/ω exactly for |ω| ≥ 1 and F̃(0) = 0.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FilterKind {
    /// The compactly-supported bump g (even, real).
    G,
    /// The odd filter F built from g.
    F,
    /// The error-function frequency window of the correlation protocol.
    GaussianWindow,
}

#[derive(Debug, Clone)]
enum Form {
    Bump,
    OddF,
    Window { q: f64, delta_e: f64 },
}

/// Sampled filter with closed-form frequency evaluators.
///
/// Time samples are stored on a one-sided grid t ≥ 0 (two uniform Simpson
/// regions, finer near t = 0); negative times follow from the parity of the
/// kind (g even, F odd).
#[derive(Debug, Clone)]
pub struct FilterFunction {
    pub kind: FilterKind,
    /// Ascending sample times, starting at 0.
    pub times: Vec<f64>,
    /// Samples at `times`.
    pub values: Vec<Complex64>,
    /// Composite Simpson weights: Σ wᵢ·h(tᵢ) ≈ ∫₀^tmax h.
    pub weights: Vec<f64>,
    pub quadrature_error_budget: f64,
    form: Form,
}

/// Fine-region step, extent, and coarse-region step/extent of the time grid.
const FINE_STEP: f64 = 0.0025;
const FINE_END: f64 = 40.0;
const COARSE_STEP: f64 = 0.025;
const GRID_END: f64 = 400.0;
/// Gauss-Legendre node count for the ω-quadratures.
const GL_NODES: usize = 512;

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The Gevrey bump in frequency: exp(1 − 1/(1−ω²)) inside |ω| < 1, else 0.
pub fn bump_g_tilde(w: f64) -> f64 {
    if w.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - w * w)).exp()
    } else {
        0.0
    }
}

struct OmegaQuadrature {
    /// GL nodes mapped to (0,1) with weights, g̃ pre-evaluated.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    gt: Vec<f64>,
}

impl OmegaQuadrature {
    fn new() -> Self {
        let (xs, ws) = gauss_legendre(GL_NODES);
        let nodes: Vec<f64> = xs.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights: Vec<f64> = ws.iter().map(|w| 0.5 * w).collect();
        let gt: Vec<f64> = nodes.iter().map(|&w| bump_g_tilde(w)).collect();
        OmegaQuadrature { nodes, weights, gt }
    }

    /// g(t) = (1/π) ∫₀¹ g̃(ω) cos(ωt) dω.
    fn g_at(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            acc += self.weights[i] * self.gt[i] * (self.nodes[i] * t).cos();
        }
        acc / std::f64::consts::PI
    }

    /// φ(x) = ∫ₓ^∞ g(u) du = ½ [1 − (2/π) ∫₀¹ g̃(ω) sin(ωx)/ω dω], x ≥ 0.
    fn phi_at(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            acc += self.weights[i] * self.gt[i] * (self.nodes[i] * x).sin() / self.nodes[i];
        }
        0.5 * (1.0 - 2.0 * acc / std::f64::consts::PI)
    }
}

/// One-sided two-region grid with composite Simpson weights.
fn build_grid() -> (Vec<f64>, Vec<f64>) {
    let n_fine = (FINE_END / FINE_STEP).round() as usize; // intervals
    let n_coarse = ((GRID_END - FINE_END) / COARSE_STEP).round() as usize;
    let mut times = Vec::with_capacity(n_fine + n_coarse + 1);
    for i in 0..=n_fine {
        times.push(i as f64 * FINE_STEP);
    }
    for i in 1..=n_coarse {
        times.push(FINE_END + i as f64 * COARSE_STEP);
    }
    let mut weights = vec![0.0; times.len()];
    add_simpson(&mut weights, 0, n_fine, FINE_STEP);
    add_simpson(&mut weights, n_fine, n_coarse, COARSE_STEP);
    (times, weights)
}

fn add_simpson(weights: &mut [f64], start: usize, intervals: usize, h: f64) {
    assert!(intervals % 2 == 0, "Simpson needs an even interval count");
    for k in 0..=intervals {
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights[start + k] += w * h / 3.0;
    }
}

/// Build the compact-Fourier-support bump g on the standard time grid.
pub fn build_bump_g() -> FilterFunction {
    let quad = OmegaQuadrature::new();
    let (times, weights) = build_grid();
    let values: Vec<Complex64> = times.iter().map(|&t| c(quad.g_at(t), 0.0)).collect();
    FilterFunction {
        kind: FilterKind::G,
        times,
        values,
        weights,
        quadrature_error_budget: 1e-8,
        form: Form::Bump,
    }
}

/// Build F(t) = (i/2)∫f(u)·sign(t−u)du from an (even) bump g.
pub fn build_f(g: &FilterFunction) -> Result<FilterFunction> {
    if g.kind != FilterKind::G {
        return Err(Error::Domain(
            "build_f requires the even bump filter g as input".into(),
        ));
    }
    let quad = OmegaQuadrature::new();
    let (times, weights) = build_grid();
    let values: Vec<Complex64> = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                c(0.0, 0.0) // sign(0) = 0 makes F(0) = 0 exactly.
            } else {
                c(0.0, quad.phi_at(t))
            }
        })
        .collect();
    Ok(FilterFunction {
        kind: FilterKind::F,
        times,
        values,
        weights,
        quadrature_error_budget: g.quadrature_error_budget,
        form: Form::OddF,
    })
}

/// The smoothed step window W(ω): the ε→0⁺ Fourier transform of
/// exp[−(tΔE)²/2q]/(it+ε), i.e. a unit step convolved with a Gaussian of
/// frequency width ΔE/√q.
pub fn gaussian_window(q: f64, delta_e: f64) -> Result<FilterFunction> {
    if q <= 0.0 || delta_e <= 0.0 {
        return Err(Error::Domain("gaussian_window needs q > 0, ΔE > 0".into()));
    }
    // Time samples of the Gaussian factor (the 1/(it+ε) kernel is exposed
    // separately through `window_kernel`).
    let (times, weights) = build_grid();
    let values: Vec<Complex64> = times
        .iter()
        .map(|&t| c((-(t * delta_e).powi(2) / (2.0 * q)).exp(), 0.0))
        .collect();
    Ok(FilterFunction {
        kind: FilterKind::GaussianWindow,
        times,
        values,
        weights,
        quadrature_error_budget: 1e-8,
        form: Form::Window { q, delta_e },
    })
}

impl FilterFunction {
    /// Closed-form frequency evaluator: g̃(ω), F̃(ω), or W(ω).
    pub fn fourier(&self, w: f64) -> f64 {
        match &self.form {
            Form::Bump => bump_g_tilde(w),
            Form::OddF => {
                if w == 0.0 {
                    0.0
                } else {
                    -(1.0 - bump_g_tilde(w)) / w
                }
            }
            Form::Window { q, delta_e } => {
                let sigma = delta_e / q.sqrt();
                0.5 * (1.0 + erf(w / (std::f64::consts::SQRT_2 * sigma)))
            }
        }
    }

    /// Fresh time-domain evaluation at arbitrary t (quadrature, not lookup).
    pub fn time_value(&self, t: f64) -> Result<Complex64> {
        match &self.form {
            Form::Bump => {
                let quad = OmegaQuadrature::new();
                Ok(c(quad.g_at(t.abs()), 0.0))
            }
            Form::OddF => {
                if t == 0.0 {
                    return Ok(c(0.0, 0.0));
                }
                let quad = OmegaQuadrature::new();
                Ok(c(0.0, t.signum() * quad.phi_at(t.abs())))
            }
            Form::Window { .. } => Err(Error::Unsupported(
                "the window's time kernel is singular; use window_kernel(t, eps)".into(),
            )),
        }
    }

    /// Regularized time kernel exp[−(tΔE)²/2q]/(it+ε) of the window.
    pub fn window_kernel(&self, t: f64, eps: f64) -> Result<Complex64> {
        match &self.form {
            Form::Window { q, delta_e } => {
                let gauss = (-(t * delta_e).powi(2) / (2.0 * q)).exp();
                Ok(c(gauss, 0.0) / c(eps, t))
            }
            _ => Err(Error::Unsupported("not a gaussian window".into())),
        }
    }

    /// Numeric Fourier transform from the stored time samples. For g this is
    /// 2∫₀^∞ g cos(ωt) dt; for F it is −2∫₀^∞ Im F(t) sin(ωt) dt (both using
    /// the grid's Simpson weights), independent of the closed forms.
    pub fn fourier_from_samples(&self, w: f64) -> Result<f64> {
        match &self.form {
            Form::Bump => {
                let mut acc = 0.0;
                for i in 0..self.times.len() {
                    acc += self.weights[i] * self.values[i].re * (w * self.times[i]).cos();
                }
                Ok(2.0 * acc)
            }
            Form::OddF => {
                // F̃(ω) = ∫ F e^{iωt} dt = −2∫₀^∞ Im F(t) · sin(ωt) dt.
                let mut acc = 0.0;
                for i in 0..self.times.len() {
                    acc += self.weights[i] * self.values[i].im * (w * self.times[i]).sin();
                }
                Ok(-2.0 * acc)
            }
            Form::Window { .. } => Err(Error::Unsupported(
                "window transform is given in closed form only".into(),
            )),
        }
    }

    /// ∫_{-∞}^{∞} of the stored (even) time samples; g integrates to g̃(0)=1.
    pub fn time_integral_even(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.times.len() {
            acc += self.weights[i] * self.values[i].re;
        }
        2.0 * acc
    }

    /// ∫_{|t|}^∞ f(u) du for the Lemma tail bound, via the samples of g.
    pub fn tail_integral_bound(&self, t: f64) -> Result<f64> {
        match &self.form {
            Form::OddF | Form::Bump => {
                let quad = OmegaQuadrature::new();
                Ok(quad.phi_at(t.abs()))
            }
            _ => Err(Error::Unsupported("tail bound needs g or F".into())),
        }
    }

    /// CSV of the symmetric time samples: `t,re,im`.
    pub fn export_time_csv(&self) -> String {
        let mut out = String::from("t,re,im\n");
        let sign = match self.kind {
            FilterKind::F => -1.0,
            _ => 1.0,
        };
        for i in (1..self.times.len()).rev() {
            let v = self.values[i];
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                -self.times[i],
                sign * v.re,
                sign * v.im
            ));
        }
        for i in 0..self.times.len() {
            let v = self.values[i];
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.times[i], v.re, v.im
            ));
        }
        out
    }

    /// CSV of the closed-form transform on the given frequencies: `omega,ft`.
    pub fn export_fourier_csv(&self, omegas: &[f64]) -> String {
        let mut out = String::from("omega,ft\n");
        for &w in omegas {
            out.push_str(&format!("{:.17e},{:.17e}\n", w, self.fourier(w)));
        }
        out
    }
}

/// Error function via erfc from libm.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}
