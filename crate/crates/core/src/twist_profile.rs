//! Twist-rate profiles `ε(x₃)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::composite_converged;

/// Profile family and parameters, as read from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `A exp(−(x/w)²)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `A exp(1 − 1/(1 − (x/R)²))` for `|x| < R`, zero beyond.
    Bump { amplitude: f64, width: f64 },
    /// `A exp(−(x/w)²)(cos ωx − β)`.
    ModulatedGaussian { amplitude: f64, width: f64, frequency: f64, offset: f64 },
    /// `A / (1 + (x/w)²)`; only algebraic decay.
    Lorentzian { amplitude: f64, width: f64 },
    /// Piecewise cubic Hermite data, zero outside the table.
    Tabulated {
        x: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        derivatives: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Hermite {
    fn locate(&self, t: f64) -> Option<usize> {
        let n = self.x.len();
        if t <= self.x[0] || t >= self.x[n - 1] {
            return None;
        }
        Some(self.x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 2))
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let Some(i) = self.locate(t) else { return (0.0, 0.0) };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * s * s - 2.0 * s;
        let dv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (v, dv)
    }
}

/// A validated twist-rate profile.
#[derive(Clone, Debug)]
pub struct TwistProfile {
    spec: ProfileSpec,
    table: Option<Hermite>,
}

/// Outcome of a sampled decay check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub alpha: f64,
    /// `sup max(|ε|, |ε′|) e^{α⟨x⟩}` over the sampled range.
    pub constant: f64,
    pub range: f64,
    /// Largest admissible working-disc radius, `α/2`.
    pub usable_radius: f64,
}

fn check_scalar(name: &str, v: f64, positive: bool) -> Result<()> {
    if !v.is_finite() || (positive && v <= 0.0) || (!positive && v == 0.0) {
        let need = if positive { "positive and finite" } else { "non-zero and finite" };
        return Err(Error::Profile(format!("{name} must be {need} (got {v})")));
    }
    Ok(())
}

pub fn make_profile(spec: ProfileSpec) -> Result<TwistProfile> {
    TwistProfile::new(spec)
}

impl TwistProfile {
    pub fn new(spec: ProfileSpec) -> Result<Self> {
        let table = match &spec {
            ProfileSpec::Gaussian { amplitude, width }
            | ProfileSpec::Bump { amplitude, width }
            | ProfileSpec::Lorentzian { amplitude, width } => {
                check_scalar("amplitude", *amplitude, false)?;
                check_scalar("width", *width, true)?;
                None
            }
            ProfileSpec::ModulatedGaussian { amplitude, width, frequency, offset } => {
                check_scalar("amplitude", *amplitude, false)?;
                check_scalar("width", *width, true)?;
                if !frequency.is_finite() || !offset.is_finite() {
                    return Err(Error::Profile("frequency and offset must be finite".into()));
                }
                None
            }
            ProfileSpec::Tabulated { x, values, derivatives } => {
                Some(build_table(x, values, derivatives.as_deref())?)
            }
        };
        let p = Self { spec, table };
        if p.norm_sq() <= 0.0 {
            return Err(Error::Profile("profile vanishes identically".into()));
        }
        Ok(p)
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(ProfileSpec::Gaussian { amplitude, width })
    }

    pub fn bump(amplitude: f64, radius: f64) -> Result<Self> {
        Self::new(ProfileSpec::Bump { amplitude, width: radius })
    }

    /// Modulated Gaussian whose transform vanishes at frequency `zero_at`.
    pub fn modulated_gaussian_with_zero(
        amplitude: f64,
        width: f64,
        frequency: f64,
        zero_at: f64,
    ) -> Result<Self> {
        let g = |xi: f64| (-(xi * width).powi(2) / 4.0).exp();
        let offset = 0.5 * (g(zero_at - frequency) + g(zero_at + frequency)) / g(zero_at);
        Self::new(ProfileSpec::ModulatedGaussian { amplitude, width, frequency, offset })
    }

    /// `ε ≡ 0`. Not a valid twist; used to exercise degenerate paths.
    pub fn zero() -> Self {
        Self { spec: ProfileSpec::Gaussian { amplitude: 0.0, width: 1.0 }, table: None }
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.spec, ProfileSpec::Gaussian { amplitude, .. } if amplitude == 0.0)
    }

    /// Characteristic length used for sampling ranges.
    pub fn width(&self) -> f64 {
        match &self.spec {
            ProfileSpec::Gaussian { width, .. }
            | ProfileSpec::Bump { width, .. }
            | ProfileSpec::ModulatedGaussian { width, .. }
            | ProfileSpec::Lorentzian { width, .. } => *width,
            ProfileSpec::Tabulated { x, .. } => 0.5 * (x[x.len() - 1] - x[0]),
        }
    }

    /// Exponential decay rate known from the family: infinite for Gaussian and
    /// compactly supported profiles, zero for the Lorentzian.
    pub fn decay_rate(&self) -> f64 {
        match self.spec {
            ProfileSpec::Lorentzian { .. } => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Interval outside which `ε` vanishes exactly, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match &self.spec {
            ProfileSpec::Bump { width, .. } => Some((-width, *width)),
            ProfileSpec::Tabulated { x, .. } => Some((x[0], x[x.len() - 1])),
            _ => None,
        }
    }

    /// `(ε(x), ε′(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match &self.spec {
            ProfileSpec::Gaussian { amplitude, width } => {
                let u = x / width;
                let g = amplitude * (-u * u).exp();
                (g, -2.0 * u / width * g)
            }
            ProfileSpec::Bump { amplitude, width } => {
                let u = x / width;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let s = 1.0 - u * u;
                let g = amplitude * (1.0 - 1.0 / s).exp();
                (g, g * (-2.0 * u / (s * s)) / width)
            }
            ProfileSpec::ModulatedGaussian { amplitude, width, frequency, offset } => {
                let u = x / width;
                let g = amplitude * (-u * u).exp();
                let c = (frequency * x).cos() - offset;
                let dc = -frequency * (frequency * x).sin();
                (g * c, g * (dc - 2.0 * u / width * c))
            }
            ProfileSpec::Lorentzian { amplitude, width } => {
                let u = x / width;
                let s = 1.0 + u * u;
                (amplitude / s, -2.0 * amplitude * u / (width * s * s))
            }
            ProfileSpec::Tabulated { .. } => self.table.as_ref().map_or((0.0, 0.0), |t| t.eval(x)),
        }
    }

    pub fn eps(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn eps_prime(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Half-length beyond which `|ε|` and `|ε′|` are below `rel` times their
    /// peak scale; infinite for algebraically decaying profiles.
    pub fn effective_half_width(&self, rel: f64) -> f64 {
        let l = (1.0 / rel).ln().sqrt();
        match &self.spec {
            ProfileSpec::Gaussian { width, .. } | ProfileSpec::ModulatedGaussian { width, .. } => {
                (l + 1.0) * width
            }
            ProfileSpec::Bump { width, .. } => *width,
            ProfileSpec::Tabulated { x, .. } => x[0].abs().max(x[x.len() - 1].abs()),
            ProfileSpec::Lorentzian { width, .. } => width / rel.sqrt(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.spec {
            ProfileSpec::Tabulated { x, .. } => x.clone(),
            _ => {
                let s = self.effective_half_width(1e-20);
                let s = if s.is_finite() { s } else { 1e4 * self.width() };
                vec![-s, -0.5 * s, 0.0, 0.5 * s, s]
            }
        }
    }

    /// `‖ε‖²`.
    pub fn norm_sq(&self) -> f64 {
        match &self.spec {
            ProfileSpec::Gaussian { amplitude, width } => amplitude.powi(2) * width * (PI / 2.0).sqrt(),
            ProfileSpec::Lorentzian { amplitude, width } => amplitude.powi(2) * width * PI / 2.0,
            _ => self.integrate(|x| self.eps(x).powi(2)),
        }
    }

    /// `‖ε′‖²`.
    pub fn norm_prime_sq(&self) -> f64 {
        match &self.spec {
            ProfileSpec::Gaussian { amplitude, width } => amplitude.powi(2) * (PI / 2.0).sqrt() / width,
            ProfileSpec::Lorentzian { amplitude, width } => amplitude.powi(2) * PI / (8.0 * width),
            _ => self.integrate(|x| self.eps_prime(x).powi(2)),
        }
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        composite_converged(&self.breakpoints(), 8, 1e-15, 1e-300, |x| Complex64::new(f(x), 0.0)).re
    }

    /// Whether `fourier_transform` uses a closed form.
    pub fn has_closed_form_transform(&self) -> bool {
        !matches!(self.spec, ProfileSpec::Bump { .. } | ProfileSpec::Tabulated { .. })
    }

    /// Unitary transform `ε̂(ξ) = (2π)^{-1/2} ∫ e^{−iξx} ε(x) dx`.
    pub fn fourier_transform(&self, xi: f64) -> Complex64 {
        let c = (2.0 * PI).sqrt();
        let gauss = |a: f64, w: f64, f: f64| a * w * PI.sqrt() * (-(f * w).powi(2) / 4.0).exp();
        let re = |v: f64| Complex64::new(v / c, 0.0);
        match &self.spec {
            ProfileSpec::Gaussian { amplitude, width } => re(gauss(*amplitude, *width, xi)),
            ProfileSpec::ModulatedGaussian { amplitude, width, frequency, offset } => re(
                0.5 * (gauss(*amplitude, *width, xi - frequency)
                    + gauss(*amplitude, *width, xi + frequency))
                    - offset * gauss(*amplitude, *width, xi),
            ),
            ProfileSpec::Lorentzian { amplitude, width } => {
                re(amplitude * width * PI * (-width * xi.abs()).exp())
            }
            _ => {
                let b = self.breakpoints();
                let span = b[b.len() - 1] - b[0];
                let start = ((xi.abs() * span / (b.len() as f64)).ceil() as usize).max(4);
                composite_converged(&b, start, 1e-14, 1e-16, |x| {
                    Complex64::from_polar(self.eps(x), -xi * x)
                }) / c
            }
        }
    }
}

fn build_table(x: &[f64], y: &[f64], d: Option<&[f64]>) -> Result<Hermite> {
    let n = x.len();
    if n < 4 || y.len() != n || d.is_some_and(|d| d.len() != n) {
        return Err(Error::Profile(
            "tabulated profile needs at least 4 points and matching array lengths".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Profile("tabulated abscissae must be finite and strictly increasing".into()));
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Profile("tabulated profile vanishes identically".into()));
    }
    // Zero extension outside the table must be C¹.
    if y[0].abs() > 1e-10 * peak || y[n - 1].abs() > 1e-10 * peak {
        return Err(Error::Profile(
            "tabulated profile must vanish at both ends of the table".into(),
        ));
    }
    let slope = |i: usize| (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    // Second-difference estimates; a kink shows up as an isolated spike that
    // grows like 1/h instead of tracking its neighbours.
    let curv: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { slope(i - 1) };
            let right = if i == n - 1 { 0.0 } else { slope(i) };
            let span = if i == 0 || i == n - 1 {
                x[1.max(i)] - x[(n - 2).min(i.saturating_sub(1))]
            } else {
                0.5 * (x[i + 1] - x[i - 1])
            };
            (right - left).abs() / span.abs()
        })
        .collect();
    let scale = peak / (x[n - 1] - x[0]).powi(2);
    for i in 0..n {
        let lo = if i > 1 { curv[i - 2] } else { 0.0 };
        let hi = if i + 2 < n { curv[i + 2] } else { 0.0 };
        let nb = lo.max(hi).max(if i > 0 { curv[i - 1].min(curv.get(i + 1).copied().unwrap_or(0.0)) } else { 0.0 });
        if curv[i] > 10.0 * nb + 100.0 * scale {
            return Err(Error::Profile(format!(
                "tabulated profile is not C¹: slope jump at x = {}",
                x[i]
            )));
        }
    }
    let d = match d {
        Some(d) => {
            if d[0].abs() > 1e-8 * peak || d[n - 1].abs() > 1e-8 * peak {
                return Err(Error::Profile(
                    "tabulated derivative must vanish at both ends of the table".into(),
                ));
            }
            d.to_vec()
        }
        None => (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.0
                } else {
                    let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                    (h0 * slope(i) + h1 * slope(i - 1)) / (h0 + h1)
                }
            })
            .collect(),
    };
    Ok(Hermite { x: x.to_vec(), y: y.to_vec(), d })
}

/// Sampled check of `|ε(x)|, |ε′(x)| ≤ C e^{−α⟨x⟩}`.
///
/// The weighted envelope `max(|ε|, |ε′|) e^{α⟨x⟩}` is sampled on
/// `|x| ≤ max(20 w, 40/α)`. If its maximum sits in the outer tenth of the
/// range the range is doubled, up to six times; an envelope still peaking at
/// the edge after that is reported as a decay failure.
pub fn validate_decay(profile: &TwistProfile, alpha: f64) -> Result<DecayCertificate> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("required decay rate must be positive (got {alpha})")));
    }
    let log_env = |x: f64| {
        let (e, de) = profile.eval(x);
        let m = e.abs().max(de.abs());
        if m > 0.0 {
            m.ln() + alpha * (1.0 + x * x).sqrt()
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut range = (20.0 * profile.width()).max(40.0 / alpha);
    let samples = 8001;
    let mut peak = (f64::NEG_INFINITY, 0.0);
    for _ in 0..7 {
        let step = 2.0 * range / (samples - 1) as f64;
        let values: Vec<f64> = (0..samples).map(|i| log_env(-range + step * i as f64)).collect();
        peak = (f64::NEG_INFINITY, 0.0);
        for (i, &v) in values.iter().enumerate() {
            if v > peak.0 {
                peak = (v, -range + step * i as f64);
            }
        }
        if peak.1.abs() <= 0.9 * range {
            // Resample every near-maximal local peak finely; the coarse grid
            // can sit just off a narrow maximum.
            let mut best = peak.0;
            for i in 1..samples - 1 {
                let v = values[i];
                if v >= values[i - 1] && v >= values[i + 1] && v >= peak.0 - 1.0 {
                    let x0 = -range + step * (i - 1) as f64;
                    for j in 0..=400 {
                        best = best.max(log_env(x0 + step * j as f64 / 200.0));
                    }
                }
            }
            return Ok(DecayCertificate {
                alpha,
                constant: best.exp() * (1.0 + 1e-6),
                range,
                usable_radius: alpha / 2.0,
            });
        }
        range *= 2.0;
    }
    Err(Error::Decay {
        x: peak.1,
        detail: format!(
            "max(|ε|, |ε′|)·e^{{α⟨x⟩}} with α = {alpha} keeps growing; log-envelope {:.3} at x = {}",
            peak.0, peak.1
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values_and_norms() {
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        assert_eq!(p.eval(0.0), (1.0, 0.0));
        let s = (PI / 2.0).sqrt();
        assert!((p.norm_sq() - s).abs() < 1e-15);
        assert!((p.norm_prime_sq() - s).abs() < 1e-15);
        let t = p.fourier_transform(1.3);
        assert!((t.re - 2f64.sqrt().recip() * (-1.3f64 * 1.3 / 4.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn bump_has_compact_support() {
        let p = TwistProfile::bump(2.0, 1.5).unwrap();
        assert_eq!(p.eval(1.5), (0.0, 0.0));
        assert_eq!(p.eval(-7.0), (0.0, 0.0));
        assert!(p.eps(0.0) == 2.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(TwistProfile::gaussian(0.0, 1.0).is_err());
        assert!(TwistProfile::gaussian(1.0, -1.0).is_err());
    }

    #[test]
    fn kinked_table_is_rejected() {
        let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let tent: Vec<f64> = x.iter().map(|&t| (1.0 - t.abs()).max(0.0)).collect();
        assert!(matches!(
            TwistProfile::new(ProfileSpec::Tabulated { x: x.clone(), values: tent, derivatives: None }),
            Err(Error::Profile(_))
        ));
        let smooth: Vec<f64> = x.iter().map(|&t| (1.0 - t * t / 4.0).powi(3)).collect();
        let p = TwistProfile::new(ProfileSpec::Tabulated { x, values: smooth, derivatives: None });
        assert!(p.is_ok(), "{p:?}");
    }

    #[test]
    fn modulated_gaussian_zero() {
        let p = TwistProfile::modulated_gaussian_with_zero(1.0, 1.0, 2.0, 1.7).unwrap();
        assert!(p.fourier_transform(1.7).norm() < 1e-15);
        assert!(p.fourier_transform(0.5).norm() > 1e-3);
    }

    #[test]
    fn decay_checks() {
        let g = TwistProfile::gaussian(1.0, 1.0).unwrap();
        assert!(validate_decay(&g, 50.0).is_ok());
        let l = TwistProfile::new(ProfileSpec::Lorentzian { amplitude: 1.0, width: 1.0 }).unwrap();
        assert!(matches!(validate_decay(&l, 0.1), Err(Error::Decay { .. })));
        let b = TwistProfile::bump(1.0, 1.0).unwrap();
        let alpha = 2.0 * (3.0 * PI * PI).sqrt();
        assert_eq!(validate_decay(&b, alpha).unwrap().usable_radius, alpha / 2.0);
    }
}
