//! Weight functions `chi: R^- -> R^-` for the energies `E_chi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Profile {
    /// `chi(t) = -(-t)^p`.
    Power { p: f64 },
    /// `chi(t) = -(-t) ln(1 - t)`.
    LogModified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weight {
    pub name: String,
    pub profile: Profile,
    /// Evaluate at `scale * t` (so `scale = 1/2` gives `t -> chi(t/2)`).
    pub scale: f64,
    /// Member of the convex class.
    pub convex: bool,
    /// Sub-homogeneity constant `M` for members of the concave class.
    pub m: Option<f64>,
}

impl Weight {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidWeight(format!("exponent must be positive, got {p}")));
        }
        Ok(Self {
            name: format!("chi_{p}"),
            profile: Profile::Power { p },
            scale: 1.0,
            convex: p <= 1.0,
            m: (p >= 1.0).then_some(p),
        })
    }

    /// Concave member with `sup |t chi'| / |chi| = 2`, approached as `t -> 0`.
    pub fn log_modified() -> Self {
        Self {
            name: "chi_log".into(),
            profile: Profile::LogModified,
            scale: 1.0,
            convex: false,
            m: Some(2.0),
        }
    }

    /// `chi_{1/2}, chi_1, chi_2, chi_3` and the log-modified weight.
    pub fn library() -> Vec<Weight> {
        let mut out: Vec<Weight> = [0.5, 1.0, 2.0, 3.0]
            .iter()
            .map(|&p| Weight::power(p).unwrap())
            .collect();
        out.push(Weight::log_modified());
        out
    }

    pub fn by_name(name: &str) -> Result<Weight> {
        match name {
            "log" | "chi_log" => Ok(Self::log_modified()),
            _ => {
                let p = name.strip_prefix("chi_").unwrap_or(name);
                let p: f64 = match p {
                    "1/2" => 0.5,
                    _ => p
                        .parse()
                        .map_err(|_| Error::InvalidWeight(format!("unknown weight {name:?}")))?,
                };
                Self::power(p)
            }
        }
    }

    /// `t -> chi(c t)`.
    pub fn rescaled(&self, c: f64) -> Weight {
        Weight {
            name: format!("{}(x{c})", self.name),
            scale: self.scale * c,
            ..self.clone()
        }
    }

    pub fn is_sub_homogeneous(&self) -> bool {
        self.m.is_some()
    }

    fn magnitude(&self, s: f64) -> f64 {
        match self.profile {
            Profile::Power { p } => s.powf(p),
            Profile::LogModified => s * s.ln_1p(),
        }
    }

    fn magnitude_deriv(&self, s: f64) -> f64 {
        match self.profile {
            Profile::Power { p } => {
                if p == 1.0 {
                    1.0
                } else {
                    p * s.powf(p - 1.0)
                }
            }
            Profile::LogModified => s.ln_1p() + s / (1.0 + s),
        }
    }

    fn argument(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t > 1e-9 {
            return Err(Error::InvalidArgument(format!("weights live on t <= 0, got {t}")));
        }
        Ok((-t * self.scale).max(0.0))
    }

    /// `chi(t)` for `t <= 0` (tiny positive roundoff is read as 0).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = -self.magnitude(self.argument(t)?);
        if !v.is_finite() {
            return Err(Error::WeightOverflow { t });
        }
        Ok(v)
    }

    /// `chi'(t)`.
    pub fn deriv(&self, t: f64) -> Result<f64> {
        let v = self.scale * self.magnitude_deriv(self.argument(t)?);
        if !v.is_finite() {
            return Err(Error::WeightOverflow { t });
        }
        Ok(v)
    }

    /// Check the defining properties at sampled points.
    pub fn validate(&self) -> Result<()> {
        if self.eval(0.0)? != 0.0 {
            return Err(Error::InvalidWeight(format!("{}: chi(0) != 0", self.name)));
        }
        let ts: Vec<f64> = (0..=120).map(|k| -(10f64).powf(-6.0 + 0.1 * k as f64)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect::<Result<_>>()?;
        // ts decrease, so chi must decrease strictly along them.
        if vals.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidWeight(format!("{}: not increasing", self.name)));
        }
        if *vals.last().unwrap() > -1.0 {
            return Err(Error::InvalidWeight(format!("{}: chi(-1e6) too small", self.name)));
        }
        for &t in &ts {
            let h = 1e-3 * t.abs();
            let second = self.eval(t - h)? - 2.0 * self.eval(t)? + self.eval((t + h).min(0.0))?;
            let scale = self.eval(t)?.abs() * 1e-9;
            if self.convex && second < -scale {
                return Err(Error::InvalidWeight(format!("{}: not convex at {t}", self.name)));
            }
            if self.m.is_some() && second > scale {
                return Err(Error::InvalidWeight(format!("{}: not concave at {t}", self.name)));
            }
            if let Some(m) = self.m {
                let lhs = (t * self.deriv(t)?).abs();
                if lhs > m * self.eval(t)?.abs() * (1.0 + 1e-12) {
                    return Err(Error::InvalidWeight(format!(
                        "{}: |t chi'(t)| > M |chi(t)| at {t}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// `max |t chi'(t)| / |chi(t)|` over the given `t < 0`.
    pub fn fit_m(&self, ts: &[f64]) -> Result<f64> {
        let mut m: f64 = 0.0;
        for &t in ts {
            let v = self.eval(t)?;
            if v != 0.0 {
                m = m.max((t * self.deriv(t)?).abs() / v.abs());
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubhomogeneityReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `-chi(ct) / (-c^M chi(t)) - 1`.
    pub max_excess: f64,
    pub pass: bool,
}

/// Sample `t` in `-[1e-6, 1e6]` and `c` in `[1, 1e3]` log-uniformly and test
/// `-chi(ct) <= -c^M chi(t)`. Every tenth sample uses `c = 1`.
pub fn check_subhomogeneity(chi: &Weight, samples: usize, seed: u64) -> Result<SubhomogeneityReport> {
    let m = chi
        .m
        .ok_or_else(|| Error::InvalidWeight(format!("{} has no constant M", chi.name)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for k in 0..samples {
        let t = -(10f64).powf(rng.gen_range(-6.0..6.0));
        let c = if k % 10 == 0 {
            1.0
        } else {
            (10f64).powf(rng.gen_range(0.0..3.0))
        };
        let lhs = -chi.eval(c * t)?;
        let rhs = -c.powf(m) * chi.eval(t)?;
        let excess = lhs / rhs - 1.0;
        max_excess = max_excess.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    Ok(SubhomogeneityReport {
        samples,
        violations,
        max_excess,
        pass: violations == 0,
    })
}
