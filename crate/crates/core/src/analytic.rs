//! Closed-form results for the infinite-server swarm-availability model.
//!
//! A swarm holds one title. Publishers appear at rate `r`, peers at rate
//! `lambda`, and every holder keeps the content online for a residence time
//! with mean `s / mu` (file size over mean download rate). Content is
//! *available* while at least one holder is online; such an interval is a
//! busy period of the underlying infinite-server queue and its expected
//! length is
//!
//! ```text
//!     B = (e^x - 1) / (r + lambda),    x = s (r + lambda) / mu
//! ```
//!
//! Everything else in this module is a consequence of that formula: the
//! bundling factor `B(2s) / B(s) = e^x + 1`, the long-run availability
//! fraction `B / (B + 1/r)`, and the limit diagnostics for `mu -> inf` and
//! `lambda -> inf`.

use serde::Serialize;
use thiserror::Error;

/// Largest load exponent the closed form will evaluate.
///
/// Past this point `e^x` leaves the `f64` range and the model is predicting
/// availability so long that the number would be garbage; callers get a
/// [`AnalyticError::Overflow`] instead so they can distinguish "effectively
/// forever" from a numeric artifact.
pub const MAX_LOAD_EXPONENT: f64 = 700.0;

/// Errors from parameter validation and the closed-form evaluations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error(
        "load exponent x = {load:.6e} exceeds 700; the model predicts effectively \
         permanent availability, which is not representable"
    )]
    Overflow { load: f64 },
}

/// The model quadruple `(s, mu, r, lambda)` every formula consumes.
///
/// Constructed through [`SwarmParams::new`], which enforces `s > 0`,
/// `mu > 0`, `r > 0` and `lambda >= 0` (a swarm kept alive by publishers
/// alone is legal; one with no publishers can never recover the content
/// once lost, so `r = 0` is rejected). Instances are therefore always
/// valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwarmParams {
    s: f64,
    mu: f64,
    r: f64,
    lambda: f64,
}

impl SwarmParams {
    pub fn new(s: f64, mu: f64, r: f64, lambda: f64) -> Result<Self, AnalyticError> {
        let positive = |name: &'static str, value: f64| -> Result<(), AnalyticError> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(AnalyticError::InvalidParameter {
                    name,
                    value,
                    requirement: "must be finite and strictly positive",
                })
            }
        };
        positive("s", s)?;
        positive("mu", mu)?;
        positive("r", r)?;
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(AnalyticError::InvalidParameter {
                name: "lambda",
                value: lambda,
                requirement: "must be finite and nonnegative",
            });
        }
        let params = Self { s, mu, r, lambda };
        let x = params.load();
        if !x.is_finite() || x <= 0.0 {
            return Err(AnalyticError::InvalidParameter {
                name: "load",
                value: x,
                requirement: "s * (r + lambda) / mu must be finite and positive",
            });
        }
        Ok(params)
    }

    /// File size in abstract data units.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Mean per-peer download rate in data units per time unit.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Publisher arrival rate per time unit.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Peer arrival rate per time unit.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The load exponent `x = s (r + lambda) / mu`.
    pub fn load(&self) -> f64 {
        self.s * (self.r + self.lambda) / self.mu
    }

    /// Combined arrival rate `r + lambda`.
    pub fn combined_rate(&self) -> f64 {
        self.r + self.lambda
    }

    /// Mean holder residence time `s / mu`.
    pub fn mean_residence(&self) -> f64 {
        self.s / self.mu
    }

    /// Same swarm with a different file size (used to compare bundle sizes).
    pub fn with_file_size(&self, s: f64) -> Result<Self, AnalyticError> {
        Self::new(s, self.mu, self.r, self.lambda)
    }
}

/// The three closed-form quantities for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticReport {
    /// Expected busy-period duration in time units.
    pub busy_period: f64,
    /// Expected factor by which doubling the file size stretches the busy
    /// period; always greater than 2.
    pub bundling_factor: f64,
    /// Long-run fraction of time the content is obtainable, in (0, 1).
    pub availability_fraction: f64,
}

/// Expected busy-period length `(e^x - 1) / (r + lambda)`.
///
/// Uses `exp_m1` so the small-`x` regime (`mu -> inf`) degrades gracefully
/// to `s / mu` instead of cancelling to noise.
pub fn expected_busy_period(params: &SwarmParams) -> Result<f64, AnalyticError> {
    let x = params.load();
    if x > MAX_LOAD_EXPONENT {
        return Err(AnalyticError::Overflow { load: x });
    }
    Ok(x.exp_m1() / params.combined_rate())
}

/// Ratio of the expected busy period at file size `2s` to the one at `s`.
///
/// Algebraically `(e^{2x} - 1) / (e^x - 1) = e^x + 1`; the right-hand form
/// is evaluated because the ratio of two near-zero quantities loses digits
/// for small `x`.
pub fn bundling_factor(params: &SwarmParams) -> Result<f64, AnalyticError> {
    let x = params.load();
    if x > MAX_LOAD_EXPONENT {
        return Err(AnalyticError::Overflow { load: x });
    }
    Ok(x.exp() + 1.0)
}

/// Long-run availability `B / (B + 1/r)`.
///
/// Idle periods end only at publisher arrivals, because peers that show up
/// while the content is gone leave immediately; the mean idle time is the
/// publisher inter-arrival mean `1/r`. This is a convention derived from
/// the stated peer behaviour, not a quantity with its own closed form.
pub fn availability_fraction(params: &SwarmParams) -> Result<f64, AnalyticError> {
    let busy = expected_busy_period(params)?;
    let idle = 1.0 / params.r();
    Ok(busy / (busy + idle))
}

/// All three quantities at once.
pub fn report(params: &SwarmParams) -> Result<AnalyticReport, AnalyticError> {
    Ok(AnalyticReport {
        busy_period: expected_busy_period(params)?,
        bundling_factor: bundling_factor(params)?,
        availability_fraction: availability_fraction(params)?,
    })
}

/// Which parameter is driven toward infinity by [`limit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    /// `mu * 10^k`: the busy period must shrink toward `s / mu`.
    MuToInfinity,
    /// `lambda * 10^k`: the busy period must grow without bound; hitting
    /// the overflow guard along the way is an accepted outcome.
    LambdaToInfinity,
}

/// One probe of the limit sequence. `busy_period` is `None` where the load
/// exceeded the representable range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitPoint {
    /// Multiplier `10^k` applied to the scaled parameter.
    pub scale: f64,
    pub busy_period: Option<f64>,
}

/// Outcome of a limit probe: the sampled sequence plus the checks the
/// sequence is supposed to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDiagnostic {
    pub kind: LimitKind,
    pub points: Vec<LimitPoint>,
    /// Strictly decreasing for `MuToInfinity`, strictly increasing for
    /// `LambdaToInfinity`, over the points that evaluated.
    pub monotone: bool,
    /// `B / (s / mu)` at the largest probed `mu`; approaches 1 from above.
    /// Only present for `MuToInfinity`.
    pub ratio_to_residence: Option<f64>,
    /// Whether any probe hit the overflow guard.
    pub overflowed: bool,
}

/// Samples `B` along `mu * 10^k` or `lambda * 10^k` for `k = 0..=6` and
/// reports whether the sequence behaves the way the formula promises.
pub fn limit_check(params: &SwarmParams, kind: LimitKind) -> Result<LimitDiagnostic, AnalyticError> {
    if kind == LimitKind::LambdaToInfinity && params.lambda() == 0.0 {
        return Err(AnalyticError::InvalidParameter {
            name: "lambda",
            value: 0.0,
            requirement: "must be positive to probe the lambda -> infinity limit",
        });
    }

    let mut points = Vec::with_capacity(7);
    let mut overflowed = false;
    let mut last_scaled = None;
    for k in 0..=6u32 {
        let scale = 10f64.powi(k as i32);
        let scaled = match kind {
            LimitKind::MuToInfinity => {
                SwarmParams::new(params.s, params.mu * scale, params.r, params.lambda)?
            }
            LimitKind::LambdaToInfinity => {
                SwarmParams::new(params.s, params.mu, params.r, params.lambda * scale)?
            }
        };
        match expected_busy_period(&scaled) {
            Ok(b) => {
                points.push(LimitPoint {
                    scale,
                    busy_period: Some(b),
                });
                last_scaled = Some(scaled);
            }
            Err(AnalyticError::Overflow { .. }) => {
                points.push(LimitPoint {
                    scale,
                    busy_period: None,
                });
                overflowed = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let computed: Vec<f64> = points.iter().filter_map(|p| p.busy_period).collect();
    let monotone = computed.windows(2).all(|w| match kind {
        LimitKind::MuToInfinity => w[1] < w[0],
        LimitKind::LambdaToInfinity => w[1] > w[0],
    });
    let ratio_to_residence = match kind {
        LimitKind::MuToInfinity => last_scaled
            .map(|p| computed.last().copied().unwrap() / p.mean_residence()),
        LimitKind::LambdaToInfinity => None,
    };

    Ok(LimitDiagnostic {
        kind,
        points,
        monotone,
        ratio_to_residence,
        overflowed,
    })
}
