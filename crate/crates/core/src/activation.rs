//! Scalar activation functions with first/second derivatives and the
//! structural descriptors the constructions rely on.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn one() -> f64 {
    1.0
}

fn leaky_default() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Activation {
    /// Step function taking the value `c` at zero.
    Heaviside { c: f64 },
    Sigmoid,
    Tanh,
    Arctan,
    SoftSign,
    Isru {
        #[serde(default = "one")]
        c: f64,
    },
    SoftClip {
        #[serde(default = "one")]
        c: f64,
    },
    Sqnl,
    Relu,
    LeakyRelu {
        #[serde(default = "leaky_default")]
        c: f64,
    },
    SoftPlus,
    BentIdentity,
    Silu,
    Isrlu {
        #[serde(default = "one")]
        c: f64,
    },
    Elu {
        #[serde(default = "one")]
        c: f64,
    },
    /// The piecewise-linear two-tent function of the toy scheme.
    ToyLightning,
}

/// An open interval (centre ± radius) on which σ(s) = slope·s + intercept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSegment {
    pub centre: f64,
    pub radius: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// An open interval (centre ± radius) on which σ is constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSegment {
    pub centre: f64,
    pub radius: f64,
    pub value: f64,
}

/// Abscissa of the minimum of s·sigmoid(s), root of 1 + s(1 − sigmoid(s)) = 0.
const SILU_ARGMIN: f64 = -1.278_464_542_761_074;

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

impl Activation {
    pub fn validate(&self) -> Result<()> {
        let finite = |c: f64| {
            if c.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("activation parameter must be finite: {self:?}")))
            }
        };
        match *self {
            Activation::Heaviside { c } => finite(c),
            Activation::Isru { c } | Activation::SoftClip { c } | Activation::Isrlu { c } => {
                finite(c)?;
                if c > 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("{self:?} needs c > 0")))
                }
            }
            Activation::LeakyRelu { c } => {
                finite(c)?;
                if c.abs() != 1.0 {
                    Ok(())
                } else {
                    Err(invalid("leaky ReLU needs |c| != 1"))
                }
            }
            Activation::Elu { c } => finite(c),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Heaviside { .. } => "heaviside",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Arctan => "arctan",
            Activation::SoftSign => "soft_sign",
            Activation::Isru { .. } => "isru",
            Activation::SoftClip { .. } => "soft_clip",
            Activation::Sqnl => "sqnl",
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::SoftPlus => "soft_plus",
            Activation::BentIdentity => "bent_identity",
            Activation::Silu => "silu",
            Activation::Isrlu { .. } => "isrlu",
            Activation::Elu { .. } => "elu",
            Activation::ToyLightning => "toy_lightning",
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Activation::Heaviside { c } => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    0.0
                } else {
                    c
                }
            }
            Activation::Sigmoid => sigmoid(s),
            Activation::Tanh => s.tanh(),
            Activation::Arctan => s.atan(),
            Activation::SoftSign => s / (1.0 + s.abs()),
            Activation::Isru { c } => s / (1.0 + c * s * s).sqrt(),
            Activation::SoftClip { c } => (softplus(c * s) - softplus(c * (s - 1.0))) / c,
            Activation::Sqnl => {
                if s <= -2.0 {
                    -1.0
                } else if s <= 0.0 {
                    s + s * s / 4.0
                } else if s <= 2.0 {
                    s - s * s / 4.0
                } else {
                    1.0
                }
            }
            Activation::Relu => s.max(0.0),
            Activation::LeakyRelu { c } => s.max(0.0) + (c * s).min(0.0),
            Activation::SoftPlus => softplus(s),
            Activation::BentIdentity => 0.5 * (s * s + 1.0).sqrt() - 0.5 + s,
            Activation::Silu => s * sigmoid(s),
            Activation::Isrlu { c } => {
                if s < 0.0 {
                    s / (1.0 + c * s * s).sqrt()
                } else {
                    s
                }
            }
            Activation::Elu { c } => {
                if s < 0.0 {
                    c * s.exp_m1()
                } else {
                    s
                }
            }
            Activation::ToyLightning => ((s + 1.0).abs() - 1.0).min(0.0) + (1.0 - (s - 1.0).abs()).max(0.0),
        }
    }

    /// First derivative; at kinks the right derivative.
    pub fn deriv(&self, s: f64) -> f64 {
        match *self {
            Activation::Heaviside { .. } => 0.0,
            Activation::Sigmoid => {
                let g = sigmoid(s);
                g * (1.0 - g)
            }
            Activation::Tanh => {
                let t = s.tanh();
                1.0 - t * t
            }
            Activation::Arctan => 1.0 / (1.0 + s * s),
            Activation::SoftSign => {
                let d = 1.0 + s.abs();
                1.0 / (d * d)
            }
            Activation::Isru { c } => (1.0 + c * s * s).powf(-1.5),
            Activation::SoftClip { c } => sigmoid(c * s) - sigmoid(c * (s - 1.0)),
            Activation::Sqnl => {
                if s < -2.0 || s >= 2.0 {
                    0.0
                } else if s < 0.0 {
                    1.0 + s / 2.0
                } else {
                    1.0 - s / 2.0
                }
            }
            Activation::Relu => {
                if s >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { c } => {
                if s >= 0.0 {
                    1.0 + c.min(0.0)
                } else {
                    c.max(0.0)
                }
            }
            Activation::SoftPlus => sigmoid(s),
            Activation::BentIdentity => s / (2.0 * (s * s + 1.0).sqrt()) + 1.0,
            Activation::Silu => {
                let g = sigmoid(s);
                g + s * g * (1.0 - g)
            }
            Activation::Isrlu { c } => {
                if s < 0.0 {
                    (1.0 + c * s * s).powf(-1.5)
                } else {
                    1.0
                }
            }
            Activation::Elu { c } => {
                if s < 0.0 {
                    c * s.exp()
                } else {
                    1.0
                }
            }
            Activation::ToyLightning => {
                if s < -2.0 || s >= 2.0 {
                    0.0
                } else if s < -1.0 || s >= 1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Second derivative; piecewise, right-sided at breakpoints.
    pub fn second(&self, s: f64) -> f64 {
        match *self {
            Activation::Sigmoid => {
                let g = sigmoid(s);
                g * (1.0 - g) * (1.0 - 2.0 * g)
            }
            Activation::Tanh => {
                let t = s.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Arctan => {
                let d = 1.0 + s * s;
                -2.0 * s / (d * d)
            }
            Activation::SoftSign => {
                let d = 1.0 + s.abs();
                let sign = if s >= 0.0 { 1.0 } else { -1.0 };
                -2.0 * sign / (d * d * d)
            }
            Activation::Isru { c } => -3.0 * c * s * (1.0 + c * s * s).powf(-2.5),
            Activation::SoftClip { c } => {
                let a = sigmoid(c * s);
                let b = sigmoid(c * (s - 1.0));
                c * (a * (1.0 - a) - b * (1.0 - b))
            }
            Activation::Sqnl => {
                if s < -2.0 || s >= 2.0 {
                    0.0
                } else if s < 0.0 {
                    0.5
                } else {
                    -0.5
                }
            }
            Activation::SoftPlus => {
                let g = sigmoid(s);
                g * (1.0 - g)
            }
            Activation::BentIdentity => 0.5 * (s * s + 1.0).powf(-1.5),
            Activation::Silu => {
                let g = sigmoid(s);
                g * (1.0 - g) * (2.0 + s * (1.0 - 2.0 * g))
            }
            Activation::Isrlu { c } => {
                if s < 0.0 {
                    -3.0 * c * s * (1.0 + c * s * s).powf(-2.5)
                } else {
                    0.0
                }
            }
            Activation::Elu { c } => {
                if s < 0.0 {
                    c * s.exp()
                } else {
                    0.0
                }
            }
            Activation::Heaviside { .. }
            | Activation::Relu
            | Activation::LeakyRelu { .. }
            | Activation::ToyLightning => 0.0,
        }
    }

    /// Points where σ or σ' is discontinuous.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Activation::Heaviside { .. } | Activation::Relu | Activation::LeakyRelu { .. } => vec![0.0],
            Activation::Elu { c } if c != 1.0 => vec![0.0],
            Activation::ToyLightning => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            _ => Vec::new(),
        }
    }

    /// Whether `s` lies within `tol` of a kink.
    pub fn near_kink(&self, s: f64, tol: f64) -> bool {
        self.kinks().iter().any(|k| (s - k).abs() <= tol)
    }

    pub fn is_twice_differentiable(&self) -> bool {
        matches!(
            self,
            Activation::Sigmoid
                | Activation::Tanh
                | Activation::Arctan
                | Activation::Isru { .. }
                | Activation::SoftClip { .. }
                | Activation::SoftPlus
                | Activation::BentIdentity
                | Activation::Silu
                | Activation::Isrlu { .. }
        )
    }

    pub fn is_smooth(&self) -> bool {
        self.kinks().is_empty()
    }

    pub fn is_heaviside(&self) -> bool {
        matches!(self, Activation::Heaviside { .. })
    }

    /// Finite distinct limits (σ(−∞), σ(+∞)) of a sigmoid-type activation.
    pub fn saturation_limits(&self) -> Option<(f64, f64)> {
        use std::f64::consts::FRAC_PI_2;
        match *self {
            Activation::Heaviside { .. } | Activation::Sigmoid | Activation::SoftClip { .. } => Some((0.0, 1.0)),
            Activation::Tanh | Activation::SoftSign | Activation::Sqnl => Some((-1.0, 1.0)),
            Activation::Arctan => Some((-FRAC_PI_2, FRAC_PI_2)),
            Activation::Isru { c } => {
                let r = 1.0 / c.sqrt();
                Some((-r, r))
            }
            _ => None,
        }
    }

    /// Limits of σ(s) − σ(s−1) at −∞ and +∞ for ReLU-type activations.
    pub fn relu_type_limits(&self) -> Option<(f64, f64)> {
        match *self {
            Activation::Relu | Activation::SoftPlus | Activation::Silu | Activation::Isrlu { .. } => Some((0.0, 1.0)),
            Activation::Elu { .. } => Some((0.0, 1.0)),
            Activation::LeakyRelu { c } => Some((c.max(0.0), 1.0 + c.min(0.0))),
            Activation::BentIdentity => Some((0.5, 1.5)),
            _ => None,
        }
    }

    /// Slopes (σ⁻, σ⁺) of the positively homogeneous limit lim σ(γs)/γ.
    pub fn homogeneous_limits(&self) -> Option<(f64, f64)> {
        // For every ReLU-type activation here the two limits coincide with the
        // limits of the unit difference.
        self.relu_type_limits()
    }

    pub fn affine_segment(&self) -> Option<AffineSegment> {
        match *self {
            Activation::Relu | Activation::Elu { .. } | Activation::Isrlu { .. } => {
                Some(AffineSegment { centre: 1.0, radius: 1.0, slope: 1.0, intercept: 0.0 })
            }
            Activation::LeakyRelu { c } => {
                Some(AffineSegment { centre: 1.0, radius: 1.0, slope: 1.0 + c.min(0.0), intercept: 0.0 })
            }
            Activation::ToyLightning => Some(AffineSegment { centre: 0.0, radius: 1.0, slope: 1.0, intercept: 0.0 }),
            _ => None,
        }
    }

    pub fn constant_segment(&self) -> Option<ConstantSegment> {
        match *self {
            Activation::Relu => Some(ConstantSegment { centre: -2.0, radius: 2.0, value: 0.0 }),
            Activation::LeakyRelu { c } if c <= 0.0 && c != -1.0 => {
                Some(ConstantSegment { centre: -2.0, radius: 2.0, value: 0.0 })
            }
            Activation::Sqnl => Some(ConstantSegment { centre: 3.0, radius: 1.0, value: 1.0 }),
            Activation::Heaviside { .. } => Some(ConstantSegment { centre: 1.0, radius: 1.0, value: 1.0 }),
            Activation::ToyLightning => Some(ConstantSegment { centre: 3.0, radius: 1.0, value: 0.0 }),
            _ => None,
        }
    }

    /// Tolerance for the saturation residual at γ = 1e6; arctan and soft-sign
    /// only saturate polynomially.
    pub fn saturation_tolerance(&self) -> f64 {
        match self {
            Activation::Arctan | Activation::SoftSign => 1e-3,
            _ => 1e-6,
        }
    }

    /// Enclosure [min, max] of σ over [lo, hi].
    pub fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        debug_assert!(lo <= hi);
        let mut pts = vec![lo, hi];
        let mut extra: Vec<f64> = Vec::new();
        match *self {
            Activation::Silu => extra.push(SILU_ARGMIN),
            Activation::ToyLightning => extra.extend([-1.0, 1.0]),
            Activation::Elu { .. } | Activation::LeakyRelu { .. } => extra.push(0.0),
            _ => {}
        }
        pts.extend(extra.into_iter().filter(|p| *p > lo && *p < hi));
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in pts {
            let v = self.eval(p);
            min = min.min(v);
            max = max.max(v);
        }
        if let Activation::Heaviside { c } = *self {
            if lo <= 0.0 && hi >= 0.0 {
                min = min.min(c).min(0.0);
                max = max.max(c).max(if hi > 0.0 { 1.0 } else { c });
            }
        }
        (min, max)
    }

    /// Every activation with its default parameters, for sweeping tests.
    pub fn catalogue() -> Vec<Activation> {
        vec![
            Activation::Heaviside { c: 0.5 },
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::Arctan,
            Activation::SoftSign,
            Activation::Isru { c: 1.0 },
            Activation::SoftClip { c: 1.0 },
            Activation::Sqnl,
            Activation::Relu,
            Activation::LeakyRelu { c: 0.01 },
            Activation::SoftPlus,
            Activation::BentIdentity,
            Activation::Silu,
            Activation::Isrlu { c: 1.0 },
            Activation::Elu { c: 1.0 },
            Activation::ToyLightning,
        ]
    }
}
