//! Problem registry: the two benchmark problems and a manufactured-solution generator.

use crate::error::{Error, Result};
use crate::kernel::gamma;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type Fx = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fxt = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Spatial profile `g` of a solution `u = (1+t) g(x)`, with its first two derivatives.
#[derive(Clone)]
pub struct Profile {
    pub g: Fx,
    pub dg: Fx,
    pub d2g: Fx,
}

/// Order function `β(x, t)` with a display name.
#[derive(Clone)]
pub struct Order {
    pub name: String,
    pub eval: Fxt,
    /// Set when `β` does not depend on `(x, t)`.
    pub constant: Option<f64>,
}

impl Order {
    pub fn constant(beta: f64) -> Self {
        Order { name: format!("{beta}"), eval: Arc::new(move |_, _| beta), constant: Some(beta) }
    }

    /// `1 - e^{-xt}/2`.
    pub fn exponential() -> Self {
        Order { name: "1-exp(-xt)/2".into(), eval: Arc::new(|x, t| 1.0 - 0.5 * (-x * t).exp()), constant: None }
    }

    /// `4/3 - 0.005 cos(xt) sin(xt)`.
    pub fn trigonometric() -> Self {
        Order {
            name: "4/3-0.005cos(xt)sin(xt)".into(),
            eval: Arc::new(|x, t| 4.0 / 3.0 - 0.005 * (x * t).cos() * (x * t).sin()),
            constant: None,
        }
    }

    pub fn at(&self, x: f64, t: f64) -> f64 {
        (self.eval)(x, t)
    }
}

impl fmt::Debug for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Order").field("name", &self.name).field("constant", &self.constant).finish()
    }
}

/// One initial-boundary value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub l0: f64,
    pub l: f64,
    pub t_final: f64,
    pub beta: Order,
    pub source: Fxt,
    pub u0: Fx,
    pub g1: Fx,
    pub g2: Fx,
    pub exact: Option<Fxt>,
    /// Present when the exact solution has the form `(1+t) g(x)`.
    pub profile: Option<Profile>,
    /// Set when the order leaves `(0, 1)` somewhere on the domain.
    pub order_violation: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &(self.l0, self.l, self.t_final))
            .field("beta", &self.beta)
            .field("has_exact", &self.exact.is_some())
            .field("order_violation", &self.order_violation)
            .finish()
    }
}

impl ProblemSpec {
    pub fn beta_at(&self, x: f64, t: f64) -> f64 {
        self.beta.at(x, t)
    }
    pub fn f(&self, x: f64, t: f64) -> f64 {
        (self.source)(x, t)
    }
    pub fn exact_at(&self, x: f64, t: f64) -> Option<f64> {
        self.exact.as_ref().map(|u| u(x, t))
    }

    /// Corner compatibility and agreement of the exact solution with `u0`.
    pub fn check(&self) -> Result<()> {
        let tol = 1e-12;
        if ((self.u0)(self.l0) - (self.g1)(0.0)).abs() > tol || ((self.u0)(self.l) - (self.g2)(0.0)).abs() > tol {
            return Err(Error::validation(
                "problem",
                format!("{}: initial data disagrees with boundary data", self.name),
            ));
        }
        if let Some(u) = &self.exact {
            for i in 0..=100 {
                let x = self.l0 + (self.l - self.l0) * i as f64 / 100.0;
                if (u(x, 0.0) - (self.u0)(x)).abs() > tol {
                    return Err(Error::validation(
                        "problem",
                        format!("{}: exact(x, 0) != u0(x) at x = {x}", self.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `u_t + D^β u + u_x - u_xx - f` at `(x, t)`, using the closed-form Caputo derivative
    /// of `(1+t) g(x)`, which is `g(x) t^{1-β} / Γ(2-β)`.
    pub fn residual(&self, x: f64, t: f64) -> Option<f64> {
        let p = self.profile.as_ref()?;
        let b = self.beta_at(x, t);
        let g = (p.g)(x);
        let lhs = g + g * t.powf(1.0 - b) / gamma(2.0 - b) + (1.0 + t) * (p.dg)(x) - (1.0 + t) * (p.d2g)(x);
        Some(lhs - self.f(x, t))
    }
}

fn flag_violation(beta: &Order, l0: f64, l: f64, t_final: f64) -> bool {
    if let Some(b) = beta.constant {
        return !(b > 0.0 && b < 1.0);
    }
    let n = 64;
    (0..=n).any(|i| {
        (0..=n).any(|j| {
            let b = beta.at(l0 + (l - l0) * i as f64 / n as f64, t_final * j as f64 / n as f64);
            !(b > 0.0 && b < 1.0)
        })
    })
}

/// Problem whose exact solution is `(1+t) g(x)`; the source is derived from it.
pub fn manufactured(name: &str, profile: Profile, beta: Order, domain: (f64, f64, f64)) -> ProblemSpec {
    let (l0, l, t_final) = domain;
    let Profile { g, dg, d2g } = profile.clone();
    let b = beta.eval.clone();
    let source: Fxt = Arc::new(move |x, t| {
        let be = b(x, t);
        let gx = g(x);
        gx + gx * t.powf(1.0 - be) / gamma(2.0 - be) + (1.0 + t) * dg(x) - (1.0 + t) * d2g(x)
    });
    let g = profile.g.clone();
    let exact: Fxt = Arc::new(move |x, t| (1.0 + t) * g(x));
    let (ga, gb) = ((profile.g)(l0), (profile.g)(l));
    let g0 = profile.g.clone();
    ProblemSpec {
        name: name.to_string(),
        l0,
        l,
        t_final,
        order_violation: flag_violation(&beta, l0, l, t_final),
        beta,
        source,
        u0: Arc::new(move |x| g0(x)),
        g1: Arc::new(move |t| (1.0 + t) * ga),
        g2: Arc::new(move |t| (1.0 + t) * gb),
        exact: Some(exact),
        profile: Some(profile),
    }
}

/// `10 x²(1-x)²` with derivatives.
pub fn quartic_profile() -> Profile {
    Profile {
        g: Arc::new(|x| 10.0 * x * x * (1.0 - x) * (1.0 - x)),
        dg: Arc::new(|x| 10.0 * (2.0 * x - 6.0 * x * x + 4.0 * x * x * x)),
        d2g: Arc::new(|x| 10.0 * (2.0 - 12.0 * x + 12.0 * x * x)),
    }
}

/// `a sin(πx)` with derivatives.
pub fn sine_profile(a: f64) -> Profile {
    Profile {
        g: Arc::new(move |x| a * (PI * x).sin()),
        dg: Arc::new(move |x| a * PI * (PI * x).cos()),
        d2g: Arc::new(move |x| -a * PI * PI * (PI * x).sin()),
    }
}

pub fn zero_profile() -> Profile {
    Profile { g: Arc::new(|_| 0.0), dg: Arc::new(|_| 0.0), d2g: Arc::new(|_| 0.0) }
}

/// Example 1 with its source transcribed term by term.
pub fn example1() -> ProblemSpec {
    let beta = Order::exponential();
    let b = beta.eval.clone();
    let source: Fxt = Arc::new(move |x, t| {
        let be = b(x, t);
        let q = 10.0 * x * x * (1.0 - x) * (1.0 - x);
        q + q * t.powf(1.0 - be) / gamma(2.0 - be) + 10.0 * (1.0 + t) * (2.0 * x - 6.0 * x * x + 4.0 * x * x * x)
            - 10.0 * (1.0 + t) * (2.0 - 12.0 * x + 12.0 * x * x)
    });
    let mut p = manufactured("example1", quartic_profile(), beta, (0.0, 1.0, 1.0));
    p.source = source;
    p
}

/// Example 2 with exact solution `5(1+t) sin(πx)` and the source regenerated from it.
pub fn example2() -> ProblemSpec {
    manufactured("example2", sine_profile(5.0), Order::trigonometric(), (0.0, 1.0, 1.0))
}

/// The source printed for Example 2; its cosine term has the opposite sign of the regenerated one.
pub fn example2_printed_source() -> Fxt {
    let b = Order::trigonometric().eval;
    Arc::new(move |x, t| {
        let be = b(x, t);
        5.0 * (1.0 + PI * PI * (1.0 + t)) * (PI * x).sin() + 5.0 * (PI * x).sin() * t.powf(1.0 - be) / gamma(2.0 - be)
            - 5.0 * PI * (1.0 + t) * (PI * x).cos()
    })
}

/// Names accepted after `manufactured:`.
pub const PRESETS: &[&str] = &["zero", "sine", "sine-variable", "quartic", "quartic-constant"];

fn preset(name: &str) -> Result<ProblemSpec> {
    let unit = (0.0, 1.0, 1.0);
    let full = format!("manufactured:{name}");
    Ok(match name {
        "zero" => manufactured(&full, zero_profile(), Order::constant(0.5), unit),
        "sine" => manufactured(&full, sine_profile(1.0), Order::constant(0.5), unit),
        "sine-variable" => manufactured(&full, sine_profile(1.0), Order::exponential(), unit),
        "quartic" => manufactured(&full, quartic_profile(), Order::exponential(), unit),
        "quartic-constant" => manufactured(&full, quartic_profile(), Order::constant(0.4), unit),
        other => {
            return Err(Error::validation(
                "problem",
                format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")),
            ))
        }
    })
}

/// Look up `example1`, `example2` or `manufactured:<preset>`.
pub fn resolve(name: &str) -> Result<ProblemSpec> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        _ => match name.strip_prefix("manufactured:") {
            Some(p) => preset(p),
            None => Err(Error::validation(
                "problem",
                format!("unknown problem {name:?}; use example1, example2 or manufactured:<preset>"),
            )),
        },
    }
}
