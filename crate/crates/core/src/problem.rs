//! Problem definitions in linear-plus-quadratic form.
//!
//! A [`ReducedProblem`] describes
//! `N(c) = Σ aᵢ D^{dᵢ}c + Σ bⱼ (D^{pⱼ}c)(D^{qⱼ}c) + γ`
//! together with the auxiliary operator `L`, the initial guess `u₀`, the
//! inhomogeneous boundary data `u₀` must satisfy, and the norm and residual
//! domains used by the diagnostics.

use std::cmp::Ordering;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::coeff::Coeff;
use crate::error::{HamError, Result};
use crate::expfun::{parse_rational, ExpPoly, Rate, Window};
use crate::operators::{BoundaryCondition, LinearOp};

mod rational_str {
    use rug::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        crate::expfun::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearTerm {
    #[serde(with = "rational_str")]
    pub coeff: Rational,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticTerm {
    #[serde(with = "rational_str")]
    pub coeff: Rational,
    pub order_a: u32,
    pub order_b: u32,
}

/// The nonlinear operator `N`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NonlinearOp {
    pub linear: Vec<LinearTerm>,
    pub quadratic: Vec<QuadraticTerm>,
    pub forcing: Rational,
}

impl NonlinearOp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn linear(mut self, coeff: impl Into<Rational>, order: u32) -> Self {
        self.linear.push(LinearTerm { coeff: coeff.into(), order });
        self
    }

    pub fn quadratic(mut self, coeff: impl Into<Rational>, order_a: u32, order_b: u32) -> Self {
        self.quadratic.push(QuadraticTerm { coeff: coeff.into(), order_a, order_b });
        self
    }

    pub fn forcing(mut self, gamma: impl Into<Rational>) -> Self {
        self.forcing = gamma.into();
        self
    }

    /// Highest derivative order appearing in `N`.
    pub fn max_order(&self) -> u32 {
        let lin = self.linear.iter().map(|t| t.order);
        let quad = self.quadratic.iter().flat_map(|t| [t.order_a, t.order_b]);
        lin.chain(quad).max().unwrap_or(0)
    }

    /// `N(u)` evaluated directly.
    pub fn apply<C: Coeff>(&self, u: &ExpPoly<C>) -> ExpPoly<C> {
        let derivs: Vec<ExpPoly<C>> = (0..=self.max_order()).map(|d| u.diff(d)).collect();
        let mut out = ExpPoly::zero();
        for t in &self.linear {
            out.add_assign(&derivs[t.order as usize].scale_rational(&t.coeff));
        }
        for t in &self.quadratic {
            let p = derivs[t.order_a as usize].mul(&derivs[t.order_b as usize]);
            out.add_assign(&p.scale_rational(&t.coeff));
        }
        if self.forcing.cmp0() != Ordering::Equal {
            out.add_assign(&ExpPoly::constant(C::from_rational(&self.forcing)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Zero,
    Infinity,
}

/// Inhomogeneous boundary datum `D^d u(at) = value` for the original problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub derivative: u32,
    pub at: Location,
    #[serde(with = "rational_str")]
    pub value: Rational,
}

impl Constraint {
    pub fn at_zero(derivative: u32, value: impl Into<Rational>) -> Self {
        Constraint { derivative, at: Location::Zero, value: value.into() }
    }

    pub fn at_infinity(derivative: u32, value: impl Into<Rational>) -> Self {
        Constraint { derivative, at: Location::Infinity, value: value.into() }
    }

    fn homogeneous(&self) -> BoundaryCondition {
        match (self.at, self.derivative) {
            (Location::Zero, d) => BoundaryCondition::ValueAtZero(d),
            (Location::Infinity, 0) => BoundaryCondition::DecayAtInfinity,
            (Location::Infinity, d) => BoundaryCondition::DerivativeVanishesAtInfinity(d),
        }
    }

    /// Exact check on an exponential polynomial.
    pub fn holds(&self, u: &ExpPoly<Rational>) -> bool {
        let du = u.diff(self.derivative);
        match self.at {
            Location::Zero => du.value_at_zero() == self.value,
            Location::Infinity => {
                // the limit exists iff the rate-0 part is a constant
                if du.max_power_at(Rate::ZERO).is_some_and(|p| p > 0) {
                    return false;
                }
                du.coeff(0, Rate::ZERO).cloned().unwrap_or_default() == self.value
            }
        }
    }
}

/// How a PDE solution factors as `spatial(x, y, z) · c(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialFactor {
    /// ODE problem, no spatial dependence.
    None,
    /// `u = x · c(t)`
    X,
    /// `u = (x + y + z − cos x − cos y − cos z) · c(t)`
    BeamProfile,
    /// `u = e^{−x} · c(t)`
    ExpNegX,
}

impl SpatialFactor {
    pub fn eval(self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            SpatialFactor::None => 1.0,
            SpatialFactor::X => x,
            SpatialFactor::BeamProfile => x + y + z - x.cos() - y.cos() - z.cos(),
            SpatialFactor::ExpNegX => (-x).exp(),
        }
    }

    /// `∫ S² ` over the unit cell `[0,1]^dim` (1 for ODE problems).
    pub fn squared_integral(self) -> f64 {
        match self {
            SpatialFactor::None => 1.0,
            SpatialFactor::X => 1.0 / 3.0,
            SpatialFactor::ExpNegX => (1.0 - (-2.0f64).exp()) / 2.0,
            SpatialFactor::BeamProfile => {
                // S = Σ g(v) with g(v) = v − cos v; expand the square.
                let g1 = 0.5 - 1f64.sin();
                let g2 = 1.0 / 3.0 - 2.0 * (1f64.cos() + 1f64.sin() - 1.0)
                    + 0.5 + 2f64.sin() / 4.0;
                3.0 * g2 + 6.0 * g1 * g1
            }
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            SpatialFactor::None => "1",
            SpatialFactor::X => "x",
            SpatialFactor::BeamProfile => "x+y+z-cos(x)-cos(y)-cos(z)",
            SpatialFactor::ExpNegX => "exp(-x)",
        }
    }
}

/// Sign convention of the homotopy `(1−p)[L(u)−L(u₀)] + p·h·N(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HSignConvention {
    #[default]
    #[serde(rename = "plus_phN")]
    PlusPhN,
}

/// Norm used for the successive-term ratios: L² of `D^derivative u` over the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    #[serde(default)]
    pub derivative: u32,
    pub window: Window,
}

impl NormSpec {
    pub fn l2(window: Window) -> Self {
        NormSpec { derivative: 0, window }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct ReducedProblem {
    pub name: String,
    pub nonlinear: NonlinearOp,
    pub operator: LinearOp,
    pub u0: ExpPoly<Rational>,
    pub constraints: Vec<Constraint>,
    pub spatial_factor: SpatialFactor,
    pub norm: NormSpec,
    pub residual_window: Window,
    pub h_sign_convention: HSignConvention,
}

impl ReducedProblem {
    /// Validates that `u₀` meets every constraint exactly and that the
    /// operator carries the homogeneous version of each constraint.
    pub fn new(
        name: impl Into<String>,
        nonlinear: NonlinearOp,
        operator: LinearOp,
        u0: ExpPoly<Rational>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let p = ReducedProblem {
            name: name.into(),
            nonlinear,
            operator,
            u0,
            constraints,
            spatial_factor: SpatialFactor::None,
            norm: NormSpec::l2(Window::HalfLine),
            residual_window: Window::HalfLine,
            h_sign_convention: HSignConvention::PlusPhN,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_spatial_factor(mut self, s: SpatialFactor) -> Self {
        self.spatial_factor = s;
        self
    }

    pub fn with_norm(mut self, norm: NormSpec) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_residual_window(mut self, w: Window) -> Self {
        self.residual_window = w;
        self
    }

    fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            if !c.holds(&self.u0) {
                return Err(HamError::InvalidProblem(format!(
                    "u0 = {} violates constraint {:?}",
                    self.u0, c
                )));
            }
        }
        let mut wanted: Vec<BoundaryCondition> =
            self.constraints.iter().map(Constraint::homogeneous).collect();
        let mut have: Vec<BoundaryCondition> = self.operator.bcs().to_vec();
        let key = |b: &BoundaryCondition| format!("{b:?}");
        wanted.sort_by_key(key);
        have.sort_by_key(key);
        if wanted != have {
            return Err(HamError::InvalidProblem(format!(
                "operator conditions {have:?} do not match the problem's {wanted:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    name: String,
    linear_terms: Vec<LinearTerm>,
    #[serde(default)]
    quadratic_terms: Vec<QuadraticTerm>,
    #[serde(default = "zero_str")]
    forcing: String,
    operator: LinearOp,
    u0: ExpPoly<Rational>,
    constraints: Vec<Constraint>,
    #[serde(default = "no_spatial")]
    spatial_factor: SpatialFactor,
    #[serde(default = "default_norm")]
    norm: NormSpec,
    #[serde(default = "half_line")]
    residual_window: Window,
    #[serde(default)]
    h_sign_convention: HSignConvention,
}

fn zero_str() -> String {
    "0/1".into()
}
fn no_spatial() -> SpatialFactor {
    SpatialFactor::None
}
fn default_norm() -> NormSpec {
    NormSpec::l2(Window::HalfLine)
}
fn half_line() -> Window {
    Window::HalfLine
}

impl TryFrom<ProblemRepr> for ReducedProblem {
    type Error = HamError;
    fn try_from(r: ProblemRepr) -> Result<Self> {
        let nonlinear = NonlinearOp {
            linear: r.linear_terms,
            quadratic: r.quadratic_terms,
            forcing: parse_rational(&r.forcing)?,
        };
        let mut p = ReducedProblem::new(r.name, nonlinear, r.operator, r.u0, r.constraints)?;
        p.spatial_factor = r.spatial_factor;
        p.norm = r.norm;
        p.residual_window = r.residual_window;
        p.h_sign_convention = r.h_sign_convention;
        Ok(p)
    }
}

impl From<ReducedProblem> for ProblemRepr {
    fn from(p: ReducedProblem) -> Self {
        ProblemRepr {
            name: p.name,
            linear_terms: p.nonlinear.linear,
            quadratic_terms: p.nonlinear.quadratic,
            forcing: format!("{}/{}", p.nonlinear.forcing.numer(), p.nonlinear.forcing.denom()),
            operator: p.operator,
            u0: p.u0,
            constraints: p.constraints,
            spatial_factor: p.spatial_factor,
            norm: p.norm,
            residual_window: p.residual_window,
            h_sign_convention: p.h_sign_convention,
        }
    }
}
