//! Built-in problems `ex1` … `ex6`.

use std::sync::Arc;

use rug::Rational;

use crate::coeff::Coeff;
use crate::error::{HamError, Result};
use crate::expfun::{ExpPoly, Rate, Window};
use crate::operators::{BoundaryCondition as Bc, CharRoot, LinearOp};
use crate::problem::{Constraint, NonlinearOp, NormSpec, ReducedProblem, SpatialFactor};

pub const IDS: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6"];

/// Default Blasius scaling.
pub const BLASIUS_LAMBDA: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    Shooting,
}

#[derive(Clone, Debug)]
pub struct ProblemEntry {
    pub id: &'static str,
    pub problem: Arc<ReducedProblem>,
    pub reference: ReferenceKind,
    pub default_h_grid: Vec<Rational>,
    /// Names of the golden tables this example regenerates.
    pub table_bindings: Vec<&'static str>,
}

pub fn get(id: &str) -> Result<ProblemEntry> {
    let (id, problem, reference, grid, tables): (_, _, _, &[(i32, i32)], Vec<&'static str>) =
        match id {
            "ex1" => (
                "ex1",
                ex1()?,
                ReferenceKind::ClosedForm,
                &[(2, 1), (3, 2), (13, 10), (1, 1), (1, 2)],
                vec!["table1"],
            ),
            "ex2" => (
                "ex2",
                ex2()?,
                ReferenceKind::Shooting,
                &[(6, 5), (1, 1), (4, 5), (3, 5)],
                vec!["table2"],
            ),
            "ex3" => ("ex3", ex3()?, ReferenceKind::ClosedForm, &[(1, 2), (1, 1), (3, 2)], vec![]),
            "ex4" => ("ex4", ex4()?, ReferenceKind::ClosedForm, &[(1, 1)], vec![]),
            "ex5" => ("ex5", ex5()?, ReferenceKind::ClosedForm, &[(-1, 1), (1, 1)], vec![]),
            "ex6" => (
                "ex6",
                blasius(&Rational::from(BLASIUS_LAMBDA))?,
                ReferenceKind::Shooting,
                &[(8, 5), (3, 2), (7, 5), (1, 1)],
                vec!["table3", "figure1"],
            ),
            other => return Err(HamError::UnknownProblem(other.to_string())),
        };
    Ok(ProblemEntry {
        id,
        problem: Arc::new(problem),
        reference,
        default_h_grid: grid.iter().map(|&(p, q)| Rational::from((p, q))).collect(),
        table_bindings: tables,
    })
}

fn ep(terms: &[(i64, u32, u64)]) -> ExpPoly<Rational> {
    ExpPoly::from_terms(terms.iter().map(|&(c, p, r)| (Rational::from(c), p, Rate::integer(r))))
}

/// `u' + u² = 1`, `u(0) = 0`.
pub fn ex1() -> Result<ReducedProblem> {
    let op = LinearOp::new(vec![CharRoot::new(-2, 1)], vec![Bc::ValueAtZero(0)])?;
    let n = NonlinearOp::new().linear(1, 1).quadratic(1, 0, 0).forcing(-1);
    ReducedProblem::new("ex1", n, op, ep(&[(1, 0, 0), (-1, 0, 2)]), vec![Constraint::at_zero(0, 0)])
}

/// `2u'' + u − u² = 0`, `u(0) = 0`, `u(∞) = 1`.
pub fn ex2() -> Result<ReducedProblem> {
    let op = LinearOp::new(
        vec![CharRoot::new(-1, 1), CharRoot::new(1, 1)],
        vec![Bc::ValueAtZero(0), Bc::DecayAtInfinity],
    )?;
    let n = NonlinearOp::new().linear(2, 2).linear(1, 0).quadratic(-1, 0, 0);
    ReducedProblem::new(
        "ex2",
        n,
        op,
        ep(&[(1, 0, 0), (-1, 0, 1)]),
        vec![Constraint::at_zero(0, 0), Constraint::at_infinity(0, 1)],
    )
}

/// Burgers `u_t + u u_x = u_xx`, `u(x,0) = 2x`, through `u = x·c(t)`.
pub fn ex3() -> Result<ReducedProblem> {
    let op = LinearOp::new(vec![CharRoot::new(0, 1)], vec![Bc::ValueAtZero(0)])?;
    let n = NonlinearOp::new().linear(1, 1).quadratic(1, 0, 0);
    Ok(ReducedProblem::new("ex3", n, op, ep(&[(2, 0, 0)]), vec![Constraint::at_zero(0, 2)])?
        .with_spatial_factor(SpatialFactor::X)
        .with_norm(NormSpec::l2(Window::Finite(1.0)))
        .with_residual_window(Window::Finite(0.25)))
}

/// Beam equation through `u = S(x,y,z)·c(t)`, reducing to `c'' − c = 0`.
pub fn ex4() -> Result<ReducedProblem> {
    let op = LinearOp::new(vec![CharRoot::new(0, 2)], vec![Bc::ValueAtZero(0), Bc::ValueAtZero(1)])?;
    let n = NonlinearOp::new().linear(1, 2).linear(-1, 0);
    Ok(ReducedProblem::new(
        "ex4",
        n,
        op,
        ep(&[(1, 0, 0), (-1, 1, 0)]),
        vec![Constraint::at_zero(0, 1), Constraint::at_zero(1, -1)],
    )?
    .with_spatial_factor(SpatialFactor::BeamProfile)
    .with_norm(NormSpec::l2(Window::Finite(1.0)))
    .with_residual_window(Window::Finite(0.25)))
}

/// `u_t + u_x − 2u_xxt = 0`, `u(x,0) = e^{−x}`, through `u = e^{−x}·c(t)`.
pub fn ex5() -> Result<ReducedProblem> {
    let op = LinearOp::new(vec![CharRoot::new(0, 1)], vec![Bc::ValueAtZero(0)])?;
    let n = NonlinearOp::new().linear(-1, 1).linear(-1, 0);
    Ok(ReducedProblem::new("ex5", n, op, ep(&[(1, 0, 0)]), vec![Constraint::at_zero(0, 1)])?
        .with_spatial_factor(SpatialFactor::ExpNegX)
        .with_norm(NormSpec::l2(Window::Finite(1.0)))
        .with_residual_window(Window::Finite(0.25)))
}

/// Blasius in scaled variables: `u''' + u u''/(2λ²) = 0`,
/// `u(0) = u'(0) = 0`, `u'(∞) = 1`.
pub fn blasius(lambda: &Rational) -> Result<ReducedProblem> {
    if lambda.cmp0() != std::cmp::Ordering::Greater {
        return Err(HamError::InvalidProblem(format!("lambda must be positive, got {lambda}")));
    }
    let op = LinearOp::new(
        vec![CharRoot::new(0, 2), CharRoot::new(-1, 1)],
        vec![Bc::ValueAtZero(0), Bc::ValueAtZero(1), Bc::DerivativeVanishesAtInfinity(1)],
    )?;
    let q = Rational::from(1) / (Rational::from(2) * lambda * lambda);
    let n = NonlinearOp::new().linear(1, 3).quadratic(q, 0, 2);
    Ok(ReducedProblem::new(
        "ex6",
        n,
        op,
        ep(&[(-1, 0, 0), (1, 1, 0), (1, 0, 1)]),
        vec![
            Constraint::at_zero(0, 0),
            Constraint::at_zero(1, 0),
            Constraint::at_infinity(1, 1),
        ],
    )?
    // u_k tends to a nonzero constant, so ratios use ‖u_k'‖
    .with_norm(NormSpec { derivative: 1, window: Window::HalfLine }))
}

/// Maps `u(t)` back to `y(η) = u(λη)/λ`.
pub fn blasius_transform<C: Coeff>(u: &ExpPoly<C>, lambda: &Rational) -> Result<ExpPoly<C>> {
    let inv = Rational::from(1) / lambda;
    Ok(u.rescale_argument(lambda)?.scale_rational(&inv))
}
