//! Deformation equations and the homotopy series `u₀ + u₁ + u₂ + …`.
//!
//! Term `k ≥ 1` solves `L(u_k) = χ_k L(u_{k−1}) − h R_{k−1}` with `χ₁ = 0`,
//! `χ_k = 1` otherwise, and
//! `R_m = Σ aᵢ D^{dᵢ}u_m + Σ bⱼ Σᵢ (D^{pⱼ}u_i)(D^{qⱼ}u_{m−i}) + γ[m = 0]`.

use std::sync::Arc;

use rug::Rational;

use crate::coeff::Coeff;
use crate::error::{HamError, Result};
use crate::expfun::ExpPoly;
use crate::problem::ReducedProblem;

#[derive(Clone, Debug)]
pub struct HomotopySeries<C: Coeff> {
    problem: Arc<ReducedProblem>,
    h: C,
    terms: Vec<ExpPoly<C>>,
    /// `derivs[k][d] = D^d u_k`
    derivs: Vec<Vec<ExpPoly<C>>>,
}

impl<C: Coeff> HomotopySeries<C> {
    /// A series holding only `u₀`.
    pub fn new(problem: Arc<ReducedProblem>, h: C) -> Self {
        let u0 = problem.u0.map_coeffs(C::from_rational);
        let mut s = HomotopySeries { problem, h, terms: Vec::new(), derivs: Vec::new() };
        s.push(u0);
        s
    }

    /// `u₀ … u_order`.
    pub fn build(problem: Arc<ReducedProblem>, h: C, order: usize) -> Result<Self> {
        let mut s = Self::new(problem, h);
        s.extend(order)?;
        Ok(s)
    }

    pub fn problem(&self) -> &ReducedProblem {
        &self.problem
    }

    pub fn h(&self) -> &C {
        &self.h
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[ExpPoly<C>] {
        &self.terms
    }

    pub fn term(&self, k: usize) -> Result<&ExpPoly<C>> {
        self.terms
            .get(k)
            .ok_or(HamError::OrderOutOfRange { requested: k, computed: self.order() })
    }

    fn push(&mut self, u: ExpPoly<C>) {
        let top = self.problem.nonlinear.max_order();
        let mut d = Vec::with_capacity(top as usize + 1);
        d.push(u.clone());
        for _ in 0..top {
            let next = d.last().unwrap().diff(1);
            d.push(next);
        }
        self.derivs.push(d);
        self.terms.push(u);
    }

    /// `R_m` from the terms already computed.
    pub fn homotopy_rhs(&self, m: usize) -> Result<ExpPoly<C>> {
        if m > self.order() {
            return Err(HamError::OrderOutOfRange { requested: m, computed: self.order() });
        }
        let n = &self.problem.nonlinear;
        let mut r = ExpPoly::zero();
        for t in &n.linear {
            r.add_assign(&self.derivs[m][t.order as usize].scale_rational(&t.coeff));
        }
        for t in &n.quadratic {
            let (p, q) = (t.order_a as usize, t.order_b as usize);
            let mut acc = ExpPoly::zero();
            if p == q {
                for i in 0..(m + 1) / 2 {
                    acc.add_product(&self.derivs[i][p], &self.derivs[m - i][p]);
                }
                acc = acc.scale_rational(&Rational::from(2));
                if m % 2 == 0 {
                    let mid = &self.derivs[m / 2][p];
                    acc.add_product(mid, mid);
                }
            } else {
                for i in 0..=m {
                    acc.add_product(&self.derivs[i][p], &self.derivs[m - i][q]);
                }
            }
            r.add_assign(&acc.scale_rational(&t.coeff));
        }
        if m == 0 && !n.forcing.is_zero() {
            r.add_assign(&ExpPoly::constant(C::from_rational(&n.forcing)));
        }
        Ok(r)
    }

    /// Computes terms up to and including `order`.
    pub fn extend(&mut self, order: usize) -> Result<()> {
        let op = self.problem.operator.clone();
        while self.order() < order {
            let k = self.terms.len();
            let mut rhs = self.homotopy_rhs(k - 1)?.scale(&self.h).neg();
            if k >= 2 {
                rhs.add_assign(&op.apply(&self.terms[k - 1]));
            }
            let u = op.solve(&rhs)?;
            self.push(u);
        }
        Ok(())
    }

    /// `S_order = u₀ + … + u_order`.
    pub fn partial_sum(&self, order: usize) -> Result<ExpPoly<C>> {
        if order > self.order() {
            return Err(HamError::OrderOutOfRange { requested: order, computed: self.order() });
        }
        let mut s = ExpPoly::zero();
        for u in &self.terms[..=order] {
            s.add_assign(u);
        }
        Ok(s)
    }

    /// `N(S_order)`.
    pub fn residual_function(&self, order: usize) -> Result<ExpPoly<C>> {
        Ok(self.problem.nonlinear.apply(&self.partial_sum(order)?))
    }

    /// True when some `u_k` and everything after it vanish identically.
    pub fn terminates(&self) -> Option<usize> {
        let last_nonzero = self.terms.iter().rposition(|u| !u.is_zero())?;
        (last_nonzero < self.order()).then_some(last_nonzero + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::SymbolicH;
    use crate::expfun::Rate;
    use crate::operators::{BoundaryCondition, CharRoot, LinearOp};
    use crate::problem::{Constraint, NonlinearOp};

    fn ex1() -> Arc<ReducedProblem> {
        let op = LinearOp::new(vec![CharRoot::new(-2, 1)], vec![BoundaryCondition::ValueAtZero(0)])
            .unwrap();
        let u0 = ExpPoly::from_terms([
            (Rational::from(1), 0, Rate::ZERO),
            (Rational::from(-1), 0, Rate::integer(2)),
        ]);
        let n = NonlinearOp::new().linear(1, 1).quadratic(1, 0, 0).forcing(-1);
        Arc::new(ReducedProblem::new("ex1", n, op, u0, vec![Constraint::at_zero(0, 0)]).unwrap())
    }

    #[test]
    fn first_term_symbolic() {
        // L u1 = -h e^{-4t}, u1(0) = 0  =>  u1 = (h/2)(e^{-4t} - e^{-2t})
        let s = HomotopySeries::build(ex1(), SymbolicH::h(), 1).unwrap();
        let half_h = SymbolicH::from_coeffs(vec![Rational::new(), Rational::from((1, 2))]);
        let want = ExpPoly::from_terms([
            (half_h.clone(), 0, Rate::integer(4)),
            (half_h.negated(), 0, Rate::integer(2)),
        ]);
        assert_eq!(s.terms()[1], want);
    }

    #[test]
    fn rhs_matches_direct_expansion() {
        // brute-force Cauchy product for the quadratic term, no symmetry shortcut
        let s = HomotopySeries::build(ex1(), Rational::from((-3, 2)), 4).unwrap();
        for m in 0..=4 {
            let mut want = s.terms()[m].diff(1);
            for i in 0..=m {
                want.add_assign(&s.terms()[i].mul(&s.terms()[m - i]));
            }
            if m == 0 {
                want.add_assign(&ExpPoly::constant(Rational::from(-1)));
            }
            assert_eq!(s.homotopy_rhs(m).unwrap(), want, "m = {m}");
        }
    }

    #[test]
    fn terms_satisfy_deformation_equation_exactly() {
        let p = ex1();
        let h = Rational::from((-1, 1));
        let s = HomotopySeries::build(p.clone(), h.clone(), 5).unwrap();
        for k in 1..=5 {
            let lhs = p.operator.apply(&s.terms()[k]);
            let mut rhs = s.homotopy_rhs(k - 1).unwrap().scale(&h).neg();
            if k >= 2 {
                rhs.add_assign(&p.operator.apply(&s.terms()[k - 1]));
            }
            assert_eq!(lhs, rhs);
            assert!(s.terms()[k].value_at_zero().is_zero());
        }
    }

    #[test]
    fn exact_guess_terminates() {
        // N(c) = c' + c, u0 = e^{-t} is already exact
        let op = LinearOp::new(vec![CharRoot::new(0, 1)], vec![BoundaryCondition::ValueAtZero(0)])
            .unwrap();
        let u0 = ExpPoly::term(Rational::from(1), 0, Rate::integer(1));
        let n = NonlinearOp::new().linear(1, 1).linear(1, 0);
        let p = ReducedProblem::new("exact", n, op, u0, vec![Constraint::at_zero(0, 1)]).unwrap();
        let s = HomotopySeries::build(Arc::new(p), Rational::from(-1), 4).unwrap();
        assert!(s.terms()[1..].iter().all(ExpPoly::is_zero));
        assert_eq!(s.terminates(), Some(1));
    }

    #[test]
    fn order_out_of_range() {
        let s = HomotopySeries::new(ex1(), Rational::from(-1));
        assert!(matches!(s.partial_sum(3), Err(HamError::OrderOutOfRange { .. })));
        assert!(s.homotopy_rhs(1).is_err());
    }
}
