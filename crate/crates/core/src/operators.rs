//! Constant-coefficient linear operators `L = Σ a_k D^k` and their exact
//! inversion on [`ExpPoly`] under homogeneous boundary conditions.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::coeff::Coeff;
use crate::expfun::{parse_rational, ExpPoly, Monomial, Rate};
use crate::error::{HamError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `D^d u(0) = 0`
    ValueAtZero(u32),
    /// `u(t) → 0` as `t → ∞`; also excludes growing exponential branches.
    DecayAtInfinity,
    /// `D^d u(t) → 0` as `t → ∞`
    DerivativeVanishesAtInfinity(u32),
}

impl BoundaryCondition {
    fn at_infinity(self) -> bool {
        !matches!(self, BoundaryCondition::ValueAtZero(_))
    }
}

/// A real root of the characteristic polynomial (written in `D = d/dt`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharRoot {
    pub root: Rational,
    pub multiplicity: u32,
}

impl CharRoot {
    pub fn new(root: impl Into<Rational>, multiplicity: u32) -> Self {
        CharRoot { root: root.into(), multiplicity }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LinearOpRepr", into = "LinearOpRepr")]
pub struct LinearOp {
    roots: Vec<CharRoot>,
    bcs: Vec<BoundaryCondition>,
    /// Monic characteristic polynomial, `poly[k]` multiplies `D^k`.
    poly: Vec<Rational>,
}

impl LinearOp {
    /// Builds the monic operator `Π (D − r)^m` from its roots.
    ///
    /// Positive roots give growing solutions `e^{rt}`; each one must be
    /// matched by an at-infinity boundary condition that discards it.
    pub fn new(roots: Vec<CharRoot>, bcs: Vec<BoundaryCondition>) -> Result<LinearOp> {
        if roots.iter().any(|r| r.multiplicity == 0) {
            return Err(HamError::InvalidOperator("zero root multiplicity".into()));
        }
        let mut seen: Vec<&Rational> = Vec::new();
        for r in &roots {
            if seen.contains(&&r.root) {
                return Err(HamError::InvalidOperator(format!("root {} listed twice", r.root)));
            }
            seen.push(&r.root);
        }
        let order: u32 = roots.iter().map(|r| r.multiplicity).sum();
        if order == 0 {
            return Err(HamError::InvalidOperator("operator has order zero".into()));
        }
        if bcs.len() != order as usize {
            return Err(HamError::InvalidOperator(format!(
                "operator of order {order} needs {order} boundary conditions, got {}",
                bcs.len()
            )));
        }
        let growing: u32 = roots
            .iter()
            .filter(|r| r.root.cmp0() == Ordering::Greater)
            .map(|r| r.multiplicity)
            .sum();
        let at_inf = bcs.iter().filter(|b| b.at_infinity()).count() as u32;
        if growing > at_inf {
            return Err(HamError::InvalidOperator(format!(
                "{growing} growing branches but only {at_inf} conditions at infinity"
            )));
        }
        let mut poly = vec![Rational::from(1)];
        for r in &roots {
            for _ in 0..r.multiplicity {
                // multiply by (D - root)
                let mut next = vec![Rational::new(); poly.len() + 1];
                for (k, a) in poly.iter().enumerate() {
                    next[k + 1] += a;
                    next[k] -= Rational::from(a * &r.root);
                }
                poly = next;
            }
        }
        let op = LinearOp { roots, bcs, poly };
        op.check_determined()?;
        Ok(op)
    }

    pub fn order(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn roots(&self) -> &[CharRoot] {
        &self.roots
    }

    pub fn bcs(&self) -> &[BoundaryCondition] {
        &self.bcs
    }

    /// Coefficients of `D^k`, `k = 0..=order`.
    pub fn poly(&self) -> &[Rational] {
        &self.poly
    }

    pub fn apply<C: Coeff>(&self, u: &ExpPoly<C>) -> ExpPoly<C> {
        let mut out = ExpPoly::zero();
        let mut d = u.clone();
        for (k, a) in self.poly.iter().enumerate() {
            if k > 0 {
                d = d.diff(1);
            }
            if a.cmp0() != Ordering::Equal {
                out.add_assign(&d.scale_rational(a));
            }
        }
        out
    }

    fn multiplicity_of(&self, root: &Rational) -> u32 {
        self.roots.iter().find(|r| &r.root == root).map_or(0, |r| r.multiplicity)
    }

    /// Decaying or polynomial homogeneous solutions `t^j e^{rt}`, `r ≤ 0`.
    fn homogeneous_basis(&self) -> Vec<Monomial> {
        let mut basis = Vec::new();
        for r in &self.roots {
            if r.root.cmp0() == Ordering::Greater {
                continue;
            }
            let rate = Rate::from_rational(&Rational::from(-&r.root))
                .expect("nonpositive root gives a valid rate");
            for j in 0..r.multiplicity {
                basis.push(Monomial::new(j, rate));
            }
        }
        basis
    }

    fn check_determined(&self) -> Result<()> {
        let basis = self.homogeneous_basis();
        let rows = self.condition_rows(&basis, &ExpPoly::<Rational>::zero());
        let matrix: Vec<Vec<Rational>> = rows.into_iter().map(|(r, _)| r).collect();
        if rank(matrix, basis.len()) != basis.len() {
            return Err(HamError::InvalidOperator(
                "boundary conditions do not determine the homogeneous solution".into(),
            ));
        }
        Ok(())
    }

    /// Linear conditions on the homogeneous coefficients:
    /// `Σ_b row[b] · c_b = rhs` where `rhs` comes from the particular solution.
    fn condition_rows<C: Coeff>(
        &self,
        basis: &[Monomial],
        particular: &ExpPoly<C>,
    ) -> Vec<(Vec<Rational>, C)> {
        let mut rows = Vec::new();
        let basis_polys: Vec<ExpPoly<Rational>> = basis
            .iter()
            .map(|m| ExpPoly::term(Rational::from(1), m.power, m.rate))
            .collect();
        for bc in &self.bcs {
            match *bc {
                BoundaryCondition::ValueAtZero(d) => {
                    let row = basis_polys.iter().map(|b| b.diff(d).value_at_zero()).collect();
                    rows.push((row, particular.diff(d).value_at_zero().negated()));
                }
                BoundaryCondition::DecayAtInfinity => {
                    rows.extend(infinity_rows(&basis_polys, particular, 0));
                }
                BoundaryCondition::DerivativeVanishesAtInfinity(d) => {
                    rows.extend(infinity_rows(&basis_polys, particular, d));
                }
            }
        }
        rows
    }

    /// Particular solution of `L u = f` by undetermined coefficients, with
    /// the ansatz lifted by `t^m` when `−λ` is a root of multiplicity `m`.
    pub fn particular<C: Coeff>(&self, f: &ExpPoly<C>) -> ExpPoly<C> {
        let mut groups: BTreeMap<Rate, BTreeMap<u32, C>> = BTreeMap::new();
        for (m, c) in f.iter() {
            groups.entry(m.rate).or_default().insert(m.power, c.clone());
        }
        let mut out = ExpPoly::zero();
        for (rate, forcing) in groups {
            let shifted = self.shifted_poly(rate);
            let m = self.multiplicity_of(&Rational::from(-rate.to_rational()));
            debug_assert!(shifted[..m as usize].iter().all(|b| b.cmp0() == Ordering::Equal));
            for (power, c) in solve_shifted(&shifted, m, &forcing) {
                out.add_term(Monomial::new(power, rate), c);
            }
        }
        out
    }

    /// Coefficients `b_k` of `P(D − λ)`, so that `L(Q e^{−λt}) = e^{−λt} Σ b_k D^k Q`.
    fn shifted_poly(&self, rate: Rate) -> Vec<Rational> {
        let neg_lam = Rational::from(-rate.to_rational());
        let n = self.poly.len();
        let mut b = vec![Rational::new(); n];
        for (i, a) in self.poly.iter().enumerate() {
            if a.cmp0() == Ordering::Equal {
                continue;
            }
            for (k, bk) in b.iter_mut().enumerate().take(i + 1) {
                let binom = Integer::from(Integer::binomial_u(i as u32, k as u32));
                let pw = Rational::from((&neg_lam).pow((i - k) as u32));
                *bk += Rational::from(a * pw) * binom;
            }
        }
        b
    }

    /// The unique `u` with `L u = f` satisfying all boundary conditions.
    pub fn solve<C: Coeff>(&self, f: &ExpPoly<C>) -> Result<ExpPoly<C>> {
        let particular = self.particular(f);
        self.check_bounded(&particular)?;
        let basis = self.homogeneous_basis();
        let rows = self.condition_rows(&basis, &particular);
        let coeffs = solve_system(rows, basis.len())?;
        let mut u = particular;
        for (m, c) in basis.iter().zip(coeffs) {
            u.add_term(*m, c);
        }
        if C::is_exact() {
            let back = self.apply(&u);
            if &back != f {
                return Err(HamError::InvalidOperator(format!(
                    "inversion check failed: L(u) - f = {}",
                    back.sub(f)
                )));
            }
        }
        Ok(u)
    }

    /// Polynomial growth in the particular solution that no homogeneous
    /// term can cancel makes an at-infinity condition unsatisfiable.
    fn check_bounded<C: Coeff>(&self, particular: &ExpPoly<C>) -> Result<()> {
        let Some(top) = particular.max_power_at(Rate::ZERO) else {
            return Ok(());
        };
        let zero_mult = self.multiplicity_of(&Rational::new());
        for bc in &self.bcs {
            let d = match *bc {
                BoundaryCondition::ValueAtZero(_) => continue,
                BoundaryCondition::DecayAtInfinity => 0,
                BoundaryCondition::DerivativeVanishesAtInfinity(d) => d,
            };
            if top >= d && top >= zero_mult {
                return Err(HamError::UnboundedResult(format!(
                    "particular solution grows like t^{top}, violating a condition at infinity"
                )));
            }
        }
        Ok(())
    }
}

/// Solves `Σ_{k ≥ m} b_k D^k Q = P` for a polynomial `Q` whose lowest `m`
/// coefficients are zero; returns `Q` as `power → coeff`.
fn solve_shifted<C: Coeff>(b: &[Rational], m: u32, forcing: &BTreeMap<u32, C>) -> Vec<(u32, C)> {
    let Some(&deg) = forcing.keys().next_back() else {
        return Vec::new();
    };
    let m = m as usize;
    let top = deg as usize + m;
    let mut q: Vec<C> = vec![C::zero(); top + 1];
    for n in (0..=deg as usize).rev() {
        let mut rhs = forcing.get(&(n as u32)).cloned().unwrap_or_else(C::zero);
        for (k, bk) in b.iter().enumerate().skip(m + 1) {
            let idx = n + k;
            if idx > top || bk.cmp0() == Ordering::Equal || q[idx].is_zero() {
                continue;
            }
            let ff = Rational::from(falling(idx, k)) * bk;
            rhs.sub_assign_ref(&q[idx].scaled(&ff));
        }
        let pivot = Rational::from(falling(n + m, m)) * &b[m];
        rhs.div_rational(&pivot);
        q[n + m] = rhs;
    }
    q.into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(p, c)| (p as u32, c))
        .collect()
}

/// `n! / (n − k)!`
fn falling(n: usize, k: usize) -> Integer {
    let mut out = Integer::from(1);
    for i in 0..k {
        out *= (n - i) as u64;
    }
    out
}

fn infinity_rows<C: Coeff>(
    basis: &[ExpPoly<Rational>],
    particular: &ExpPoly<C>,
    d: u32,
) -> Vec<(Vec<Rational>, C)> {
    let dp = particular.diff(d);
    let db: Vec<ExpPoly<Rational>> = basis.iter().map(|b| b.diff(d)).collect();
    let mut powers: Vec<u32> = Vec::new();
    let mut collect = |p: Option<u32>| {
        if let Some(top) = p {
            for j in 0..=top {
                if !powers.contains(&j) {
                    powers.push(j);
                }
            }
        }
    };
    collect(dp.max_power_at(Rate::ZERO));
    for b in &db {
        collect(b.max_power_at(Rate::ZERO));
    }
    powers.sort_unstable();
    powers
        .into_iter()
        .map(|j| {
            let row = db
                .iter()
                .map(|b| b.coeff(j, Rate::ZERO).cloned().unwrap_or_default())
                .collect();
            let rhs = dp.coeff(j, Rate::ZERO).map_or_else(C::zero, |c| c.negated());
            (row, rhs)
        })
        .collect()
}

fn rank(mut a: Vec<Vec<Rational>>, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c].cmp0() != Ordering::Equal) else {
            continue;
        };
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r && a[i][c].cmp0() != Ordering::Equal {
                let f = Rational::from(&a[i][c] / &a[r][c]);
                for k in c..cols {
                    let sub = Rational::from(&f * &a[r][k]);
                    a[i][k] -= sub;
                }
            }
        }
        r += 1;
    }
    r
}

/// Gauss–Jordan elimination with a rational matrix and a `C`-valued
/// right-hand side. The system must have a unique solution; extra rows must
/// be consistent.
fn solve_system<C: Coeff>(rows: Vec<(Vec<Rational>, C)>, cols: usize) -> Result<Vec<C>> {
    let (mut a, mut rhs): (Vec<Vec<Rational>>, Vec<C>) = rows.into_iter().unzip();
    let mut r = 0;
    let mut pivots = Vec::with_capacity(cols);
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| a[i][c].cmp0() != Ordering::Equal) else {
            return Err(HamError::NoDecayingSolution("singular boundary system".into()));
        };
        a.swap(r, p);
        rhs.swap(r, p);
        let piv = a[r][c].clone();
        for k in c..cols {
            a[r][k] /= &piv;
        }
        rhs[r].div_rational(&piv);
        for i in 0..a.len() {
            if i != r && a[i][c].cmp0() != Ordering::Equal {
                let f = a[i][c].clone();
                for k in c..cols {
                    let sub = Rational::from(&f * &a[r][k]);
                    a[i][k] -= sub;
                }
                let s = rhs[r].scaled(&f);
                rhs[i].sub_assign_ref(&s);
            }
        }
        pivots.push(r);
        r += 1;
    }
    if C::is_exact() {
        if let Some(bad) = rhs[r..].iter().find(|c| !c.is_zero()) {
            return Err(HamError::NoDecayingSolution(format!(
                "inconsistent boundary conditions (residual {bad})"
            )));
        }
    }
    Ok(pivots.into_iter().map(|i| rhs[i].clone()).collect())
}

#[derive(Serialize, Deserialize)]
struct RootRepr {
    root: String,
    multiplicity: u32,
}

#[derive(Serialize, Deserialize)]
struct LinearOpRepr {
    char_roots: Vec<RootRepr>,
    bcs: Vec<BoundaryCondition>,
}

impl TryFrom<LinearOpRepr> for LinearOp {
    type Error = HamError;
    fn try_from(r: LinearOpRepr) -> Result<Self> {
        let roots = r
            .char_roots
            .into_iter()
            .map(|x| Ok(CharRoot { root: parse_rational(&x.root)?, multiplicity: x.multiplicity }))
            .collect::<Result<Vec<_>>>()?;
        LinearOp::new(roots, r.bcs)
    }
}

impl From<LinearOp> for LinearOpRepr {
    fn from(op: LinearOp) -> Self {
        LinearOpRepr {
            char_roots: op
                .roots
                .iter()
                .map(|r| RootRepr {
                    root: format!("{}/{}", r.root.numer(), r.root.denom()),
                    multiplicity: r.multiplicity,
                })
                .collect(),
            bcs: op.bcs,
        }
    }
}
