//! Exact algebra over exponential polynomials
//! `f(t) = Σ c · t^j · e^(−λt)` with `λ ≥ 0` rational.
//!
//! Every term of every homotopy series handled by this crate lives in this
//! class: it is closed under addition, multiplication and differentiation,
//! and the constant-coefficient operators in [`crate::operators`] can be
//! inverted on it in closed form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coeff::{Coeff, MpFloat, Numeric};
use crate::error::{HamError, Result};

/// A nonnegative rational decay rate `λ` in `e^(−λt)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rate {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rate {
    pub const ZERO: Rate = Rate { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Rate {
        assert!(den != 0, "zero denominator in decay rate");
        let g = gcd(num, den).max(1);
        Rate { num: num / g, den: den / g }
    }

    pub fn integer(n: u64) -> Rate {
        Rate { num: n, den: 1 }
    }

    pub fn from_rational(r: &Rational) -> Result<Rate> {
        if r.cmp0() == Ordering::Less {
            return Err(HamError::GrowingExponential(r.to_string()));
        }
        let num = r.numer().to_u64().ok_or(HamError::RateOverflow)?;
        let den = r.denom().to_u64().ok_or(HamError::RateOverflow)?;
        Ok(Rate { num, den })
    }

    pub fn to_rational(self) -> Rational {
        Rational::from((self.num, self.den))
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn checked_add(self, rhs: Rate) -> Result<Rate> {
        if self.den == rhs.den {
            let num = self.num.checked_add(rhs.num).ok_or(HamError::RateOverflow)?;
            return Ok(Rate::new(num, self.den));
        }
        let num = (self.num as u128) * (rhs.den as u128) + (rhs.num as u128) * (self.den as u128);
        let den = (self.den as u128) * (rhs.den as u128);
        let g = {
            let (mut a, mut b) = (num, den);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a.max(1)
        };
        let (num, den) = (num / g, den / g);
        Ok(Rate {
            num: u64::try_from(num).map_err(|_| HamError::RateOverflow)?,
            den: u64::try_from(den).map_err(|_| HamError::RateOverflow)?,
        })
    }

    fn add(self, rhs: Rate) -> Rate {
        self.checked_add(rhs).expect("decay rate overflow")
    }

    pub fn to_float(self, prec: u32) -> Float {
        Float::with_val(prec, self.num) / self.den
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        ((self.num as u128) * (other.den as u128)).cmp(&((other.num as u128) * (self.den as u128)))
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Basis function `t^power · e^(−rate·t)`. Ordered by `(rate, power)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub rate: Rate,
    pub power: u32,
}

impl Monomial {
    pub fn new(power: u32, rate: Rate) -> Self {
        Monomial { rate, power }
    }
}

/// Finite sum of `c · t^j · e^(−λt)` terms in canonical form: no two terms
/// share a `(λ, j)` pair and no stored coefficient is zero.
#[derive(Clone, PartialEq)]
pub struct ExpPoly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coeff> Default for ExpPoly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> ExpPoly<C> {
    pub fn zero() -> Self {
        ExpPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::term(c, 0, Rate::ZERO)
    }

    pub fn term(c: C, power: u32, rate: Rate) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::new(power, rate), c);
        p
    }

    /// Builds from `(coeff, power, rate)` triples, merging like terms.
    pub fn from_terms<I: IntoIterator<Item = (C, u32, Rate)>>(items: I) -> Self {
        let mut p = Self::zero();
        for (c, power, rate) in items {
            p.add_term(Monomial::new(power, rate), c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, power: u32, rate: Rate) -> Option<&C> {
        self.terms.get(&Monomial::new(power, rate))
    }

    /// Largest power of `t` multiplying `e^(−rate·t)`, if any such term exists.
    pub fn max_power_at(&self, rate: Rate) -> Option<u32> {
        self.terms
            .range(Monomial::new(0, rate)..=Monomial::new(u32::MAX, rate))
            .next_back()
            .map(|(m, _)| m.power)
    }

    pub fn rates(&self) -> Vec<Rate> {
        let mut out: Vec<Rate> = Vec::new();
        for m in self.terms.keys() {
            if out.last() != Some(&m.rate) {
                out.push(m.rate);
            }
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(&c);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn add_term_ref(&mut self, m: Monomial, c: &C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(c);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        for (m, c) in &rhs.terms {
            self.add_term_ref(*m, c);
        }
    }

    pub fn sub_assign(&mut self, rhs: &Self) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.negated());
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }

    pub fn neg(&self) -> Self {
        ExpPoly { terms: self.terms.iter().map(|(m, c)| (*m, c.negated())).collect() }
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, c.mul_ref(k));
        }
        out
    }

    pub fn scale_rational(&self, k: &Rational) -> Self {
        if k.cmp0() == Ordering::Equal {
            return Self::zero();
        }
        ExpPoly { terms: self.terms.iter().map(|(m, c)| (*m, c.scaled(k))).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        out.add_product(rhs, self);
        out
    }

    /// `self += a · b` without materializing the product.
    pub fn add_product(&mut self, a: &Self, b: &Self) {
        let mut acc: BTreeMap<Monomial, C> = std::mem::take(&mut self.terms);
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let m = Monomial::new(ma.power + mb.power, ma.rate.add(mb.rate));
                acc.entry(m).or_insert_with(C::zero).add_mul(ca, cb);
            }
        }
        acc.retain(|_, c| !c.is_zero());
        self.terms = acc;
    }

    /// Exact derivative of the given order.
    pub fn diff(&self, order: u32) -> Self {
        let mut cur = self.clone();
        for _ in 0..order {
            cur = cur.diff1();
        }
        cur
    }

    fn diff1(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if !m.rate.is_zero() {
                out.add_term(*m, c.scaled(&-m.rate.to_rational()));
            }
            if m.power > 0 {
                out.add_term(
                    Monomial::new(m.power - 1, m.rate),
                    c.scaled(&Rational::from(m.power)),
                );
            }
        }
        out
    }

    /// Re-merges terms and drops zeros. Values produced by this module are
    /// always canonical already, so this is the identity on them.
    pub fn normalize(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term_ref(*m, c);
        }
        out
    }

    /// `∫₀^∞ f(t) dt`, termwise via `∫ t^j e^(−λt) dt = j!/λ^(j+1)`.
    pub fn integral_halfline(&self) -> Result<C> {
        let mut total = C::zero();
        for (m, c) in &self.terms {
            if m.rate.is_zero() {
                return Err(HamError::DivergentIntegral { power: m.power });
            }
            total.add_assign_ref(&c.scaled(&halfline_moment(m.power, m.rate)));
        }
        Ok(total)
    }

    /// Value at `t = 0`.
    pub fn value_at_zero(&self) -> C {
        let mut total = C::zero();
        for (m, c) in &self.terms {
            if m.power == 0 {
                total.add_assign_ref(c);
            }
        }
        total
    }

    /// Substitutes `t = k·s`, returning the function of `s`.
    pub fn rescale_argument(&self, k: &Rational) -> Result<Self> {
        if k.cmp0() != Ordering::Greater {
            return Err(HamError::Parse(format!("argument scale must be positive, got {k}")));
        }
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let rate = Rate::from_rational(&(m.rate.to_rational() * k))?;
            let factor = Rational::from(k.pow(m.power));
            out.add_term(Monomial::new(m.power, rate), c.scaled(&factor));
        }
        Ok(out)
    }

    /// Applies `f` to every coefficient, re-canonicalizing the result.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> ExpPoly<D> {
        let mut out = ExpPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, f(c));
        }
        out
    }
}

/// `j! / λ^(j+1)` for `λ > 0`.
fn halfline_moment(power: u32, rate: Rate) -> Rational {
    let fact = Integer::from(Integer::factorial(power));
    let lam = rate.to_rational();
    Rational::from(fact) / Rational::from(lam.pow(power + 1))
}

/// Integration domain for norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    HalfLine,
    /// `[0, T]`
    Finite(f64),
}

impl<C: Numeric> ExpPoly<C> {
    pub fn to_mp(&self, prec: u32) -> ExpPoly<MpFloat> {
        self.map_coeffs(|c| MpFloat(c.to_float(prec)))
    }

    /// Evaluates at `t` with `prec` bits.
    pub fn eval_mp(&self, t: &Float, prec: u32) -> Float {
        let mut total = Float::new(prec);
        let mut cur_rate: Option<Rate> = None;
        let mut exp_factor = Float::with_val(prec, 1);
        for (m, c) in &self.terms {
            if cur_rate != Some(m.rate) {
                cur_rate = Some(m.rate);
                let arg = Float::with_val(prec, -(m.rate.to_float(prec) * t));
                exp_factor = arg.exp();
            }
            let tp = Float::with_val(prec, t.pow(m.power));
            total += c.to_float(prec) * tp * &exp_factor;
        }
        total
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_mp(&Float::with_val(128, t), 128).to_f64()
    }

    /// `∫₀^T f(t) dt` in `prec`-bit arithmetic.
    pub fn integral_window(&self, upper: &Float, prec: u32) -> Float {
        let mut total = Float::new(prec);
        for (m, c) in &self.terms {
            total += c.to_float(prec) * window_moment(m.power, m.rate, upper, prec);
        }
        total
    }

    /// `∫ f` over the window, as a float.
    pub fn integral(&self, window: Window, prec: u32) -> Result<Float> {
        match window {
            Window::HalfLine => {
                let mut total = Float::new(prec);
                for (m, c) in &self.terms {
                    if m.rate.is_zero() {
                        return Err(HamError::DivergentIntegral { power: m.power });
                    }
                    total += c.to_float(prec) * halfline_moment(m.power, m.rate);
                }
                Ok(total)
            }
            Window::Finite(t) => Ok(self.integral_window(&Float::with_val(prec, t), prec)),
        }
    }

    /// Squared L² norm `∫ f²` over the window, computed in `prec` bits.
    pub fn l2_norm_sq(&self, window: Window, prec: u32) -> Result<Float> {
        let f = self.to_mp(prec);
        f.mul(&f).integral(window, prec)
    }

    /// L² norm over `[0, ∞)` (default) or `[0, T]`.
    pub fn l2_norm(&self, window: Window, prec: u32) -> Result<Float> {
        let sq = self.l2_norm_sq(window, prec)?;
        Ok(if sq.is_sign_negative() { Float::new(prec) } else { sq.sqrt() })
    }
}

/// `∫₀^T t^j e^(−λt) dt`.
///
/// For `λT ≤ j+1` a positive series of the lower incomplete gamma function is
/// summed; otherwise `j!/λ^(j+1)·(1 − e^(−λT) Σ_{i≤j} (λT)^i/i!)`, where the
/// bracket is at least one half and so free of cancellation.
pub fn window_moment(power: u32, rate: Rate, upper: &Float, prec: u32) -> Float {
    let wp = prec + 32;
    let big_t = Float::with_val(wp, upper);
    if rate.is_zero() {
        return Float::with_val(prec, big_t.pow(power + 1) / (power + 1));
    }
    let lam = rate.to_float(wp);
    let x = Float::with_val(wp, &lam * &big_t);
    let s = power + 1;
    if x <= s {
        // T^s e^{-x} Σ_i x^i / (s (s+1) ... (s+i))
        let mut term = Float::with_val(wp, 1) / s;
        let mut sum = term.clone();
        let eps = Float::with_val(wp, Float::i_exp(1, -(wp as i32)));
        let mut i = 1u32;
        loop {
            term *= &x;
            term /= s + i;
            sum += &term;
            if term < Float::with_val(wp, &sum * &eps) {
                break;
            }
            i += 1;
        }
        let out = Float::with_val(wp, big_t.pow(s)) * Float::with_val(wp, -&x).exp() * sum;
        Float::with_val(prec, out)
    } else {
        let mut partial = Float::with_val(wp, 1);
        let mut term = Float::with_val(wp, 1);
        for i in 1..=power {
            term *= &x;
            term /= i;
            partial += &term;
        }
        let q = Float::with_val(wp, -&x).exp() * partial;
        let fact = Float::with_val(wp, Integer::from(Integer::factorial(power)));
        let out = fact / Float::with_val(wp, lam.pow(s)) * (Float::with_val(wp, 1) - q);
        Float::with_val(prec, out)
    }
}

impl<C: Coeff> fmt::Debug for ExpPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<C: Coeff> fmt::Display for ExpPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            match m.power {
                0 => {}
                1 => write!(f, "·t")?,
                p => write!(f, "·t^{p}")?,
            }
            if !m.rate.is_zero() {
                write!(f, "·e^(-{}t)", m.rate)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    coeff: String,
    power: u32,
    rate: String,
}

fn fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"1.30405"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = body[i + 1..].parse().map_err(|_| HamError::Parse(s.to_string()))?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(HamError::Parse(s.to_string()));
    }
    let n = Integer::from_str(&digits).map_err(|_| HamError::Parse(s.to_string()))?;
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    let mut r = Rational::from(n);
    if scale >= 0 {
        r *= Rational::from(ten.pow(scale));
    } else {
        r /= Rational::from(ten.pow(-scale));
    }
    Ok(if neg { -r } else { r })
}

impl Serialize for ExpPoly<Rational> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<JsonTerm> = self
            .terms
            .iter()
            .map(|(m, c)| JsonTerm {
                coeff: fraction_string(c),
                power: m.power,
                rate: format!("{}/{}", m.rate.numer(), m.rate.denom()),
            })
            .collect();
        items.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExpPoly<Rational> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<JsonTerm>::deserialize(deserializer)?;
        let mut out = ExpPoly::zero();
        for it in items {
            let c = parse_rational(&it.coeff).map_err(serde::de::Error::custom)?;
            let r = parse_rational(&it.rate).map_err(serde::de::Error::custom)?;
            let rate = Rate::from_rational(&r).map_err(serde::de::Error::custom)?;
            out.add_term(Monomial::new(it.power, rate), c);
        }
        Ok(out)
    }
}
