//! Independent oracle: fields `u(x, y, z, t)` as exact sums of
//! `t^j e^{−λt} · x^a y^b z^c · e^{−kx} · Π cos^n(v) sin^s(v)`, with the
//! full governing equations of every example, and a brute-force expansion
//! of the homotopy in powers of `p`.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ham_core::{ExpPoly, HomotopySeries, SymbolicH};
use rug::Rational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Key {
    t: u32,
    lam: Rational,
    pow: [u32; 3],
    ex: u32,
    cos: [i32; 3],
    sin: [bool; 3],
}

impl Key {
    fn one() -> Key {
        Key { t: 0, lam: Rational::new(), pow: [0; 3], ex: 0, cos: [0; 3], sin: [false; 3] }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Field(BTreeMap<Key, Rational>);

impl Field {
    pub fn zero() -> Field {
        Field::default()
    }

    pub fn constant(c: impl Into<Rational>) -> Field {
        let mut f = Field::zero();
        f.push(Key::one(), c.into());
        f
    }

    /// The coordinate `x`, `y` or `z` (index 0, 1, 2).
    pub fn coord(i: usize) -> Field {
        let mut k = Key::one();
        k.pow[i] = 1;
        Field::from_key(k)
    }

    pub fn cos(i: usize) -> Field {
        let mut k = Key::one();
        k.cos[i] = 1;
        Field::from_key(k)
    }

    pub fn sec(i: usize) -> Field {
        let mut k = Key::one();
        k.cos[i] = -1;
        Field::from_key(k)
    }

    pub fn exp_neg_x() -> Field {
        let mut k = Key::one();
        k.ex = 1;
        Field::from_key(k)
    }

    /// `t^j e^{−λt}`
    pub fn time(j: u32, lam: impl Into<Rational>) -> Field {
        let mut k = Key::one();
        k.t = j;
        k.lam = lam.into();
        Field::from_key(k)
    }

    fn from_key(k: Key) -> Field {
        let mut f = Field::zero();
        f.push(k, Rational::from(1));
        f
    }

    fn push(&mut self, k: Key, c: Rational) {
        if c == 0 {
            return;
        }
        let e = self.0.entry(k.clone()).or_default();
        *e += c;
        if *e == 0 {
            self.0.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, o: &Field) -> Field {
        let mut f = self.clone();
        for (k, c) in &o.0 {
            f.push(k.clone(), c.clone());
        }
        f
    }

    pub fn sub(&self, o: &Field) -> Field {
        self.add(&o.scale(&Rational::from(-1)))
    }

    pub fn scale(&self, s: &Rational) -> Field {
        let mut f = Field::zero();
        for (k, c) in &self.0 {
            f.push(k.clone(), Rational::from(c * s));
        }
        f
    }

    pub fn mul(&self, o: &Field) -> Field {
        let mut f = Field::zero();
        for (ka, ca) in &self.0 {
            for (kb, cb) in &o.0 {
                let c = Rational::from(ca * cb);
                let mut k = Key {
                    t: ka.t + kb.t,
                    lam: Rational::from(&ka.lam + &kb.lam),
                    pow: [0; 3],
                    ex: ka.ex + kb.ex,
                    cos: [0; 3],
                    sin: [false; 3],
                };
                for i in 0..3 {
                    k.pow[i] = ka.pow[i] + kb.pow[i];
                    k.cos[i] = ka.cos[i] + kb.cos[i];
                    k.sin[i] = ka.sin[i] ^ kb.sin[i];
                }
                // sin² = 1 − cos², applied per variable
                let mut parts = vec![(k, c)];
                for i in 0..3 {
                    if ka.sin[i] && kb.sin[i] {
                        parts = parts
                            .into_iter()
                            .flat_map(|(k, c)| {
                                let mut k2 = k.clone();
                                k2.cos[i] += 2;
                                let neg = Rational::from(-&c);
                                [(k, c), (k2, neg)]
                            })
                            .collect();
                    }
                }
                for (k, c) in parts {
                    f.push(k, c);
                }
            }
        }
        f
    }

    pub fn dt(&self) -> Field {
        let mut f = Field::zero();
        for (k, c) in &self.0 {
            if k.t > 0 {
                let mut k2 = k.clone();
                k2.t -= 1;
                f.push(k2, Rational::from(c * k.t));
            }
            f.push(k.clone(), -Rational::from(c * &k.lam));
        }
        f
    }

    pub fn dt_n(&self, n: u32) -> Field {
        (0..n).fold(self.clone(), |f, _| f.dt())
    }

    /// Partial derivative in `x`, `y` or `z`.
    pub fn dv(&self, i: usize) -> Field {
        let mut f = Field::zero();
        for (k, c) in &self.0 {
            if k.pow[i] > 0 {
                let mut k2 = k.clone();
                k2.pow[i] -= 1;
                f.push(k2, Rational::from(c * k.pow[i]));
            }
            if i == 0 && k.ex > 0 {
                f.push(k.clone(), -Rational::from(c * k.ex));
            }
            let n = k.cos[i];
            if k.sin[i] {
                // (cos^n sin)' = −n cos^{n−1} + (n+1) cos^{n+1}
                let mut lo = k.clone();
                lo.sin[i] = false;
                lo.cos[i] = n - 1;
                let mut hi = lo.clone();
                hi.cos[i] = n + 1;
                f.push(lo, Rational::from(c * -n));
                f.push(hi, Rational::from(c * (n + 1)));
            } else if n != 0 {
                let mut k2 = k.clone();
                k2.cos[i] = n - 1;
                k2.sin[i] = true;
                f.push(k2, Rational::from(c * -n));
            }
        }
        f
    }

    pub fn dv_n(&self, i: usize, n: u32) -> Field {
        (0..n).fold(self.clone(), |f, _| f.dv(i))
    }

    /// Restriction to `t = 0`.
    pub fn at_t0(&self) -> Field {
        let mut f = Field::zero();
        for (k, c) in &self.0 {
            if k.t == 0 {
                let mut k2 = k.clone();
                k2.lam = Rational::new();
                f.push(k2, c.clone());
            }
        }
        f
    }

    /// Terms that do not decay as `t → ∞`.
    pub fn far_field(&self) -> Field {
        let mut f = Field::zero();
        for (k, c) in &self.0 {
            if k.lam == 0 {
                f.push(k.clone(), c.clone());
            }
        }
        f
    }
}

/// Lifts a temporal coefficient to a field through a spatial factor.
pub fn lift(c: &ExpPoly<Rational>, spatial: &Field) -> Field {
    let mut f = Field::zero();
    for (m, v) in c.iter() {
        f = f.add(&Field::time(m.power, m.rate.to_rational()).scale(v));
    }
    f.mul(spatial)
}

/// Truncated power series in `p` with field coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PSeries(pub Vec<Field>);

impl PSeries {
    pub fn constant(f: Field, deg: usize) -> PSeries {
        let mut v = vec![Field::zero(); deg + 1];
        v[0] = f;
        PSeries(v)
    }

    pub fn deg(&self) -> usize {
        self.0.len() - 1
    }

    fn map(&self, g: impl Fn(&Field) -> Field) -> PSeries {
        PSeries(self.0.iter().map(g).collect())
    }

    pub fn add(&self, o: &PSeries) -> PSeries {
        PSeries(self.0.iter().zip(&o.0).map(|(a, b)| a.add(b)).collect())
    }

    pub fn sub(&self, o: &PSeries) -> PSeries {
        PSeries(self.0.iter().zip(&o.0).map(|(a, b)| a.sub(b)).collect())
    }

    pub fn scale(&self, s: &Rational) -> PSeries {
        self.map(|f| f.scale(s))
    }

    /// Multiplication by a `p`-independent field.
    pub fn mul_field(&self, g: &Field) -> PSeries {
        self.map(|f| f.mul(g))
    }

    pub fn mul(&self, o: &PSeries) -> PSeries {
        let n = self.0.len();
        let mut out = vec![Field::zero(); n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] = out[i + j].add(&self.0[i].mul(&o.0[j]));
            }
        }
        PSeries(out)
    }

    /// Multiplication by `p`, dropping the overflow.
    pub fn shift(&self) -> PSeries {
        let mut v = vec![Field::zero()];
        v.extend(self.0[..self.deg()].iter().cloned());
        PSeries(v)
    }

    pub fn dt(&self, n: u32) -> PSeries {
        self.map(|f| f.dt_n(n))
    }

    pub fn dv(&self, i: usize, n: u32) -> PSeries {
        self.map(|f| f.dv_n(i, n))
    }
}

/// The governing equation `N`, its auxiliary operator `L` and the spatial
/// factor of the separated ansatz, written for the unreduced problems.
pub struct Model {
    pub id: &'static str,
    pub spatial: Field,
    pub n: fn(&PSeries) -> PSeries,
    pub l: fn(&PSeries) -> PSeries,
    /// Homogeneous conditions for `u_k`, `k ≥ 1`.
    pub homogeneous: fn(&Field) -> bool,
}

fn one(deg: usize) -> PSeries {
    PSeries::constant(Field::constant(1), deg)
}

fn beam_profile() -> Field {
    let mut s = Field::zero();
    for i in 0..3 {
        s = s.add(&Field::coord(i)).sub(&Field::cos(i));
    }
    s
}

pub fn model(id: &str) -> Model {
    match id {
        "ex1" => Model {
            id: "ex1",
            spatial: Field::constant(1),
            n: |u| u.dt(1).add(&u.mul(u)).sub(&one(u.deg())),
            l: |u| u.dt(1).add(&u.scale(&Rational::from(2))),
            homogeneous: |u| u.at_t0().is_zero(),
        },
        "ex2" => Model {
            id: "ex2",
            spatial: Field::constant(1),
            n: |u| u.dt(2).scale(&Rational::from(2)).add(u).sub(&u.mul(u)),
            l: |u| u.dt(2).sub(u),
            homogeneous: |u| u.at_t0().is_zero() && u.far_field().is_zero(),
        },
        // Burgers: u_t + u u_x − u_xx
        "ex3" => Model {
            id: "ex3",
            spatial: Field::coord(0),
            n: |u| u.dt(1).add(&u.mul(&u.dv(0, 1))).sub(&u.dv(0, 2)),
            l: |u| u.dt(1),
            homogeneous: |u| u.at_t0().is_zero(),
        },
        // beam: u_tt + Σ ((sum of the other two coords)/(2 cos v) − 1) ∂_v⁴ u
        "ex4" => Model {
            id: "ex4",
            spatial: beam_profile(),
            n: |u| {
                let mut out = u.dt(2);
                for i in 0..3 {
                    let others = Field::coord((i + 1) % 3).add(&Field::coord((i + 2) % 3));
                    let coef = others
                        .mul(&Field::sec(i))
                        .scale(&Rational::from((1, 2)))
                        .sub(&Field::constant(1));
                    out = out.add(&u.dv(i, 4).mul_field(&coef));
                }
                out
            },
            l: |u| u.dt(2),
            homogeneous: |u| u.at_t0().is_zero() && u.dt().at_t0().is_zero(),
        },
        // u_t + u_x − 2 u_xxt
        "ex5" => Model {
            id: "ex5",
            spatial: Field::exp_neg_x(),
            n: |u| u.dt(1).add(&u.dv(0, 1)).sub(&u.dv(0, 2).dt(1).scale(&Rational::from(2))),
            l: |u| u.dt(1),
            homogeneous: |u| u.at_t0().is_zero(),
        },
        // Blasius y''' + y y''/2 under y = u/4, η = t/4: (u''' + u u''/32)·4²
        "ex6" => Model {
            id: "ex6",
            spatial: Field::constant(1),
            n: |u| u.dt(3).add(&u.mul(&u.dt(2)).scale(&Rational::from((1, 32)))),
            l: |u| u.dt(3).add(&u.dt(2)),
            homogeneous: |u| {
                u.at_t0().is_zero() && u.dt().at_t0().is_zero() && u.dt().far_field().is_zero()
            },
        },
        other => panic!("no model for {other}"),
    }
}

/// Coefficients of `p^0 … p^M` of `(1−p)[L(U) − L(u₀)] + p·h·N(U)` with
/// `U = Σ u_k p^k` built from the engine's terms.
pub fn homotopy_defect(series: &HomotopySeries<Rational>) -> Vec<Field> {
    defect_of(&series.problem().name, series.h(), series.terms())
}

pub fn defect_of(id: &str, h: &Rational, terms: &[ExpPoly<Rational>]) -> Vec<Field> {
    let model = model(id);
    let u = PSeries(terms.iter().map(|c| lift(c, &model.spatial)).collect());
    let u0 = PSeries::constant(u.0[0].clone(), u.deg());
    let lu = (model.l)(&u).sub(&(model.l)(&u0));
    let hn = (model.n)(&u).scale(h).shift();
    lu.sub(&lu.shift()).add(&hn).0
}

/// `u_n = (−1)^n · 4 h t (h − 1 + 2ht)^{n−1}` for `n ≥ 1` (times `x`), as a
/// map `(power of h, power of t) → coefficient`.
pub fn burgers_term(n: usize) -> BTreeMap<(usize, u32), Rational> {
    type Poly = BTreeMap<(usize, u32), Rational>;
    fn mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::new();
        for ((ha, ta), ca) in a {
            for ((hb, tb), cb) in b {
                *out.entry((ha + hb, ta + tb)).or_default() += Rational::from(ca * cb);
            }
        }
        out.retain(|_, c| *c != 0);
        out
    }
    let mut out = Poly::new();
    if n == 0 {
        out.insert((0, 0), Rational::from(2));
        return out;
    }
    let sign = if n % 2 == 0 { 4 } else { -4 };
    out.insert((1, 1), Rational::from(sign));
    let base: Poly = [((1, 0), Rational::from(1)), ((0, 0), Rational::from(-1)), ((1, 1), Rational::from(2))]
        .into_iter()
        .collect();
    for _ in 1..n {
        out = mul(&out, &base);
    }
    out
}

/// Same layout as [`burgers_term`] for an engine term in symbolic `h`.
pub fn symbolic_layout(c: &ExpPoly<SymbolicH>) -> BTreeMap<(usize, u32), Rational> {
    let mut out = BTreeMap::new();
    for (m, v) in c.iter() {
        assert!(m.rate.is_zero(), "Burgers terms are polynomial in t");
        for (i, a) in v.coeffs().iter().enumerate() {
            if *a != 0 {
                out.insert((i, m.power), a.clone());
            }
        }
    }
    out
}

/// Composite Simpson rule, used as a quadrature oracle.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
