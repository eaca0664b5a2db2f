//! Reference solutions: closed forms evaluated in MPFR, and shooting
//! solutions for the two boundary-value problems on the half-line.

use rug::Float;

use crate::error::{HamError, Result};
use crate::problem::SpatialFactor;
use crate::problems::ReferenceKind;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub fn t(t: f64) -> Self {
        Point { t, ..Default::default() }
    }
}

/// A reference for the temporal coefficient `c(t)`; the full solution is
/// `spatial(x, y, z) · c(t)`.
#[derive(Clone, Debug)]
pub enum Reference {
    /// `tanh t`
    Tanh,
    /// `(3 tanh²(t/(2√2) + artanh(1/√3)) − 1)/2`
    MixedConvection,
    /// `2/(1 + 2t)`
    Burgers,
    /// `e^{−t}`
    Decay,
    Numeric(ShootingSolution),
}

impl Reference {
    pub fn kind(&self) -> ReferenceKind {
        match self {
            Reference::Numeric(_) => ReferenceKind::Shooting,
            _ => ReferenceKind::ClosedForm,
        }
    }

    /// Guaranteed absolute error; `None` for closed forms.
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            Reference::Numeric(s) => Some(s.accuracy),
            _ => None,
        }
    }

    pub fn eval_mp(&self, t: &Float, prec: u32) -> Float {
        let one = Float::with_val(prec, 1);
        match self {
            Reference::Tanh => Float::with_val(prec, t.tanh_ref()),
            Reference::MixedConvection => {
                let three = Float::with_val(prec, 3);
                let a = Float::with_val(prec, three.clone().sqrt().recip_ref()).atanh();
                let scale = Float::with_val(prec, 8).sqrt();
                let arg = Float::with_val(prec, t / scale) + a;
                let th = arg.tanh();
                (three * th.square() - one) / 2u32
            }
            Reference::Burgers => Float::with_val(prec, 2) / (one + Float::with_val(prec, t * 2u32)),
            Reference::Decay => Float::with_val(prec, -t).exp(),
            Reference::Numeric(s) => Float::with_val(prec, s.eval(t.to_f64())),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Reference::Numeric(s) => s.eval(t),
            _ => self.eval_mp(&Float::with_val(128, t), 128).to_f64(),
        }
    }
}

/// Closed-form temporal reference for a built-in problem.
pub fn closed_form(id: &str) -> Result<Reference> {
    match id {
        "ex1" => Ok(Reference::Tanh),
        "ex2" => Ok(Reference::MixedConvection),
        "ex3" => Ok(Reference::Burgers),
        "ex4" | "ex5" => Ok(Reference::Decay),
        "ex6" => Err(HamError::NoClosedForm(id.into())),
        other => Err(HamError::UnknownProblem(other.into())),
    }
}

/// The best available reference: closed form where known, else shooting.
pub fn reference(id: &str, accuracy: f64) -> Result<Reference> {
    match closed_form(id) {
        Err(HamError::NoClosedForm(_)) => Ok(Reference::Numeric(shoot(id, accuracy)?)),
        r => r,
    }
}

/// Exact solution value at a point, spatial factor included.
pub fn exact(id: &str, p: Point) -> Result<f64> {
    let c = closed_form(id)?.eval(p.t);
    let s = match id {
        "ex3" => SpatialFactor::X,
        "ex4" => SpatialFactor::BeamProfile,
        "ex5" => SpatialFactor::ExpNegX,
        _ => SpatialFactor::None,
    };
    Ok(s.eval(p.x, p.y, p.z) * c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum System {
    /// `2u'' + u − u² = 0`, state `(u, u')`, shooting on `u'(0)`.
    MixedConvection,
    /// `y''' + y y''/2 = 0`, state `(y, y', y'')`, shooting on `y''(0)`.
    Blasius,
}

impl System {
    fn rhs(self, s: &[f64; 3]) -> [f64; 3] {
        match self {
            System::MixedConvection => [s[1], (s[0] * s[0] - s[0]) / 2.0, 0.0],
            System::Blasius => [s[1], s[2], -s[0] * s[2] / 2.0],
        }
    }

    fn initial(self, param: f64) -> [f64; 3] {
        match self {
            System::MixedConvection => [0.0, param, 0.0],
            System::Blasius => [0.0, 0.0, param],
        }
    }

    /// +1 when `param` is too large, −1 when too small, 0 if undecided.
    fn classify(self, s: &[f64; 3]) -> i32 {
        match self {
            System::MixedConvection => {
                if s[0] > 1.5 || (s[0] > 1.0 && s[1] > 0.0) {
                    1
                } else if s[0] < -0.5 || (s[0] < 1.0 && s[1] < 0.0) {
                    -1
                } else {
                    0
                }
            }
            System::Blasius => {
                if s[1] > 1.0 + 1e-3 {
                    1
                } else if s[2] < 0.0 || s[1] < -1.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    /// Sign of the unstable far-field component at the end of integration.
    fn far_sign(self, s: &[f64; 3]) -> i32 {
        let v = match self {
            System::MixedConvection => s[1] + (s[0] - 1.0) / std::f64::consts::SQRT_2,
            System::Blasius => s[1] - 1.0,
        };
        if v > 0.0 {
            1
        } else {
            -1
        }
    }

    fn bracket(self) -> (f64, f64) {
        match self {
            System::MixedConvection => (0.05, 2.0),
            System::Blasius => (0.05, 2.0),
        }
    }

    fn horizon(self) -> f64 {
        match self {
            System::MixedConvection => 30.0,
            System::Blasius => 12.0,
        }
    }
}

fn rk4_step(sys: System, s: &[f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], b: &[f64; 3], k: f64| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
    let k1 = sys.rhs(s);
    let k2 = sys.rhs(&add(s, &k1, dt / 2.0));
    let k3 = sys.rhs(&add(s, &k2, dt / 2.0));
    let k4 = sys.rhs(&add(s, &k3, dt));
    let mut out = *s;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates to the horizon, stopping early once the trajectory is classified.
fn fire(sys: System, param: f64, dt: f64) -> i32 {
    let steps = (sys.horizon() / dt).round() as usize;
    let mut s = sys.initial(param);
    for _ in 0..steps {
        s = rk4_step(sys, &s, dt);
        let c = sys.classify(&s);
        if c != 0 {
            return c;
        }
    }
    sys.far_sign(&s)
}

/// Numeric BVP solution on a uniform grid with a far-field continuation.
#[derive(Clone, Debug)]
pub struct ShootingSolution {
    system_blasius: bool,
    /// The shooting parameter: `u'(0)` for ex2, `y''(0)` for ex6.
    pub param: f64,
    pub accuracy: f64,
    pub step: f64,
    values: Vec<[f64; 3]>,
}

impl ShootingSolution {
    fn system(&self) -> System {
        if self.system_blasius {
            System::Blasius
        } else {
            System::MixedConvection
        }
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Value of the solution (cubic Hermite between grid points).
    pub fn eval(&self, t: f64) -> f64 {
        let tm = self.horizon();
        let last = self.values.last().unwrap();
        if t >= tm {
            return match self.system() {
                System::MixedConvection => {
                    1.0 - (1.0 - last[0]) * (-(t - tm) / std::f64::consts::SQRT_2).exp()
                }
                System::Blasius => last[0] + (t - tm) * last[1],
            };
        }
        let pos = (t.max(0.0) / self.step).floor() as usize;
        let pos = pos.min(self.values.len() - 2);
        let (a, b) = (&self.values[pos], &self.values[pos + 1]);
        let s = t / self.step - pos as f64;
        let h = self.step;
        let (s2, s3) = (s * s, s * s * s);
        a[0] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + a[1] * h * (s3 - 2.0 * s2 + s)
            + b[0] * (-2.0 * s3 + 3.0 * s2)
            + b[1] * h * (s3 - s2)
    }

    /// First derivative, by the same interpolant.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        let d = 1e-5;
        (self.eval(t + d) - self.eval((t - d).max(0.0))) / (t + d - (t - d).max(0.0))
    }
}

fn solve_once(sys: System, dt: f64) -> Result<(f64, Vec<[f64; 3]>)> {
    let (mut lo, mut hi) = sys.bracket();
    if fire(sys, lo, dt) != -1 || fire(sys, hi, dt) != 1 {
        return Err(HamError::ShootingFailed(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fire(sys, mid, dt) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let param = 0.5 * (lo + hi);
    let mut s = sys.initial(param);
    let mut values = vec![s];
    let steps = (sys.horizon() / dt).round() as usize;
    for _ in 0..steps {
        s = rk4_step(sys, &s, dt);
        if sys.classify(&s) != 0 {
            break;
        }
        values.push(s);
        // stop before the unstable mode takes over
        if sys == System::MixedConvection {
            let w = 1.0 - s[0];
            // distance from the stable manifold u'² = (1−u)²(2u+1)/6
            let unstable = (s[1] - w * ((3.0 - 2.0 * w) / 6.0).sqrt()).abs();
            if w.abs() < 0.1 && unstable > 1e-6 * w.abs() {
                break;
            }
        }
    }
    Ok((param, values))
}

/// Shooting solution certified by step halving: the parameter and the
/// solution on the coarse grid agree with the refined run within `accuracy`.
pub fn shoot(id: &str, accuracy: f64) -> Result<ShootingSolution> {
    let sys = match id {
        "ex2" => System::MixedConvection,
        "ex6" => System::Blasius,
        "ex1" | "ex3" | "ex4" | "ex5" => {
            return Err(HamError::ShootingFailed(format!("'{id}' has a closed form, no shooting set up")))
        }
        other => return Err(HamError::UnknownProblem(other.into())),
    };
    let mut dt = 0.1;
    let (mut param, mut values) = solve_once(sys, dt)?;
    for _ in 0..8 {
        let (p2, v2) = solve_once(sys, dt / 2.0)?;
        let n = values.len().min((v2.len() + 1) / 2);
        let mut diff = (p2 - param).abs();
        for i in 0..n {
            diff = diff.max((values[i][0] - v2[2 * i][0]).abs());
        }
        dt /= 2.0;
        param = p2;
        values = v2;
        if diff <= accuracy {
            return Ok(ShootingSolution {
                system_blasius: sys == System::Blasius,
                param,
                accuracy,
                step: dt,
                values,
            });
        }
    }
    Err(HamError::ShootingFailed(format!("step halving did not certify accuracy {accuracy}")))
}
