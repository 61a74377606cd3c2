use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::{Polynomial, Rational};
use crate::moebius::MoebiusMap;
use crate::{Error, Result};

/// `num/den` in lowest terms with a monic denominator; zero is `0/1`.
///
/// Reduced monic form is unique, so structural equality is equality of
/// functions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = Polynomial::gcd(&num, &den);
        let (num, _) = num.div_rem(&g);
        let (den, _) = den.div_rem(&g);
        let lc = den.leading().expect("nonzero").recip();
        Ok(Self {
            num: num.scale(&lc),
            den: den.scale(&lc),
        })
    }

    pub fn zero() -> Self {
        Self {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `None` where the denominator vanishes.
    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn derivative(&self) -> Self {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        Self::new(n, &self.den * &self.den).expect("nonzero denominator")
    }

    /// `Some(c)` when `self = c · other` for a rational constant `c`.
    pub fn ratio_to(&self, other: &Self) -> Option<Rational> {
        if other.is_zero() {
            return None;
        }
        let q = (self / other).ok()?;
        if q.den.is_constant() && q.num.is_constant() {
            Some(q.num.coeff(0) / q.den.coeff(0))
        } else {
            None
        }
    }

    /// `x ↦ self((n0 + n1 x)/(d0 + d1 x))` by homogenization.
    pub fn compose_fractional(
        &self,
        n0: &Rational,
        n1: &Rational,
        d0: &Rational,
        d1: &Rational,
    ) -> Result<Self> {
        if (n1 * d0 - n0 * d1).is_zero() {
            return Err(Error::SingularMap);
        }
        let a = Polynomial::linear(n0.clone(), n1.clone());
        let c = Polynomial::linear(d0.clone(), d1.clone());
        let m = self
            .num
            .coeffs()
            .len()
            .max(self.den.coeffs().len())
            .saturating_sub(1);
        let hom = |p: &Polynomial| {
            p.coeffs()
                .iter()
                .enumerate()
                .fold(Polynomial::zero(), |acc, (k, ck)| {
                    let term = &(&a.pow(k as u32) * &c.pow((m - k) as u32))
                        * &Polynomial::constant(ck.clone());
                    &acc + &term
                })
        };
        Self::new(hom(&self.num), hom(&self.den))
    }

    /// Linear factors of the denominator, if it splits over `Q`, with
    /// the constant `k` such that `self = k · num / Π(a + b x)^m` and each
    /// `(a, b)` primitive integer with `b ≥ 0` (`b > 0` unless constant).
    pub fn factored_display(&self) -> Option<String> {
        let roots = self.den.rational_roots();
        let split: usize = roots.iter().map(|(_, m)| m).sum();
        if Some(split) != self.den.degree() {
            return None;
        }
        let mut factors = Vec::new();
        let mut scale = Rational::one();
        for (r, m) in &roots {
            // x - r = (q x - p)/q with r = p/q
            let p = r.numer().clone();
            let q = r.denom().clone();
            let lin = Polynomial::linear(
                Rational::from_integer(-p),
                Rational::from_integer(q.clone()),
            );
            for _ in 0..*m {
                scale *= Rational::from_integer(q.clone());
                factors.push(lin.clone());
            }
        }
        let num = self.num.scale(&scale);
        let (num_ints, k) = num.primitive_part();
        let content = k.recip();
        let num_poly = Polynomial::new(num_ints.into_iter().map(Rational::from_integer).collect());
        // a fractional constant p/q moves q into the denominator
        let (num_str, extra) = if num_poly.is_constant() {
            let c = content * num_poly.coeff(0);
            (
                c.numer().to_string(),
                (!c.denom().is_one()).then(|| c.denom().to_string()),
            )
        } else if content.is_one() {
            (format!("({num_poly})"), None)
        } else {
            (format!("{content}·({num_poly})"), None)
        };
        let mut out = num_str;
        let mut sorted: Vec<_> = factors.iter().map(|f| f.to_string()).collect();
        sorted.sort_by(|a, b| (a != "x").cmp(&(b != "x")).then(a.cmp(b)));
        let mut parts: Vec<String> = extra.into_iter().collect();
        parts.extend(sorted.iter().map(|s| {
            if s == "x" {
                s.clone()
            } else {
                format!("({s})")
            }
        }));
        match parts.len() {
            0 => {}
            1 => out.push_str(&format!("/{}", parts[0])),
            _ => out.push_str(&format!("/({})", parts.concat())),
        }
        Some(out)
    }

    /// `(num, den)` rescaled so that `den` has coprime integer coefficients
    /// and a positive leading coefficient.
    pub fn integer_form(&self) -> (Polynomial, Polynomial) {
        let (den_ints, k) = self.den.primitive_part();
        let den = Polynomial::new(den_ints.into_iter().map(Rational::from_integer).collect());
        (self.num.scale(&k), den)
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Self::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

/// Agreement as rational functions: `num_f·den_g − num_g·den_f ≡ 0`.
pub fn rf_equal(f: &RationalFunction, g: &RationalFunction) -> bool {
    f == g || (&(&f.num * &g.den) - &(&g.num * &f.den)).is_zero()
}

/// `x ↦ h(v(x))`.
pub fn rf_compose_moebius(h: &RationalFunction, v: &MoebiusMap) -> Result<RationalFunction> {
    let [n0, n1, d0, d1] = v.rational_coeffs();
    h.compose_fractional(&n0, &n1, &d0, &d1)
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        let n = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFunction::new(n, &self.den * &rhs.den).expect("nonzero denominator")
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.num * &rhs.num, &self.den * &rhs.den)
            .expect("nonzero denominator")
    }
}

impl Div for &RationalFunction {
    type Output = Result<RationalFunction>;
    fn div(self, rhs: &RationalFunction) -> Result<RationalFunction> {
        self.checked_div(rhs)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() && self.den.coeff(0).is_one() {
            return write!(f, "{}", self.num);
        }
        let wrap = |p: &Polynomial| {
            if p.coeffs().iter().filter(|c| !c.is_zero()).count() > 1
                || p.coeffs().iter().any(|c| c.is_negative())
            {
                format!("({p})")
            } else {
                p.to_string()
            }
        };
        write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
    }
}
