//! Truncated Taylor arithmetic to third order.
//!
//! A [`Jet3`] carries the value and first three derivatives of a smooth
//! function at a point. Closures written against `Jet3` yield exact
//! derivatives, which is what the Schwarzian of an analytic map needs.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Taylor coefficients `c[k] = f^(k)(x) / k!` for `k = 0..=3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    c: [f64; 4],
}

impl Jet3 {
    pub fn constant(value: f64) -> Self {
        Self { c: [value, 0.0, 0.0, 0.0] }
    }

    /// The independent variable at `x`.
    pub fn var(x: f64) -> Self {
        Self { c: [x, 1.0, 0.0, 0.0] }
    }

    /// Builds a jet from the value and derivatives `[f, f', f'', f''']`.
    pub fn from_derivatives(d: [f64; 4]) -> Self {
        Self { c: [d[0], d[1], d[2] / 2.0, d[3] / 6.0] }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative, `k <= 3`.
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        self.c[k] * FACT[k]
    }

    pub fn exp(self) -> Self {
        let a = self.c;
        let mut e = [a[0].exp(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn ln(self) -> Self {
        let a = self.c;
        let mut l = [a[0].ln(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (a[k] - s / k as f64) / a[0];
        }
        Self { c: l }
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let a = self.c;
        let (s0, c0) = a[0].sin_cos();
        let mut s = [s0, 0.0, 0.0, 0.0];
        let mut c = [c0, 0.0, 0.0, 0.0];
        for k in 1..4 {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc -= j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn sin(self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(self) -> Self {
        self.sin_cos().1
    }

    pub fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }

    pub fn atan(self) -> Self {
        let a = self.c;
        let inv = Self::constant(1.0) / (Self::constant(1.0) + self * self);
        let mut t = [a[0].atan(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * inv.c[k - j]).sum();
            t[k] = s / k as f64;
        }
        Self { c: t }
    }

    pub fn sqrt(self) -> Self {
        (self.ln() * 0.5).exp()
    }
}

impl Add for Jet3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.c;
        c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a += b);
        Self { c }
    }
}

impl Sub for Jet3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Jet3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { c: self.c.map(|v| -v) }
    }
}

impl Mul for Jet3 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.c, rhs.c);
        let mut c = [0.0; 4];
        for k in 0..4 {
            c[k] = (0..=k).map(|i| a[i] * b[k - i]).sum();
        }
        Self { c }
    }
}

impl Div for Jet3 {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let (a, b) = (self.c, rhs.c);
        let mut q = [0.0; 4];
        for k in 0..4 {
            let s: f64 = (1..=k).map(|i| b[i] * q[k - i]).sum();
            q[k] = (a[k] - s) / b[0];
        }
        Self { c: q }
    }
}

impl Add<f64> for Jet3 {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet3 {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self + (-rhs)
    }
}

impl Mul<f64> for Jet3 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self { c: self.c.map(|v| v * rhs) }
    }
}

impl Div<f64> for Jet3 {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, rhs: Jet3) -> Jet3 {
        rhs * self
    }
}

impl Add<Jet3> for f64 {
    type Output = Jet3;
    fn add(self, rhs: Jet3) -> Jet3 {
        rhs + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-13 * (1.0 + b.abs())
    }

    #[test]
    fn elementary_derivatives() {
        let x = 0.7;
        let j = Jet3::var(x);
        let e = (j * 2.0).exp();
        for k in 0..4 {
            assert!(close(e.derivative(k), 2f64.powi(k as i32) * (2.0 * x).exp()));
        }
        let s = j.sin();
        assert!(close(s.derivative(3), -x.cos()));
        let t = j.tan();
        let sec2 = 1.0 / x.cos().powi(2);
        assert!(close(t.derivative(1), sec2));
        assert!(close(t.derivative(2), 2.0 * sec2 * x.tan()));
        let a = j.atan();
        assert!(close(a.derivative(1), 1.0 / (1.0 + x * x)));
        assert!(close(a.derivative(2), -2.0 * x / (1.0 + x * x).powi(2)));
        let l = j.ln();
        assert!(close(l.derivative(3), 2.0 / x.powi(3)));
        let r = j.sqrt();
        assert!(close(r.derivative(2), -0.25 * x.powf(-1.5)));
    }

    #[test]
    fn quotient_rule() {
        let j = Jet3::var(1.3);
        let q = j.sin() / (j * j + 1.0);
        let p = q * (j * j + 1.0);
        for k in 0..4 {
            assert!(close(p.derivative(k), j.sin().derivative(k)));
        }
    }
}
