//! Truncated power series, exact or floating, and the zeta series
//! Z(u) = exp(Σ_{m≥1} N_m u^m / m).
//!
//! Coefficients are generic: `BigRational` for the exact identities,
//! `Complex64`/`f64` for numerics. All operations truncate at the smaller
//! operand order. `exp` requires a zero constant term, `log` and
//! `inverse` a unit constant term; rational powers go through
//! exp(e·log), which stays exact over the rationals.

use crate::error::{Error, Result};
use crate::scalar::FieldScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: FieldScalar> TruncatedSeries<T> {
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series carries at least its constant term");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = T::one();
        s
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// c·u^k as a series of the given order.
    pub fn monomial(c: T, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> T {
        self.coeffs.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(order + 1);
        coeffs.resize(order + 1, T::zero());
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self {
            coeffs: (0..=order).map(|m| self.coeff(m) + other.coeff(m)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self {
            coeffs: (0..=order).map(|m| self.coeff(m) - other.coeff(m)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn scale(&self, c: &T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut coeffs = vec![T::zero(); order + 1];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in 0..=m {
                let a = self.coeff(k);
                if a.is_zero() {
                    continue;
                }
                acc = acc + a * other.coeff(m - k);
            }
            *c = acc;
        }
        Self { coeffs }
    }

    /// d/du; the order drops by one.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self {
            coeffs: (1..=self.order())
                .map(|m| self.coeff(m) * T::from_int(m as i64))
                .collect(),
        }
    }

    /// exp of a series with zero constant term, via
    /// n e_n = Σ_{k=1}^{n} k s_k e_{n−k}.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeff(0).is_zero() {
            return Err(Error::BadConstantTerm { expected: "0" });
        }
        let order = self.order();
        let mut e = vec![T::zero(); order + 1];
        e[0] = T::one();
        for n in 1..=order {
            let mut acc = T::zero();
            for k in 1..=n {
                let s_k = self.coeff(k);
                if s_k.is_zero() {
                    continue;
                }
                acc = acc + T::from_int(k as i64) * s_k * e[n - k].clone();
            }
            e[n] = acc / T::from_int(n as i64);
        }
        Ok(Self { coeffs: e })
    }

    /// log of a series with unit constant term, via
    /// n l_n = n s_n − Σ_{k=1}^{n−1} k l_k s_{n−k}.
    pub fn log(&self) -> Result<Self> {
        if !self.coeff(0).is_one() {
            return Err(Error::BadConstantTerm { expected: "1" });
        }
        let order = self.order();
        let mut l = vec![T::zero(); order + 1];
        for n in 1..=order {
            let mut acc = T::from_int(n as i64) * self.coeff(n);
            for k in 1..n {
                if l[k].is_zero() {
                    continue;
                }
                acc = acc - T::from_int(k as i64) * l[k].clone() * self.coeff(n - k);
            }
            l[n] = acc / T::from_int(n as i64);
        }
        Ok(Self { coeffs: l })
    }

    /// Multiplicative inverse of a series with unit constant term.
    pub fn inverse(&self) -> Result<Self> {
        if !self.coeff(0).is_one() {
            return Err(Error::BadConstantTerm { expected: "1" });
        }
        let order = self.order();
        let mut b = vec![T::zero(); order + 1];
        b[0] = T::one();
        for n in 1..=order {
            let mut acc = T::zero();
            for k in 1..=n {
                let a = self.coeff(k);
                if a.is_zero() {
                    continue;
                }
                acc = acc + a * b[n - k].clone();
            }
            b[n] = -acc;
        }
        Ok(Self { coeffs: b })
    }

    /// s^{p/q} for a series with unit constant term: exp((p/q)·log s).
    pub fn pow_ratio(&self, p: i64, q: i64) -> Result<Self> {
        Ok(self.log()?.scale(&T::from_ratio(p, q)).exp()?)
    }

    /// Horner evaluation at a point.
    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn map<U: FieldScalar>(&self, f: impl Fn(&T) -> U) -> TruncatedSeries<U> {
        TruncatedSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// Z(u) = exp(Σ_{m=1}^{order} N_m u^m / m), exact. `n_values[m]` is N_m
/// (index 0 ignored); missing entries are treated as zero.
pub fn zeta_series(n_values: &[BigInt], order: usize) -> TruncatedSeries<BigRational> {
    let mut log_z = TruncatedSeries::<BigRational>::zero(order);
    for m in 1..=order {
        if let Some(n_m) = n_values.get(m) {
            if !n_m.is_zero() {
                log_z = log_z.add(&TruncatedSeries::monomial(
                    BigRational::new(n_m.clone(), BigInt::from(m as i64)),
                    m,
                    order,
                ));
            }
        }
    }
    log_z.exp().expect("log Z has zero constant term")
}

/// u Z'(u)/Z(u); recovers the N_m from a zeta series.
pub fn log_derivative<T: FieldScalar>(z: &TruncatedSeries<T>) -> Result<TruncatedSeries<T>> {
    let logz = z.log()?;
    let d = logz.derivative();
    // multiply by u: shift coefficients up, restoring the original order
    let mut coeffs = vec![T::zero(); z.order() + 1];
    for m in 0..=d.order() {
        if m + 1 <= z.order() {
            coeffs[m + 1] = d.coeff(m);
        }
    }
    Ok(TruncatedSeries::from_coeffs(coeffs))
}

/// The binomial series (1 − u^λ)^{p/q}, exact.
pub fn binomial_one_minus_upow(
    lambda: usize,
    p: i64,
    q: i64,
    order: usize,
) -> Result<TruncatedSeries<BigRational>> {
    assert!(lambda >= 1, "exponent base needs a positive power of u");
    let base = TruncatedSeries::one(order).sub(&TruncatedSeries::monomial(
        BigRational::one(),
        lambda,
        order,
    ));
    base.pow_ratio(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{FromPrimitive, ToPrimitive};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn geometric_log_series(order: usize) -> TruncatedSeries<BigRational> {
        // -log(1 - u) = Σ u^m / m
        let mut s = TruncatedSeries::zero(order);
        for m in 1..=order {
            s = s.add(&TruncatedSeries::monomial(rat(1, m as i64), m, order));
        }
        s
    }

    #[test]
    fn exp_log_inverse_pair() {
        let s = geometric_log_series(12);
        assert_eq!(s.exp().unwrap().log().unwrap(), s);
    }

    #[test]
    fn exp_of_neg_log_is_geometric() {
        let s = geometric_log_series(10);
        let g = s.exp().unwrap(); // 1/(1-u)
        for m in 0..=10 {
            assert_eq!(g.coeff(m), rat(1, 1), "m={m}");
        }
    }

    #[test]
    fn exp_of_zero_is_one() {
        let z = TruncatedSeries::<BigRational>::zero(8);
        let e = z.exp().unwrap();
        assert_eq!(e, TruncatedSeries::one(8));
    }

    #[test]
    fn derivative_shifts_exponents() {
        // d/du Σ u^m/m = Σ u^{m-1}
        let s = geometric_log_series(9);
        let d = s.derivative();
        for m in 0..=8 {
            assert_eq!(d.coeff(m), rat(1, 1), "m={m}");
        }
    }

    #[test]
    fn bad_constant_terms_error() {
        let one = TruncatedSeries::<BigRational>::one(4);
        assert!(matches!(one.exp(), Err(Error::BadConstantTerm { .. })));
        let zero = TruncatedSeries::<BigRational>::zero(4);
        assert!(matches!(zero.log(), Err(Error::BadConstantTerm { .. })));
        assert!(matches!(zero.inverse(), Err(Error::BadConstantTerm { .. })));
    }

    #[test]
    fn inverse_multiplies_to_one() {
        let s = TruncatedSeries::from_coeffs(vec![rat(1, 1), rat(-3, 2), rat(5, 7), rat(0, 1), rat(2, 3)]);
        let inv = s.inverse().unwrap();
        assert_eq!(s.mul(&inv), TruncatedSeries::one(4));
    }

    #[test]
    fn zeta_series_of_tree_is_one() {
        let n = vec![BigInt::zero(); 13];
        let z = zeta_series(&n, 12);
        assert_eq!(z, TruncatedSeries::one(12));
    }

    #[test]
    fn log_derivative_recovers_counts() {
        let mut n = vec![BigInt::zero(); 13];
        n[3] = BigInt::from(24);
        n[4] = BigInt::from(6);
        n[6] = BigInt::from(10);
        let z = zeta_series(&n, 12);
        let rec = log_derivative(&z).unwrap();
        for m in 1..=12 {
            assert_eq!(rec.coeff(m), BigRational::from_i64(0).unwrap() + BigRational::new(n[m].clone(), 1.into()), "m={m}");
        }
    }

    #[test]
    fn binomial_series_squares_back() {
        // ((1 - u^6)^{-2/3})^{-3/2} = 1 - u^6
        let b = binomial_one_minus_upow(6, -2, 3, 18).unwrap();
        let back = b.pow_ratio(-3, 2).unwrap();
        let expect = TruncatedSeries::one(18).sub(&TruncatedSeries::monomial(rat(1, 1), 6, 18));
        assert_eq!(back, expect);
    }

    #[test]
    fn floating_mode_tracks_exact_mode() {
        let s = geometric_log_series(16);
        let exact = s.exp().unwrap();
        let float = s.map(|c| c.to_f64().unwrap()).exp().unwrap();
        for m in 0..=16 {
            let e = exact.coeff(m).to_f64().unwrap();
            let f = float.coeff(m);
            assert!((e - f).abs() <= 1e-12 * e.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn eval_horner() {
        let s = TruncatedSeries::from_coeffs(vec![1.0f64, 2.0, 3.0]);
        let v: f64 = s.eval(&0.5) - (1.0 + 1.0 + 0.75);
        assert!(v.abs() < 1e-15);
    }
}
