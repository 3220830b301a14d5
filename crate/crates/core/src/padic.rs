
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Residue context for Z/p^N with p an odd prime.
///
/// `prec` is the number of stored p-adic digits N. All elements handled through
/// a context are canonical residues in `[0, p^N)`.
#[derive(Clone, Debug)]
pub struct Zp<S: Scalar> {
    p: u64,
    prec: u32,
    modulus: S,
}

impl<S: Scalar> PartialEq for Zp<S> {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.prec == other.prec
    }
}
impl<S: Scalar> Eq for Zp<S> {}

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl<S: Scalar> Zp<S> {
    pub fn new(p: u64, prec: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::InvalidParameter(format!("p = {p} is not an odd prime")));
        }
        if prec == 0 {
            return Err(Error::InvalidParameter("precision must be positive".into()));
        }
        let mut modulus = S::one();
        let pw = S::from_u64(p);
        for _ in 0..prec {
            modulus = modulus * pw.clone();
            if let Some(bits) = S::MODULUS_BITS {
                if modulus.bit_len() > bits as u64 {
                    return Err(Error::InvalidParameter(format!(
                        "modulus {p}^{prec} exceeds the {bits}-bit scalar; use the wide scalar"
                    )));
                }
            }
        }
        Ok(Zp { p, prec, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn modulus(&self) -> &S {
        &self.modulus
    }

    /// Same prime, possibly lower precision.
    pub fn with_prec(&self, prec: u32) -> Result<Zp<S>> {
        Zp::new(self.p, prec)
    }

    pub fn reduce(&self, x: S) -> S {
        x % self.modulus.clone()
    }

    pub fn zero(&self) -> S {
        S::zero()
    }

    pub fn one(&self) -> S {
        S::one()
    }

    pub fn from_u64(&self, v: u64) -> S {
        self.reduce(S::from_u64(v))
    }

    pub fn from_biguint(&self, v: &num_bigint::BigUint) -> S {
        let m = num_bigint::BigUint::from(self.p).pow(self.prec);
        S::from_biguint(&(v % &m))
    }

    pub fn from_i64(&self, v: i64) -> S {
        if v >= 0 {
            self.from_u64(v as u64)
        } else {
            self.neg(&self.from_u64(v.unsigned_abs()))
        }
    }

    pub fn add(&self, a: &S, b: &S) -> S {
        self.reduce(a.clone() + b.clone())
    }

    pub fn sub(&self, a: &S, b: &S) -> S {
        self.reduce(a.clone() + self.modulus.clone() - b.clone())
    }

    pub fn neg(&self, a: &S) -> S {
        if a.is_zero() {
            S::zero()
        } else {
            self.modulus.clone() - a.clone()
        }
    }

    pub fn mul(&self, a: &S, b: &S) -> S {
        self.reduce(a.clone() * b.clone())
    }

    pub fn pow_u64(&self, a: &S, mut e: u64) -> S {
        let mut base = a.clone();
        let mut acc = S::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// a^e with a scalar exponent (square and multiply over the bits of e).
    pub fn pow_scalar(&self, a: &S, e: &S) -> S {
        let mut acc = S::one();
        let mut base = a.clone();
        for i in 0..e.bit_len() {
            if e.bit(i) {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
        }
        acc
    }

    /// v_p of a residue; `None` means zero within precision (v_p >= N).
    pub fn ord(&self, a: &S) -> Option<u32> {
        if a.is_zero() {
            return None;
        }
        let p = S::from_u64(self.p);
        let mut v = 0u32;
        let mut x = a.clone();
        loop {
            let (q, r) = x.div_rem(&p);
            if r.is_zero() {
                v += 1;
                x = q;
            } else {
                return Some(v);
            }
        }
    }

    pub fn is_unit(&self, a: &S) -> bool {
        self.ord(a) == Some(0)
    }

    /// Exact division by p^k; errors if the residue is not divisible.
    pub fn div_exact_p(&self, a: &S, k: u32) -> Result<S> {
        let mut x = a.clone();
        let p = S::from_u64(self.p);
        for _ in 0..k {
            let (q, r) = x.div_rem(&p);
            if !r.is_zero() {
                return Err(Error::PrecisionExhausted(format!(
                    "residue not divisible by {}^{}",
                    self.p, k
                )));
            }
            x = q;
        }
        Ok(x)
    }

    /// Inverse of a unit mod p^N via Euler's theorem: a^(phi(p^N) - 1).
    pub fn inv_unit(&self, a: &S) -> Result<S> {
        if !self.is_unit(a) {
            return Err(Error::NotAUnit(format!("residue {a} mod {}^{}", self.p, self.prec)));
        }
        // phi(p^N) - 1 = p^{N-1}(p-1) - 1
        let p = S::from_u64(self.p);
        let phi = self.modulus.clone() / p * S::from_u64(self.p - 1);
        let e = phi - S::one();
        Ok(self.pow_scalar(a, &e))
    }

    /// Teichmueller lift of a mod p: the unique (p-1)-st root of unity
    /// congruent to a, computed by iterated p-th powering.
    pub fn teichmuller(&self, a: u64) -> S {
        let mut x = self.from_u64(a % self.p);
        for _ in 0..self.prec {
            x = self.pow_u64(&x, self.p);
        }
        x
    }

    /// Smallest primitive root mod p.
    pub fn primitive_root(&self) -> u64 {
        let p = self.p;
        // factor p-1
        let mut fac = Vec::new();
        let mut m = p - 1;
        let mut d = 2;
        while d * d <= m {
            if m.is_multiple_of(d) {
                fac.push(d);
                while m.is_multiple_of(d) {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            fac.push(m);
        }
        'outer: for g in 2..p {
            for &q in &fac {
                if pow_mod_u64(g, (p - 1) / q, p) == 1 {
                    continue 'outer;
                }
            }
            return g;
        }
        unreachable!("every odd prime has a primitive root")
    }
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut base = b as u128 % m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m as u128;
        }
        base = base * base % m as u128;
        e >>= 1;
    }
    b = acc as u64;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Fast, Wide};

    #[test]
    fn rejects_bad_primes() {
        assert!(Zp::<Fast>::new(4, 3).is_err());
        assert!(Zp::<Fast>::new(2, 3).is_err());
        assert!(Zp::<Fast>::new(1, 3).is_err());
    }

    #[test]
    fn fast_scalar_rejects_oversized_modulus() {
        // 5^40 needs 93 bits
        assert!(Zp::<Fast>::new(5, 40).is_err());
        assert!(Zp::<Wide>::new(5, 40).is_ok());
    }

    #[test]
    fn ord_and_inverse() {
        let zp = Zp::<Fast>::new(5, 10).unwrap();
        assert_eq!(zp.ord(&zp.from_u64(75)), Some(2));
        assert_eq!(zp.ord(&zp.from_u64(0)), None);
        let a = zp.from_u64(1234);
        let inv = zp.inv_unit(&a).unwrap();
        assert_eq!(zp.mul(&a, &inv), zp.one());
        assert!(zp.inv_unit(&zp.from_u64(25)).is_err());
    }

    #[test]
    fn teichmuller_is_root_of_unity() {
        let zp = Zp::<Fast>::new(7, 20).unwrap();
        for a in 1..7 {
            let t = zp.teichmuller(a);
            assert_eq!(zp.pow_u64(&t, 6), zp.one());
            // congruent to a mod p
            assert_eq!(t % 7, Fast::from(a));
        }
    }

    #[test]
    fn wide_and_fast_agree() {
        let zf = Zp::<Fast>::new(3, 12).unwrap();
        let zw = Zp::<Wide>::new(3, 12).unwrap();
        let af = zf.from_u64(7919);
        let aw = zw.from_u64(7919);
        assert_eq!(zf.inv_unit(&af).unwrap().to_string(), zw.inv_unit(&aw).unwrap().to_string());
        assert_eq!(zf.teichmuller(2).to_string(), zw.teichmuller(2).to_string());
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(Zp::<Fast>::new(3, 2).unwrap().primitive_root(), 2);
        assert_eq!(Zp::<Fast>::new(5, 2).unwrap().primitive_root(), 2);
        assert_eq!(Zp::<Fast>::new(7, 2).unwrap().primitive_root(), 3);
    }
}
