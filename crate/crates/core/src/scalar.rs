use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Unsigned integer scalar the whole crate is generic over.
///
/// Two instantiations are provided: `u128` (fast path; moduli are restricted
/// to 63 bits so that products never overflow) and `BigUint` (unbounded).
/// All residue arithmetic mod p^N is built on top of these via [`crate::padic::Zp`].
pub trait Scalar:
    Clone + Eq + Ord + Hash + Debug + Display + Zero + One + Integer + Send + Sync + 'static
{
    /// Largest admissible modulus width in bits, if bounded.
    const MODULUS_BITS: Option<u32>;

    fn from_u64(v: u64) -> Self;
    fn to_u64(&self) -> Option<u64>;
    fn bit_len(&self) -> u64;
    fn bit(&self, i: u64) -> bool;
    fn to_biguint(&self) -> BigUint;
    /// Caller must have reduced `v` below the intended modulus.
    fn from_biguint(v: &BigUint) -> Self;
}

impl Scalar for u128 {
    // products of two values below 2^63 fit in u128
    const MODULUS_BITS: Option<u32> = Some(63);

    fn from_u64(v: u64) -> Self {
        v as u128
    }

    fn to_u64(&self) -> Option<u64> {
        if *self <= u64::MAX as u128 {
            Some(*self as u64)
        } else {
            None
        }
    }

    fn bit_len(&self) -> u64 {
        (128 - self.leading_zeros()) as u64
    }

    fn bit(&self, i: u64) -> bool {
        i < 128 && (self >> i) & 1 == 1
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn from_biguint(v: &BigUint) -> Self {
        ToPrimitive::to_u128(v).expect("value exceeds u128 range")
    }
}

impl Scalar for BigUint {
    const MODULUS_BITS: Option<u32> = None;

    fn from_u64(v: u64) -> Self {
        BigUint::from(v)
    }

    fn to_u64(&self) -> Option<u64> {
        ToPrimitive::to_u64(self)
    }

    fn bit_len(&self) -> u64 {
        self.bits()
    }

    fn bit(&self, i: u64) -> bool {
        BigUint::bit(self, i)
    }

    fn to_biguint(&self) -> BigUint {
        self.clone()
    }

    fn from_biguint(v: &BigUint) -> Self {
        v.clone()
    }
}

/// Fast fixed-width scalar; valid for moduli p^N below 2^63.
pub type Fast = u128;

/// Arbitrary precision scalar.
pub type Wide = BigUint;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_access_agrees_across_scalars() {
        let v: u64 = 0b1011_0010_1101;
        let a = <u128 as Scalar>::from_u64(v);
        let b = <BigUint as Scalar>::from_u64(v);
        assert_eq!(a.bit_len(), b.bit_len());
        for i in 0..16 {
            assert_eq!(Scalar::bit(&a, i), Scalar::bit(&b, i));
        }
    }
}
