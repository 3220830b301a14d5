
use crate::error::{Error, Result};
use crate::padic::Zp;
use crate::scalar::Scalar;
use crate::series::{z_to_pi, Series};
use crate::valuation::{ExtVal, Rat};

/// The ring Z_p[zeta]/p^N at tower level n, zeta a primitive p^n-th root of
/// unity, in the power basis of eps = zeta - 1 (degree d = p^{n-1}(p-1)).
#[derive(Clone, Debug)]
pub struct CycloRing<S: Scalar> {
    zp: Zp<S>,
    level: u32,
    dim: usize,
    /// Minimal polynomial of eps: the p^n-th cyclotomic polynomial evaluated
    /// at 1 + X; monic of degree `dim`, stored with all dim+1 coefficients.
    min_poly: Vec<S>,
}

/// Element of a [`CycloRing`], p^{-denom} times an integral coordinate vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloElt<S: Scalar> {
    pub coords: Vec<S>,
    pub denom: u32,
}

/// Exact valuation of a ring element together with precision bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuationReport {
    pub value: ExtVal,
    /// p-adic digits of headroom behind the leading digit of the minimising
    /// coordinate (infinite valuations: full working precision).
    pub guard: u32,
    /// The minimising coordinate was unique (always true for finite values in
    /// the eps-power basis: distinct fractional parts).
    pub unique: bool,
    /// All coordinates were literally zero, not merely zero mod p^N.
    pub exact_zero: bool,
}

impl<S: Scalar> CycloRing<S> {
    pub fn new(zp: &Zp<S>, level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("tower level must be >= 1".into()));
        }
        let p = zp.p();
        let q_prev = p.checked_pow(level - 1).ok_or_else(|| {
            Error::InvalidParameter(format!("p^{} overflows", level - 1))
        })? as usize;
        let dim = q_prev * (p as usize - 1);
        // Phi_{p^level}(z) = sum_{j<p} z^{j p^{level-1}}, rebased to z = 1 + X
        let mut zpoly = vec![S::zero(); dim + 1];
        for j in 0..(p as usize) {
            zpoly[j * q_prev] = S::one();
        }
        let min_poly = z_to_pi(zp, &zpoly);
        debug_assert!(min_poly[dim].is_one());
        Ok(CycloRing { zp: zp.clone(), level, dim, min_poly })
    }

    pub fn zp(&self) -> &Zp<S> {
        &self.zp
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn min_poly(&self) -> &[S] {
        &self.min_poly
    }

    /// ord_p(eps) = 1/d.
    pub fn eps_ord(&self) -> ExtVal {
        ExtVal::rat(1, self.dim as i64)
    }

    pub fn zero(&self) -> CycloElt<S> {
        CycloElt { coords: vec![S::zero(); self.dim], denom: 0 }
    }

    pub fn one(&self) -> CycloElt<S> {
        let mut e = self.zero();
        e.coords[0] = S::one();
        e
    }

    pub fn eps(&self) -> CycloElt<S> {
        let mut e = self.zero();
        if self.dim > 1 {
            e.coords[1] = S::one();
        }
        e
    }

    pub fn from_u64(&self, v: u64) -> CycloElt<S> {
        let mut e = self.zero();
        e.coords[0] = self.zp.from_u64(v);
        e
    }

    /// Reduces an integral polynomial in eps (any length) into the ring.
    pub fn from_poly(&self, coeffs: &[S]) -> CycloElt<S> {
        let mut v: Vec<S> = coeffs.iter().map(|c| self.zp.reduce(c.clone())).collect();
        self.reduce_in_place(&mut v);
        v.resize(self.dim, S::zero());
        CycloElt { coords: v, denom: 0 }
    }

    fn reduce_in_place(&self, v: &mut Vec<S>) {
        let d = self.dim;
        let mut idx = v.len();
        while idx > d {
            idx -= 1;
            let c = std::mem::replace(&mut v[idx], S::zero());
            if c.is_zero() {
                continue;
            }
            let off = idx - d;
            for t in 0..d {
                if self.min_poly[t].is_zero() {
                    continue;
                }
                let term = self.zp.mul(&c, &self.min_poly[t]);
                v[off + t] = self.zp.sub(&v[off + t], &term);
            }
        }
        v.truncate(d);
    }

    /// Element given by a sum of zeta powers: sum coeff * zeta^{exp}.
    pub fn from_zeta_powers(&self, terms: &[(u64, S)]) -> CycloElt<S> {
        let p = self.zp.p() as usize;
        let q = self.dim / (p - 1) * p; // p^level
        let q_prev = q / p;
        let mut v = vec![S::zero(); q];
        for (e, c) in terms {
            let e = (*e as usize) % q;
            v[e] = self.zp.add(&v[e], c);
        }
        // zeta^{d+t} = -sum_{j<p-1} zeta^{j p^{level-1} + t}
        for idx in (self.dim..q).rev() {
            let c = std::mem::replace(&mut v[idx], S::zero());
            if c.is_zero() {
                continue;
            }
            let t = idx - self.dim;
            for j in 0..(p - 1) {
                let k = j * q_prev + t;
                v[k] = self.zp.sub(&v[k], &c);
            }
        }
        v.truncate(self.dim);
        // rebase zeta-powers to eps-powers
        let coords = z_to_pi(&self.zp, &v);
        CycloElt { coords, denom: 0 }
    }

    /// zeta^e as a ring element.
    pub fn zeta_pow(&self, e: u64) -> CycloElt<S> {
        self.from_zeta_powers(&[(e, S::one())])
    }

    /// (1+eps)^{p^i} - 1: the image of eps from level - i.
    pub fn eps_frobenius_image(&self, i: u32) -> Result<CycloElt<S>> {
        if i >= self.level {
            return Err(Error::InvalidParameter(format!(
                "phi^{i} image at level {} is zero",
                self.level
            )));
        }
        let e = (self.zp.p()).pow(i);
        let mut x = self.zeta_pow(e);
        x.coords[0] = self.zp.sub(&x.coords[0], &S::one());
        Ok(x)
    }

    pub fn add(&self, a: &CycloElt<S>, b: &CycloElt<S>) -> CycloElt<S> {
        let denom = a.denom.max(b.denom);
        let mut out = vec![S::zero(); self.dim];
        let fa = self.zp.pow_u64(&S::from_u64(self.zp.p()), (denom - a.denom) as u64);
        let fb = self.zp.pow_u64(&S::from_u64(self.zp.p()), (denom - b.denom) as u64);
        for i in 0..self.dim {
            let x = self.zp.mul(&a.coords[i], &fa);
            let y = self.zp.mul(&b.coords[i], &fb);
            out[i] = self.zp.add(&x, &y);
        }
        CycloElt { coords: out, denom }
    }

    pub fn neg(&self, a: &CycloElt<S>) -> CycloElt<S> {
        CycloElt { coords: a.coords.iter().map(|c| self.zp.neg(c)).collect(), denom: a.denom }
    }

    pub fn sub(&self, a: &CycloElt<S>, b: &CycloElt<S>) -> CycloElt<S> {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, a: &CycloElt<S>, c: &S) -> CycloElt<S> {
        CycloElt { coords: a.coords.iter().map(|x| self.zp.mul(x, c)).collect(), denom: a.denom }
    }

    pub fn mul(&self, a: &CycloElt<S>, b: &CycloElt<S>) -> CycloElt<S> {
        let d = self.dim;
        let mut prod = vec![S::zero(); 2 * d - 1];
        for i in 0..d {
            if a.coords[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if b.coords[j].is_zero() {
                    continue;
                }
                let t = self.zp.mul(&a.coords[i], &b.coords[j]);
                prod[i + j] = self.zp.add(&prod[i + j], &t);
            }
        }
        self.reduce_in_place(&mut prod);
        prod.resize(d, S::zero());
        CycloElt { coords: prod, denom: a.denom + b.denom }
    }

    pub fn pow_u64(&self, a: &CycloElt<S>, mut e: u64) -> CycloElt<S> {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Exact division of all coordinates by p^k.
    pub fn div_exact_p(&self, a: &CycloElt<S>, k: u32) -> Result<CycloElt<S>> {
        let coords = a
            .coords
            .iter()
            .map(|c| self.zp.div_exact_p(c, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(CycloElt { coords, denom: a.denom })
    }

    /// Drops a common p-power between numerator and denominator.
    pub fn normalized(&self, a: &CycloElt<S>) -> CycloElt<S> {
        let mut k = a.denom;
        for c in &a.coords {
            if c.is_zero() {
                continue;
            }
            k = k.min(self.zp.ord(c).unwrap_or(0));
            if k == 0 {
                return a.clone();
            }
        }
        if k == 0 {
            return a.clone();
        }
        let coords = a
            .coords
            .iter()
            .map(|c| self.zp.div_exact_p(c, k).expect("common factor checked"))
            .collect();
        CycloElt { coords, denom: a.denom - k }
    }

    /// Inverse of a unit (valuation-zero element) by Hensel lifting from the
    /// residue ring F_p[X]/X^d.
    pub fn inv_unit(&self, a: &CycloElt<S>) -> Result<CycloElt<S>> {
        if a.denom != 0 {
            return Err(Error::InvalidParameter("invert an integral element; normalise first".into()));
        }
        if !self.zp.is_unit(&a.coords[0]) {
            return Err(Error::NotAUnit("cyclotomic element has positive valuation".into()));
        }
        // inverse mod p: power series inversion in F_p[X]/X^d
        let p = S::from_u64(self.zp.p());
        let modp = |x: &S| x.clone() % p.clone();
        let inv0 = {
            // invert a.coords[0] mod p by Fermat
            let zp1 = self.zp.with_prec(1)?;
            zp1.inv_unit(&modp(&a.coords[0]))?
        };
        let d = self.dim;
        let mut x = vec![S::zero(); d];
        x[0] = inv0.clone();
        for n in 1..d {
            let mut acc = S::zero();
            for i in 1..=n {
                let ai = modp(&a.coords[i]);
                if ai.is_zero() || x[n - i].is_zero() {
                    continue;
                }
                acc = (acc + ai * x[n - i].clone()) % p.clone();
            }
            x[n] = modp(&(p.clone() - (inv0.clone() * acc) % p.clone()));
        }
        let mut inv = CycloElt { coords: x, denom: 0 };
        // Hensel: x <- x (2 - a x), doubling correct digits each round
        let two = self.from_u64(2);
        let mut digits = 1u32;
        while digits < self.zp.prec() {
            let t = self.sub(&two, &self.mul(a, &inv));
            inv = self.mul(&inv, &t);
            digits *= 2;
        }
        debug_assert!(self.mul(a, &inv).coords[0] == S::one() || self.zp.prec() == 0);
        Ok(inv)
    }

    /// Exact valuation: min_i (ord_p(c_i) + i/d) - denom. The minimum is
    /// automatically unique in this basis (distinct fractional parts i/d).
    pub fn valuation(&self, a: &CycloElt<S>) -> ValuationReport {
        let d = self.dim as i64;
        let mut best: Option<(Rat, u32)> = None;
        let mut all_literal_zero = true;
        for (i, c) in a.coords.iter().enumerate() {
            if !c.is_zero() {
                all_literal_zero = false;
            }
            if let Some(v) = self.zp.ord(c) {
                let cand = Rat::from_integer(v as i64) + Rat::new(i as i64, d);
                match best {
                    None => best = Some((cand, v)),
                    Some((b, _)) if cand < b => best = Some((cand, v)),
                    _ => {}
                }
            }
        }
        match best {
            Some((v, lead_ord)) => ValuationReport {
                value: ExtVal::Finite(v - Rat::from_integer(a.denom as i64)),
                guard: self.zp.prec().saturating_sub(lead_ord).saturating_sub(a.denom),
                unique: true,
                exact_zero: false,
            },
            None => ValuationReport {
                value: ExtVal::Infinity,
                guard: self.zp.prec().saturating_sub(a.denom),
                unique: true,
                exact_zero: all_literal_zero,
            },
        }
    }

    /// Evaluates an integral polynomial (coefficient slice, low to high) at a
    /// ring element by Horner.
    pub fn eval_poly(&self, coeffs: &[S], x: &CycloElt<S>) -> CycloElt<S> {
        let mut acc = self.zero();
        for c in coeffs.iter().rev() {
            acc = self.mul(&acc, x);
            acc.coords[0] = self.zp.add(&acc.coords[0], &self.zp.reduce(c.clone()));
        }
        acc
    }

    /// Evaluates a truncated series at eps. Returns the value and the
    /// valuation bound M * ord(eps) on the discarded tail.
    pub fn eval_series_at_eps(&self, f: &Series<S>) -> (CycloElt<S>, ExtVal) {
        let mut elt = self.from_poly(f.coeffs());
        elt.denom = f.denom();
        let tail = ExtVal::rat(f.trunc() as i64, self.dim as i64)
            + ExtVal::int(-(f.denom() as i64));
        (elt, tail)
    }

    /// Evaluates a truncated series at an arbitrary element of known positive
    /// valuation; the tail bound is M * ord(x).
    pub fn eval_series_at(&self, f: &Series<S>, x: &CycloElt<S>) -> (CycloElt<S>, ExtVal) {
        let mut acc = self.zero();
        for c in f.coeffs().iter().rev() {
            acc = self.mul(&acc, x);
            acc.coords[0] = self.zp.add(&acc.coords[0], c);
        }
        acc.denom += f.denom();
        let ord_x = self.valuation(x).value;
        (acc, ord_x.scale(f.trunc() as i64) + ExtVal::int(-(f.denom() as i64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Fast;

    fn ring(p: u64, prec: u32, level: u32) -> CycloRing<Fast> {
        CycloRing::new(&Zp::new(p, prec).unwrap(), level).unwrap()
    }

    #[test]
    fn min_poly_level_one_is_classical() {
        // Phi_p(1+X) = ((1+X)^p - 1)/X: for p=5 coefficients C(5, i+1)
        let r = ring(5, 10, 1);
        assert_eq!(r.dim(), 4);
        assert_eq!(r.min_poly(), &[5u128, 10, 10, 5, 1][..]);
    }

    #[test]
    fn zeta_has_order_q() {
        let r = ring(3, 8, 2);
        assert_eq!(r.dim(), 6);
        let z = r.zeta_pow(1);
        assert_eq!(r.pow_u64(&z, 9), r.one());
        assert!(r.pow_u64(&z, 3) != r.one());
        // and the product of zeta^a over a full period collapses correctly
        let z4 = r.zeta_pow(4);
        assert_eq!(r.mul(&z, &r.zeta_pow(3)), z4);
    }

    #[test]
    fn eps_valuation_is_one_over_d() {
        for (p, level) in [(3u64, 1u32), (3, 2), (5, 1), (5, 2), (7, 1)] {
            let r = ring(p, 12, level);
            let v = r.valuation(&r.eps());
            assert_eq!(v.value, ExtVal::rat(1, r.dim() as i64));
            assert!(v.unique);
        }
    }

    #[test]
    fn min_poly_annihilates_eps() {
        let r = ring(5, 8, 2);
        let mp: Vec<Fast> = r.min_poly().to_vec();
        let v = r.eval_poly(&mp, &r.eps());
        let rep = r.valuation(&v);
        assert!(rep.exact_zero);
        assert_eq!(rep.value, ExtVal::Infinity);
    }

    #[test]
    fn frobenius_image_matches_lower_level() {
        // (1+eps_2)^p - 1 has the valuation of eps_1 seen at level 2
        let r = ring(5, 10, 2);
        let e1 = r.eps_frobenius_image(1).unwrap();
        assert_eq!(r.valuation(&e1).value, ExtVal::rat(1, 4));
        // and its minimal polynomial at level 1 annihilates it
        let r1 = ring(5, 10, 1);
        let mp: Vec<Fast> = r1.min_poly().to_vec();
        let v = r.eval_poly(&mp, &e1);
        assert_eq!(r.valuation(&v).value, ExtVal::Infinity);
    }

    #[test]
    fn unit_inverse() {
        let r = ring(5, 12, 2);
        let mut a = r.zeta_pow(7);
        a.coords[2] = r.zp().add(&a.coords[2], &35u128);
        let inv = r.inv_unit(&a).unwrap();
        assert_eq!(r.mul(&a, &inv), r.one());
        assert!(r.inv_unit(&r.eps()).is_err());
    }

    #[test]
    fn valuation_with_denominator() {
        let r = ring(3, 10, 2);
        let mut a = r.scale(&r.eps(), &9u128);
        a.denom = 1;
        // ord = 2 + 1/6 - 1
        assert_eq!(r.valuation(&a).value, ExtVal::rat(7, 6));
        assert!(r.valuation(&a).guard >= 2);
    }

    #[test]
    fn series_evaluation_tail_bound() {
        let zp = Zp::<Fast>::new(5, 10).unwrap();
        let r = CycloRing::new(&zp, 2).unwrap();
        // p(X + p unit) at an element of valuation 1/20 has valuation 21/20
        let g = Series::from_i64(&zp, &[0, 5, 25, 0, 35], 40); // 5(X + 5X^2 + 7X^4)
        let (val, tail) = r.eval_series_at_eps(&g);
        assert_eq!(tail, ExtVal::int(2));
        assert_eq!(r.valuation(&val).value, ExtVal::rat(21, 20));
    }
}
