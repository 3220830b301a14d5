
use crate::error::{Error, Result};
use crate::padic::Zp;
use crate::scalar::Scalar;
use crate::valuation::{ExtVal, Rat};

/// Truncated power series over Z/p^N in one variable, with a tracked power of
/// p in the denominator: the element represented is p^{-denom} * sum c_i X^i,
/// known mod (X^M, p^{N - denom}).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series<S: Scalar> {
    zp: Zp<S>,
    coeffs: Vec<S>,
    denom: u32,
}

/// Iwasawa invariants of the numerator of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Invariants {
    pub mu: u32,
    pub lambda: usize,
}

impl<S: Scalar> Series<S> {
    pub fn new(zp: Zp<S>, coeffs: Vec<S>, denom: u32) -> Self {
        let coeffs = coeffs.into_iter().map(|c| zp.reduce(c)).collect();
        Series { zp, coeffs, denom }
    }

    pub fn from_i64(zp: &Zp<S>, coeffs: &[i64], trunc: usize) -> Self {
        let mut v: Vec<S> = coeffs.iter().map(|&c| zp.from_i64(c)).collect();
        v.resize(trunc, S::zero());
        v.truncate(trunc);
        Series { zp: zp.clone(), coeffs: v, denom: 0 }
    }

    pub fn zero(zp: &Zp<S>, trunc: usize) -> Self {
        Series { zp: zp.clone(), coeffs: vec![S::zero(); trunc], denom: 0 }
    }

    pub fn constant(zp: &Zp<S>, c: S, trunc: usize) -> Self {
        let mut s = Series::zero(zp, trunc);
        s.coeffs[0] = zp.reduce(c);
        s
    }

    pub fn one(zp: &Zp<S>, trunc: usize) -> Self {
        Series::constant(zp, S::one(), trunc)
    }

    pub fn x(zp: &Zp<S>, trunc: usize) -> Self {
        let mut s = Series::zero(zp, trunc);
        if trunc > 1 {
            s.coeffs[1] = S::one();
        }
        s
    }

    pub fn zp(&self) -> &Zp<S> {
        &self.zp
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len()
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    /// p-adic digits actually meaningful for the represented element.
    pub fn effective_prec(&self) -> u32 {
        self.zp.prec().saturating_sub(self.denom)
    }

    pub fn coeff(&self, i: usize) -> S {
        self.coeffs.get(i).cloned().unwrap_or_else(S::zero)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True if every numerator coefficient vanishes mod p^digits.
    pub fn is_zero_mod(&self, digits: u32) -> bool {
        self.coeffs
            .iter()
            .all(|c| self.zp.ord(c).is_none() || self.zp.ord(c).unwrap() >= digits)
    }

    pub fn truncated(&self, trunc: usize) -> Series<S> {
        let mut c = self.coeffs.clone();
        c.resize(trunc, S::zero());
        c.truncate(trunc);
        Series { zp: self.zp.clone(), coeffs: c, denom: self.denom }
    }

    pub fn reduced_prec(&self, prec: u32) -> Result<Series<S>> {
        let zp = self.zp.with_prec(prec)?;
        let coeffs = self.coeffs.iter().map(|c| zp.reduce(c.clone())).collect();
        Ok(Series { zp, coeffs, denom: self.denom })
    }

    /// Drops a common factor of p^k between numerator and denominator.
    pub fn normalized(&self) -> Series<S> {
        let mut k = self.denom;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            k = k.min(self.zp.ord(c).unwrap_or(0));
            if k == 0 {
                break;
            }
        }
        if k == 0 {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| self.zp.div_exact_p(c, k).expect("common factor checked"))
            .collect();
        Series { zp: self.zp.clone(), coeffs, denom: self.denom - k }
    }

    fn aligned(&self, other: &Series<S>) -> Result<(Series<S>, Series<S>)> {
        if self.zp.p() != other.zp.p() {
            return Err(Error::ContextMismatch(format!(
                "primes differ: {} vs {}",
                self.zp.p(),
                other.zp.p()
            )));
        }
        let prec = self.zp.prec().min(other.zp.prec());
        let trunc = self.trunc().min(other.trunc());
        Ok((
            self.reduced_prec(prec)?.truncated(trunc),
            other.reduced_prec(prec)?.truncated(trunc),
        ))
    }

    fn with_common_denom(a: Series<S>, b: Series<S>) -> (Series<S>, Series<S>, u32) {
        let denom = a.denom.max(b.denom);
        let scale_up = |s: &Series<S>| -> Series<S> {
            let k = denom - s.denom;
            if k == 0 {
                return s.clone();
            }
            let f = s.zp.pow_u64(&S::from_u64(s.zp.p()), k as u64);
            let coeffs = s.coeffs.iter().map(|c| s.zp.mul(c, &f)).collect();
            Series { zp: s.zp.clone(), coeffs, denom }
        };
        (scale_up(&a), scale_up(&b), denom)
    }

    pub fn add(&self, other: &Series<S>) -> Result<Series<S>> {
        let (a, b) = self.aligned(other)?;
        let (a, b, denom) = Series::with_common_denom(a, b);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| a.zp.add(x, y))
            .collect();
        Ok(Series { zp: a.zp.clone(), coeffs, denom })
    }

    pub fn sub(&self, other: &Series<S>) -> Result<Series<S>> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Series<S> {
        let coeffs = self.coeffs.iter().map(|c| self.zp.neg(c)).collect();
        Series { zp: self.zp.clone(), coeffs, denom: self.denom }
    }

    pub fn scale(&self, c: &S) -> Series<S> {
        let coeffs = self.coeffs.iter().map(|x| self.zp.mul(x, c)).collect();
        Series { zp: self.zp.clone(), coeffs, denom: self.denom }
    }

    pub fn mul(&self, other: &Series<S>) -> Result<Series<S>> {
        let (a, b) = self.aligned(other)?;
        let trunc = a.trunc();
        let mut coeffs = vec![S::zero(); trunc];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if i + j >= trunc {
                    break;
                }
                if y.is_zero() {
                    continue;
                }
                coeffs[i + j] = a.zp.add(&coeffs[i + j], &a.zp.mul(x, y));
            }
        }
        Ok(Series { zp: a.zp.clone(), coeffs, denom: a.denom + b.denom })
    }

    /// Multiplication by a short integral polynomial (dense in low degrees).
    pub fn mul_by_poly(&self, poly: &[S]) -> Series<S> {
        let trunc = self.trunc();
        let mut coeffs = vec![S::zero(); trunc];
        for (j, y) in poly.iter().enumerate() {
            if j >= trunc || y.is_zero() {
                continue;
            }
            for (i, x) in self.coeffs.iter().enumerate() {
                if i + j >= trunc {
                    break;
                }
                if x.is_zero() {
                    continue;
                }
                coeffs[i + j] = self.zp.add(&coeffs[i + j], &self.zp.mul(x, y));
            }
        }
        Series { zp: self.zp.clone(), coeffs, denom: self.denom }
    }

    pub fn pow_u64(&self, e: u64) -> Result<Series<S>> {
        let mut acc = Series::one(&self.zp, self.trunc());
        acc.denom = 0;
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Substitution self(g) for an integral g with zero constant term.
    pub fn compose(&self, g: &Series<S>) -> Result<Series<S>> {
        if !g.coeff(0).is_zero() {
            return Err(Error::InvalidParameter(
                "substitution requires a series with zero constant term".into(),
            ));
        }
        if g.denom != 0 {
            return Err(Error::InvalidParameter(
                "substitution requires an integral inner series".into(),
            ));
        }
        let trunc = self.trunc().min(g.trunc());
        let inner = g.truncated(trunc);
        let mut acc = Series::zero(&self.zp, trunc);
        for i in (0..self.trunc()).rev() {
            acc = acc.mul(&inner)?;
            acc.coeffs[0] = self.zp.add(&acc.coeffs[0], &self.coeff(i));
        }
        acc.denom = self.denom;
        Ok(acc)
    }

    /// (1+X)^e - computed by square and multiply over the bits of the residue e.
    ///
    /// For an exponent only known mod p^N the result is well defined mod
    /// p^{N - ceil(log_p M)}; callers account for that in their guards.
    pub fn one_plus_x_pow(zp: &Zp<S>, e: &S, trunc: usize) -> Series<S> {
        let mut base = Series::one(zp, trunc);
        if trunc > 1 {
            base.coeffs[1] = S::one();
        }
        let mut acc = Series::one(zp, trunc);
        for i in 0..e.bit_len() {
            if e.bit(i) {
                acc = acc.mul(&base).expect("same context");
            }
            base = base.mul(&base).expect("same context");
        }
        acc
    }

    /// phi(X) = (1+X)^p - 1 as an integral polynomial of degree p.
    pub fn phi_of_x(zp: &Zp<S>) -> Vec<S> {
        let p = zp.p();
        let mut row = binomial_row::<S>(zp, p);
        row[0] = S::zero(); // (1+X)^p - 1
        row
    }

    /// Frobenius: substitution X -> (1+X)^p - 1, computed by Horner against
    /// the degree-p polynomial phi(X).
    pub fn phi(&self) -> Series<S> {
        let poly = Series::phi_of_x(&self.zp);
        let trunc = self.trunc();
        let mut acc = Series::zero(&self.zp, trunc);
        for i in (0..trunc).rev() {
            acc = acc.mul_by_poly(&poly);
            acc.coeffs[0] = self.zp.add(&acc.coeffs[0], &self.coeff(i));
        }
        acc.denom = self.denom;
        acc
    }

    pub fn phi_iter(&self, times: u32) -> Series<S> {
        let mut s = self.clone();
        for _ in 0..times {
            s = s.phi();
        }
        s
    }

    /// Left inverse of phi. Writes f = sum_{i=0}^{p-1} (1+X)^i phi(f_i) and
    /// returns f_0; the decomposition is triangular in the basis
    /// z^i (z^p - 1)^m (z = 1+X), so no division by p ever occurs.
    pub fn psi(&self) -> Series<S> {
        let p = self.zp.p() as usize;
        let m = self.trunc();
        let out_len = m.div_ceil(p);
        let mut z = pi_to_z(&self.zp, &self.coeffs);
        let mut f0 = vec![S::zero(); out_len.max(1)];
        // binomials C(t, s) for t up to the largest inner degree
        let max_m = (m - 1) / p;
        let binom = pascal_table::<S>(&self.zp, max_m);
        for deg in (0..m).rev() {
            let c = z[deg].clone();
            if c.is_zero() {
                continue;
            }
            let i = deg % p;
            let mm = deg / p;
            if i == 0 {
                f0[mm] = c.clone();
            }
            // subtract c * z^i (z^p - 1)^mm
            for t in 0..=mm {
                let idx = i + p * t;
                let mut term = self.zp.mul(&c, &binom[mm][t]);
                if (mm - t) % 2 == 1 {
                    term = self.zp.neg(&term);
                }
                z[idx] = self.zp.sub(&z[idx], &term);
            }
            debug_assert!(z[deg].is_zero());
        }
        f0.truncate(out_len.max(1));
        Series { zp: self.zp.clone(), coeffs: f0, denom: self.denom }
    }

    /// Action of the group element with cyclotomic character value c (a unit
    /// residue): substitution X -> (1+X)^c - 1.
    pub fn gamma_act(&self, c: &S) -> Result<Series<S>> {
        if !self.zp.is_unit(c) {
            return Err(Error::NotAUnit(format!("gamma parameter {c}")));
        }
        let mut g = Series::one_plus_x_pow(&self.zp, c, self.trunc());
        g.coeffs[0] = self.zp.sub(&g.coeffs[0], &S::one());
        self.compose(&g)
    }

    /// The differential operator (1+X) d/dX. Shrinks the truncation order by
    /// one: the top output coefficient would need the first unstored term.
    pub fn partial(&self) -> Series<S> {
        let trunc = self.trunc().saturating_sub(1);
        let mut coeffs = vec![S::zero(); trunc];
        for i in 1..=trunc {
            let d = self.zp.mul(&self.coeffs[i], &self.zp.from_u64(i as u64));
            // contributes i*c_i to X^{i-1} and to X^i
            coeffs[i - 1] = self.zp.add(&coeffs[i - 1], &d);
            if i < trunc {
                coeffs[i] = self.zp.add(&coeffs[i], &d);
            }
        }
        Series { zp: self.zp.clone(), coeffs, denom: self.denom }
    }

    /// q = phi(X)/X = sum_{i=0}^{p-1} C(p, i+1) X^i.
    pub fn q_series(zp: &Zp<S>, trunc: usize) -> Series<S> {
        let p = zp.p();
        let row = binomial_row::<S>(zp, p);
        let mut coeffs = vec![S::zero(); trunc];
        for i in 0..(p as usize) {
            if i < trunc {
                coeffs[i] = row[i + 1].clone();
            }
        }
        Series { zp: zp.clone(), coeffs, denom: 0 }
    }

    /// (q - X^{p-1})/p, an integral unit series (in fact a polynomial):
    /// the exact inverse of delta.
    pub fn delta_inv_series(zp: &Zp<S>, trunc: usize) -> Series<S> {
        let p = zp.p();
        let mut coeffs = vec![S::zero(); trunc];
        // C(p, i+1) is divisible by p for 0 <= i <= p-2
        let mut c: u64 = p; // C(p,1)
        for i in 0..(p as usize - 1) {
            if i < trunc {
                coeffs[i] = zp.from_u64(c / p);
            }
            // C(p, i+2) from C(p, i+1)
            c = c * (p - (i as u64 + 1)) / (i as u64 + 2);
        }
        Series { zp: zp.clone(), coeffs, denom: 0 }
    }

    /// delta = p / (q - X^{p-1}), as the inverse of the unit series above.
    pub fn delta_series(zp: &Zp<S>, trunc: usize) -> Result<Series<S>> {
        Series::delta_inv_series(zp, trunc).invert_unit()
    }

    /// Inverse of a unit series (unit constant term), by back substitution.
    pub fn invert_unit(&self) -> Result<Series<S>> {
        let c0 = self.coeff(0);
        let inv0 = self.zp.inv_unit(&c0).map_err(|_| {
            Error::NotAUnit("series constant term is not a unit".into())
        })?;
        let trunc = self.trunc();
        let mut out = vec![S::zero(); trunc];
        out[0] = inv0.clone();
        for n in 1..trunc {
            let mut acc = S::zero();
            for i in 1..=n {
                if self.coeffs[i].is_zero() || out[n - i].is_zero() {
                    continue;
                }
                acc = self.zp.add(&acc, &self.zp.mul(&self.coeffs[i], &out[n - i]));
            }
            out[n] = self.zp.neg(&self.zp.mul(&inv0, &acc));
        }
        if self.denom != 0 {
            return Err(Error::InvalidParameter(
                "invert_unit expects an integral series; normalise first".into(),
            ));
        }
        Ok(Series { zp: self.zp.clone(), coeffs: out, denom: 0 })
    }

    /// mu = min_i ord_p(c_i), lambda = least index attaining it, on the
    /// numerator. Errors when every coefficient vanishes within precision.
    pub fn iwasawa_invariants(&self) -> Result<Invariants> {
        let mut best: Option<(u32, usize)> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if let Some(v) = self.zp.ord(c) {
                match best {
                    None => best = Some((v, i)),
                    Some((bv, _)) if v < bv => best = Some((v, i)),
                    _ => {}
                }
            }
        }
        match best {
            Some((mu, lambda)) => Ok(Invariants { mu, lambda }),
            None => Err(Error::Indeterminate(
                "all coefficients vanish within working precision".into(),
            )),
        }
    }
}

/// Lower bound from the Newton polygon of a (mu, lambda) series:
/// ord F(x) >= min((mu+1)/e, mu/e + lambda ord x), with equality guaranteed
/// when ord x < 1/(e lambda). Returns (bound, is_exact).
pub fn newton_lower_bound(inv: Invariants, e: u32, ord_x: ExtVal) -> (ExtVal, bool) {
    let e = e as i64;
    let mu = inv.mu as i64;
    let lambda = inv.lambda as i64;
    let a = ExtVal::rat(mu + 1, e);
    let b = ExtVal::Finite(Rat::new(mu, e)) + ord_x.scale(lambda);
    let bound = a.min(b);
    let exact = match ord_x {
        ExtVal::Infinity => lambda == 0,
        ExtVal::Finite(r) => lambda == 0 || r < Rat::new(1, e * lambda),
    };
    (bound, exact)
}

/// Row of binomial coefficients C(n, 0..=n) as residues.
pub fn binomial_row<S: Scalar>(zp: &Zp<S>, n: u64) -> Vec<S> {
    let mut row = vec![S::one()];
    for i in 0..n {
        let mut next = vec![S::one()];
        for j in 1..=(i as usize) {
            next.push(zp.add(&row[j - 1], &row[j]));
        }
        next.push(S::one());
        row = next;
    }
    row
}

/// Triangular Pascal table up to row `n` inclusive.
pub fn pascal_table<S: Scalar>(zp: &Zp<S>, n: usize) -> Vec<Vec<S>> {
    let mut rows: Vec<Vec<S>> = vec![vec![S::one()]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![S::one()];
        for j in 1..i {
            row.push(zp.add(&prev[j - 1], &prev[j]));
        }
        row.push(S::one());
        rows.push(row);
    }
    rows
}

/// Coefficients of f(z - 1) from the coefficients of f(X), i.e. the basis
/// change X = z - 1.
pub fn pi_to_z<S: Scalar>(zp: &Zp<S>, coeffs: &[S]) -> Vec<S> {
    rebase(zp, coeffs, true)
}

/// Coefficients of g(1 + X) from the coefficients of g(z).
pub fn z_to_pi<S: Scalar>(zp: &Zp<S>, coeffs: &[S]) -> Vec<S> {
    rebase(zp, coeffs, false)
}

fn rebase<S: Scalar>(zp: &Zp<S>, coeffs: &[S], minus: bool) -> Vec<S> {
    let n = coeffs.len();
    let mut out = vec![S::zero(); n];
    // Horner: f(z -+ 1) = (...((a_{n-1})(z -+ 1) + a_{n-2})...)
    for i in (0..n).rev() {
        // multiply out by (z -+ 1)
        for j in (0..n).rev() {
            let shifted = if j > 0 { out[j - 1].clone() } else { S::zero() };
            let same = if minus { zp.neg(&out[j]) } else { out[j].clone() };
            out[j] = zp.add(&shifted, &same);
        }
        out[0] = zp.add(&out[0], &coeffs[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Fast;

    fn zp(p: u64, n: u32) -> Zp<Fast> {
        Zp::new(p, n).unwrap()
    }

    #[test]
    fn ring_basics() {
        let zp = zp(5, 10);
        let a = Series::from_i64(&zp, &[1, 2, 3], 8);
        let b = Series::from_i64(&zp, &[4, 0, 1], 8);
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab.coeff(0), 4);
        assert_eq!(ab.coeff(1), 8);
        assert_eq!(ab.coeff(2), 13);
        assert_eq!(ab.coeff(3), 2);
        assert_eq!(ab.coeff(4), 3);
        assert_eq!(a.add(&b).unwrap().coeff(0), 5);
        assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn mixed_precision_reduces_to_min() {
        let a = Series::from_i64(&zp(5, 10), &[1, 1], 6);
        let b = Series::from_i64(&zp(5, 4), &[1], 9);
        let c = a.add(&b).unwrap();
        assert_eq!(c.zp().prec(), 4);
        assert_eq!(c.trunc(), 6);
    }

    #[test]
    fn rebase_round_trip() {
        let zp = zp(3, 8);
        let coeffs: Vec<Fast> = vec![5, 1, 0, 4, 2, 7];
        let z = pi_to_z(&zp, &coeffs);
        let back = z_to_pi(&zp, &z);
        assert_eq!(back, coeffs);
    }

    #[test]
    fn phi_matches_direct_substitution() {
        let zp = zp(3, 8);
        let f = Series::from_i64(&zp, &[2, 1, 5, 0, 1], 12);
        let mut g = Series::one_plus_x_pow(&zp, &3u128, 12);
        g = {
            let mut h = g.clone();
            h.coeffs[0] = zp.sub(&h.coeffs[0], &1u128);
            h
        };
        assert_eq!(f.phi(), f.compose(&g).unwrap());
    }

    #[test]
    fn psi_phi_is_identity() {
        let zp = zp(5, 8);
        // degree-7 polynomial with room for its full phi-image (degree 35)
        let f = Series::from_i64(&zp, &[3, 1, 4, 1, 5, 9, 2, 6], 50);
        let lifted = f.phi();
        let back = lifted.psi();
        for i in 0..10 {
            assert_eq!(back.coeff(i), f.coeff(i));
        }
        // psi((1+X) phi(f)) = 0
        let one_plus_x = Series::from_i64(&zp, &[1, 1], 50);
        let g = one_plus_x.mul(&f.truncated(50).phi()).unwrap();
        assert!(g.psi().is_zero());
    }

    #[test]
    fn psi_of_phi_product_recovers_factor() {
        // psi(phi(f) g) = f psi(g)
        let zp = zp(3, 8);
        let f = Series::from_i64(&zp, &[1, 2], 30);
        let g = Series::from_i64(&zp, &[0, 1, 1, 0, 2, 5], 30);
        let lhs = f.phi().mul(&g).unwrap().psi();
        let rhs = f.mul(&g.psi()).unwrap();
        for i in 0..8 {
            assert_eq!(lhs.coeff(i), rhs.coeff(i), "index {i}");
        }
    }

    #[test]
    fn q_and_delta() {
        let zp = zp(5, 10);
        // q * X = (1+X)^5 - 1
        let q = Series::<Fast>::q_series(&zp, 12);
        let x = Series::x(&zp, 12);
        let qx = q.mul(&x).unwrap();
        let mut phix = Series::zero(&zp, 12);
        for (i, c) in Series::phi_of_x(&zp).into_iter().enumerate() {
            phix.coeffs[i] = c;
        }
        assert_eq!(qx, phix);
        // delta * (q - X^{p-1}) = p
        let delta = Series::<Fast>::delta_series(&zp, 12).unwrap();
        let mut qm = q.clone();
        qm.coeffs[4] = zp.sub(&qm.coeffs[4], &1u128);
        let prod = delta.mul(&qm).unwrap();
        assert_eq!(prod.coeff(0), 5);
        for i in 1..12 {
            assert_eq!(prod.coeff(i), 0, "index {i}");
        }
        // delta is a unit congruent to 1 mod X at the constant term times 1/1
        assert!(zp.is_unit(&delta.coeff(0)));
    }

    #[test]
    fn gamma_action_is_a_group_action() {
        let zp = zp(5, 8);
        let f = Series::from_i64(&zp, &[1, 4, 0, 2, 3], 10);
        let a = zp.from_u64(7);
        let b = zp.from_u64(11);
        let lhs = f.gamma_act(&a).unwrap().gamma_act(&b).unwrap();
        let rhs = f.gamma_act(&zp.mul(&a, &b)).unwrap();
        // exponent only known mod p^N: compare with a one-digit guard
        let digits = zp.prec() - 1;
        assert!(lhs.sub(&rhs).unwrap().is_zero_mod(digits));
    }

    #[test]
    fn invariants_and_newton() {
        let zp = zp(5, 10);
        // 25 X + 5 X^3 + X^4(unit tail): mu = 0? no: coeffs 0,25,0,5,1
        let f = Series::from_i64(&zp, &[0, 25, 0, 5, 1, 5], 8);
        let inv = f.iwasawa_invariants().unwrap();
        assert_eq!(inv.mu, 0);
        assert_eq!(inv.lambda, 4);
        let (b, exact) = newton_lower_bound(Invariants { mu: 1, lambda: 1 }, 1, ExtVal::rat(1, 20));
        assert_eq!(b, ExtVal::rat(21, 20));
        assert!(exact);
        let (b, exact) = newton_lower_bound(Invariants { mu: 3, lambda: 0 }, 1, ExtVal::rat(1, 2));
        assert_eq!(b, ExtVal::int(3));
        assert!(exact);
        // boundary: ord x = 1/(e lambda) not exact
        let (_, exact) = newton_lower_bound(Invariants { mu: 0, lambda: 2 }, 1, ExtVal::rat(1, 2));
        assert!(!exact);
    }

    #[test]
    fn derivative_operator() {
        let zp = zp(3, 6);
        // (1+X) d/dX (X^2) = 2X + 2X^2
        let f = Series::from_i64(&zp, &[0, 0, 1], 6);
        let d = f.partial();
        assert_eq!(d.coeff(1), 2);
        assert_eq!(d.coeff(2), 2);
        assert_eq!(d.coeff(0), 0);
    }

    #[test]
    fn denominators_track_through_arithmetic() {
        let zp = zp(5, 10);
        let a = Series { zp: zp.clone(), coeffs: vec![1u128, 5, 0, 0], denom: 1 }; // (1 + 5X)/5
        let b = Series::from_i64(&zp, &[1], 4);
        let s = a.add(&b).unwrap();
        assert_eq!(s.denom(), 1);
        assert_eq!(s.coeff(0), 6); // (1 + 5)/5
        let m = a.mul(&a).unwrap();
        assert_eq!(m.denom(), 2);
        let n = Series { zp: zp.clone(), coeffs: vec![5u128, 25], denom: 1 }.normalized();
        assert_eq!(n.denom(), 0);
        assert_eq!(n.coeff(0), 1);
        assert_eq!(n.coeff(1), 5);
    }
}
