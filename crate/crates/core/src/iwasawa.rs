//! The Iwasawa algebra O[Delta][[X]], its isotypic decomposition, the omega
//! polynomial family, the twist operator and the Mellin transform together
//! with its finite-level inverse.
//!
//! Group-theoretic conventions: Gamma = Delta x Gamma_1 is the Galois group of
//! the p-cyclotomic tower, Delta of order p-1, Gamma_1 topologically generated
//! by a fixed gamma_1 with chi(gamma_1) = u = 1 + p. X = gamma_1 - 1. A
//! character of Delta is a power omega^b of the Teichmuller character.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::linalg::{snf, solve_unit, Mat, SnfReport};
use crate::padic::Zp;
use crate::scalar::{Scalar, Wide};
use crate::series::{pi_to_z, z_to_pi, Series};

/// The image of the fixed topological generator under the cyclotomic
/// character: a principal unit that is not 1 mod p^2.
#[derive(Clone, Debug)]
pub struct CyclotomicUnit<S: Scalar> {
    pub value: S,
}

impl<S: Scalar> CyclotomicUnit<S> {
    pub fn new(zp: &Zp<S>, value: S) -> Result<Self> {
        if zp.prec() < 2 {
            return Err(Error::InvalidParameter(
                "cyclotomic unit needs at least two digits of precision".into(),
            ));
        }
        let v = value.to_biguint();
        let p = BigUint::from(zp.p());
        if &v % &p != BigUint::from(1u32) || &v % (&p * &p) == BigUint::from(1u32) {
            return Err(Error::InvalidParameter(
                "chi(gamma) must be 1 mod p but not 1 mod p^2".into(),
            ));
        }
        Ok(CyclotomicUnit { value })
    }
}

/// An element of the Iwasawa algebra, stored as its p-1 isotypic components.
/// Component `b` is the part on which Delta acts through omega^b.
#[derive(Clone, Debug)]
pub struct IwasawaElement<S: Scalar> {
    components: Vec<Series<S>>,
}

impl<S: Scalar> IwasawaElement<S> {
    /// Wraps a full vector of isotypic components; the caller vouches for the
    /// count (p-1) and the shared context.
    pub(crate) fn from_raw(components: Vec<Series<S>>) -> Self {
        IwasawaElement { components }
    }

    pub fn components(&self) -> &[Series<S>] {
        &self.components
    }

    pub fn component(&self, b: usize) -> &Series<S> {
        &self.components[b]
    }

    /// The component on which Delta acts trivially.
    pub fn gamma1_part(&self) -> &Series<S> {
        &self.components[0]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, Series::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, Series::sub)
    }

    /// Isotypic components multiply componentwise: the projectors e_eta are
    /// orthogonal idempotents.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, Series::mul)
    }

    pub fn scale(&self, c: &S) -> Self {
        IwasawaElement {
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn is_zero_mod(&self, digits: u32) -> bool {
        self.components.iter().all(|f| f.is_zero_mod(digits))
    }

    fn zip(
        &self,
        other: &Self,
        f: impl Fn(&Series<S>, &Series<S>) -> Result<Series<S>>,
    ) -> Result<Self> {
        if self.components.len() != other.components.len() {
            return Err(Error::ContextMismatch("component counts differ".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_>>()?;
        Ok(IwasawaElement { components })
    }
}

/// Context for Lambda = O[Delta][[X]] at a fixed prime and precision.
#[derive(Clone, Debug)]
pub struct Lambda<S: Scalar> {
    zp: Zp<S>,
    p: u64,
    teich: Vec<S>,
    teich_inv: Vec<S>,
    u: S,
    u_inv: S,
    inv_p_minus_1: S,
}

/// Outcome of a Mellin bijectivity check: the rank of the basis matrix, how
/// many of its elementary divisors are units, the rank of the target psi = 0
/// subspace computed from the psi matrix, and the common expected value.
#[derive(Clone, Debug)]
pub struct RankCheck {
    pub map_rank: usize,
    pub map_units: usize,
    pub target_rank: usize,
    pub expected: usize,
}

impl RankCheck {
    pub fn bijective(&self) -> bool {
        self.map_rank == self.expected
            && self.map_units == self.expected
            && self.target_rank == self.expected
    }
}

impl<S: Scalar> Lambda<S> {
    pub fn new(zp: Zp<S>) -> Result<Self> {
        let p = zp.p();
        if zp.prec() < 2 {
            return Err(Error::InvalidParameter(
                "Iwasawa algebra context needs precision at least 2".into(),
            ));
        }
        let mut teich = vec![S::zero(); p as usize];
        let mut teich_inv = vec![S::zero(); p as usize];
        for r in 1..p as usize {
            teich[r] = zp.teichmuller(r as u64);
            teich_inv[r] = zp.inv_unit(&teich[r])?;
        }
        let u = zp.from_u64(1 + p);
        CyclotomicUnit::new(&zp, u.clone())?;
        let u_inv = zp.inv_unit(&u)?;
        let inv_p_minus_1 = zp.inv_unit(&zp.from_u64(p - 1))?;
        Ok(Lambda { zp, p, teich, teich_inv, u, u_inv, inv_p_minus_1 })
    }

    pub fn zp(&self) -> &Zp<S> {
        &self.zp
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// chi(gamma_1) = 1 + p.
    pub fn u(&self) -> &S {
        &self.u
    }

    pub fn teichmuller(&self, r: usize) -> &S {
        &self.teich[r]
    }

    fn unit_pow_i64(&self, a: &S, a_inv: &S, e: i64) -> S {
        if e >= 0 {
            self.zp.pow_u64(a, e as u64)
        } else {
            self.zp.pow_u64(a_inv, e.unsigned_abs())
        }
    }

    pub fn from_components(&self, components: Vec<Series<S>>) -> Result<IwasawaElement<S>> {
        if components.len() != (self.p - 1) as usize {
            return Err(Error::ContextMismatch(format!(
                "expected {} isotypic components, got {}",
                self.p - 1,
                components.len()
            )));
        }
        Ok(IwasawaElement { components })
    }

    pub fn zero_elem(&self, trunc: usize) -> IwasawaElement<S> {
        IwasawaElement {
            components: (0..self.p - 1).map(|_| Series::zero(&self.zp, trunc)).collect(),
        }
    }

    pub fn one_elem(&self, trunc: usize) -> IwasawaElement<S> {
        IwasawaElement {
            components: (0..self.p - 1).map(|_| Series::one(&self.zp, trunc)).collect(),
        }
    }

    /// Element supported on a single isotypic component.
    pub fn from_component(&self, b: usize, f: Series<S>, trunc: usize) -> IwasawaElement<S> {
        let mut e = self.zero_elem(trunc);
        e.components[b] = f;
        e
    }

    /// omega_n(X) = (1+X)^{p^n} - 1 as an exact polynomial.
    pub fn omega(&self, n: u32) -> Result<Series<S>> {
        let pn = checked_p_pow(self.p, n)?;
        let mut row = crate::series::binomial_row(&self.zp, pn);
        row[0] = S::zero();
        Ok(Series::new(self.zp.clone(), row, 0))
    }

    /// omega_{n,i}(X) = omega_n(u^{-i}(1+X) - 1) = u^{-i p^n} (1+X)^{p^n} - 1.
    pub fn omega_twisted(&self, n: u32, i: u32) -> Result<Series<S>> {
        let pn = checked_p_pow(self.p, n)?;
        let s = self.zp.pow_u64(&self.u_inv, i as u64 * pn);
        let mut row = crate::series::binomial_row(&self.zp, pn);
        for c in row.iter_mut() {
            *c = self.zp.mul(c, &s);
        }
        row[0] = self.zp.sub(&row[0], &S::one());
        Ok(Series::new(self.zp.clone(), row, 0))
    }

    /// omega-tilde_{n,m} = prod_{i=0}^{m} omega_{n,i}.
    pub fn omega_tilde(&self, n: u32, m: u32) -> Result<Series<S>> {
        let pn = checked_p_pow(self.p, n)? as usize;
        let trunc = (m as usize + 1) * pn + 1;
        let mut acc = Series::one(&self.zp, trunc);
        for i in 0..=m {
            let f = self.omega_twisted(n, i)?.truncated(trunc);
            acc = acc.mul(&f)?;
        }
        Ok(acc)
    }

    /// Tw^m: substitutes X <- u^m(1+X) - 1 in each component and shifts the
    /// isotypic index by -m (Tw maps e_eta to e_{eta omega^{-1}}).
    ///
    /// The substitution is affine, so polynomial inputs transform exactly.
    pub fn twist(&self, g: &IwasawaElement<S>, m: i64) -> Result<IwasawaElement<S>> {
        let s = self.unit_pow_i64(&self.u, &self.u_inv, m);
        let c0 = self.zp.sub(&s, &S::one());
        let d = (self.p - 1) as i64;
        let mut out: Vec<Option<Series<S>>> = vec![None; d as usize];
        for (b, f) in g.components.iter().enumerate() {
            let nb = ((b as i64 - m) % d + d) % d;
            out[nb as usize] = Some(compose_affine(f, &c0, &s));
        }
        Ok(IwasawaElement { components: out.into_iter().map(Option::unwrap).collect() })
    }

    /// Brings all components to a common denominator exponent and strips it.
    fn common_denom(&self, g: &IwasawaElement<S>) -> Result<(Vec<Series<S>>, u32)> {
        let denom = g.components.iter().map(Series::denom).max().unwrap_or(0);
        let mut out = Vec::with_capacity(g.components.len());
        for f in &g.components {
            let lift = self.zp.pow_u64(&self.zp.from_u64(self.p), (denom - f.denom()) as u64);
            out.push(Series::new(self.zp.clone(), f.coeffs().iter().map(|c| self.zp.mul(c, &lift)).collect(), 0));
        }
        Ok((out, denom))
    }

    /// Group-basis coordinates: x[r-1][c] is the coefficient of
    /// delta_r gamma_1^c, where delta_r in Delta is the preimage of
    /// r in (Z/p)^*. Treats the stored component coefficients as polynomials.
    pub fn to_group_basis(&self, g: &IwasawaElement<S>) -> Result<(Vec<Vec<S>>, u32)> {
        let (comps, denom) = self.common_denom(g)?;
        let len = comps.iter().map(Series::trunc).max().unwrap_or(0);
        // a[b][c]: coefficients of component b in the (1+X)^c basis
        let a: Vec<Vec<S>> = comps
            .iter()
            .map(|f| {
                let mut cs = f.coeffs().to_vec();
                cs.resize(len, S::zero());
                pi_to_z(&self.zp, &cs)
            })
            .collect();
        let d = (self.p - 1) as usize;
        let mut rows = vec![vec![S::zero(); len]; d];
        for r in 1..=d {
            // t_r^{-b} powers accumulated on the fly
            let mut w = S::one();
            for (b, ab) in a.iter().enumerate() {
                let _ = b;
                for c in 0..len {
                    let t = self.zp.mul(&w, &ab[c]);
                    rows[r - 1][c] = self.zp.add(&rows[r - 1][c], &t);
                }
                w = self.zp.mul(&w, &self.teich_inv[r]);
            }
            for c in 0..len {
                rows[r - 1][c] = self.zp.mul(&rows[r - 1][c], &self.inv_p_minus_1);
            }
        }
        Ok((rows, denom))
    }

    /// Inverse of [`Lambda::to_group_basis`].
    pub fn from_group_basis(&self, rows: &[Vec<S>], denom: u32) -> Result<IwasawaElement<S>> {
        let d = (self.p - 1) as usize;
        if rows.len() != d {
            return Err(Error::ContextMismatch("wrong group-basis row count".into()));
        }
        let len = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut components = Vec::with_capacity(d);
        for b in 0..d {
            let mut zb = vec![S::zero(); len];
            for (r, row) in rows.iter().enumerate() {
                let w = self.zp.pow_u64(&self.teich[r + 1], b as u64);
                for c in 0..row.len() {
                    let t = self.zp.mul(&w, &row[c]);
                    zb[c] = self.zp.add(&zb[c], &t);
                }
            }
            components.push(Series::new(self.zp.clone(), z_to_pi(&self.zp, &zb), denom));
        }
        Ok(IwasawaElement { components })
    }

    /// The Mellin transform: the group element delta_r gamma_1^c acts on 1+pi
    /// by raising it to chi = teich(r) u^c, extended linearly. Computed from
    /// the group-basis coordinates, so every term is an exact power of 1+pi.
    pub fn mellin(&self, g: &IwasawaElement<S>, trunc: usize) -> Result<Series<S>> {
        let (rows, denom) = self.to_group_basis(g)?;
        let mut acc = Series::zero(&self.zp, trunc);
        for (r, row) in rows.iter().enumerate() {
            let mut e = self.teich[r + 1].clone();
            for c in row {
                if !c.is_zero() {
                    let pw = Series::one_plus_x_pow(&self.zp, &e, trunc);
                    acc = acc.add(&pw.scale(c))?;
                }
                e = self.zp.mul(&e, &self.u);
            }
        }
        Ok(Series::new(self.zp.clone(), acc.coeffs().to_vec(), denom))
    }

    /// The Mellin transform computed the other way: Horner evaluation of each
    /// component at the operator X: f -> f((1+pi)^u - 1) - f, applied to the
    /// transform of the isotypic projector. Used as a cross-check of
    /// [`Lambda::mellin`]; the Gamma-action substitution loses a few digits at
    /// large truncation, as documented on `gamma_act`.
    pub fn mellin_operator(&self, g: &IwasawaElement<S>, trunc: usize) -> Result<Series<S>> {
        let (comps, denom) = self.common_denom(g)?;
        let mut total = Series::zero(&self.zp, trunc);
        for (b, f) in comps.iter().enumerate() {
            let mut base = Series::zero(&self.zp, trunc);
            for r in 1..self.p as usize {
                let w = self.zp.pow_u64(&self.teich_inv[r], b as u64);
                let pw = Series::one_plus_x_pow(&self.zp, &self.teich[r], trunc);
                base = base.add(&pw.scale(&w))?;
            }
            base = base.scale(&self.inv_p_minus_1);
            let mut acc = Series::zero(&self.zp, trunc);
            for i in (0..f.trunc()).rev() {
                acc = acc.gamma_act(&self.u)?.sub(&acc)?;
                acc = acc.add(&base.scale(&f.coeff(i)))?;
            }
            total = total.add(&acc)?;
        }
        Ok(Series::new(self.zp.clone(), total.coeffs().to_vec(), denom))
    }

    /// Finite-level inverse Mellin transform: the unique g mod omega_{n-1}
    /// whose transform agrees with h modulo the n-th Frobenius iterate of pi.
    ///
    /// Works in Z_p[z]/(z^{p^n} - 1) where group elements become monomials:
    /// rebase to z, fold exponents, and read off discrete logarithms.
    /// Coefficients on p-divisible exponents must vanish to `psi_tol` digits,
    /// otherwise the input is not in the psi = 0 subspace.
    pub fn mellin_inverse(
        &self,
        h: &Series<S>,
        n: u32,
        psi_tol: u32,
    ) -> Result<IwasawaElement<S>> {
        if n == 0 {
            return Err(Error::InvalidParameter("level must be at least 1".into()));
        }
        let pell = checked_p_pow(self.p, n)? as usize;
        let zc = pi_to_z(&self.zp, h.coeffs());
        let mut folded = vec![S::zero(); pell];
        for (j, c) in zc.iter().enumerate() {
            folded[j % pell] = self.zp.add(&folded[j % pell], c);
        }
        let table = self.dlog_table(n)?;
        let deg = pell / self.p as usize;
        let d = (self.p - 1) as usize;
        let mut rows = vec![vec![S::zero(); deg]; d];
        for (e, c) in folded.iter().enumerate() {
            if (e as u64).is_multiple_of(self.p) {
                if let Some(v) = self.zp.ord(c) {
                    if v < psi_tol {
                        return Err(Error::NotPsiZero(format!(
                            "coefficient at p-divisible exponent {e} has valuation {v} < {psi_tol}"
                        )));
                    }
                }
            } else {
                let (r, cc) = table[&(e as u64)];
                rows[r - 1][cc] = c.clone();
            }
        }
        self.from_group_basis(&rows, h.denom())
    }

    /// Discrete-logarithm table at level n: unit exponent e mod p^n maps to
    /// the pair (r, c) with e = teich(r) u^c.
    fn dlog_table(&self, n: u32) -> Result<HashMap<u64, (usize, usize)>> {
        let pell = checked_p_pow(self.p, n)?;
        let um = (1 + self.p) % pell;
        let mut table = HashMap::new();
        for r in 1..self.p as usize {
            let tr = (self.teich[r].to_biguint() % pell).to_u64().expect("reduced");
            let mut e = tr;
            for c in 0..(pell / self.p).max(1) as usize {
                table.insert(e, (r, c));
                e = ((e as u128 * um as u128) % pell as u128) as u64;
            }
        }
        Ok(table)
    }

    /// Inverse Mellin transform modulo omega-tilde_{n-1,m}, against the
    /// modulus phi^n(pi^{m+1}). Solves the linear system over Z/p^N in the
    /// basis delta_r (1+X)^c prod_{i<e} omega_{n-1,i}.
    pub fn mellin_inverse_extended(
        &self,
        h: &Series<S>,
        n: u32,
        m: u32,
        psi_tol: u32,
    ) -> Result<IwasawaElement<S>> {
        let mut out = self.mellin_inverse_extended_batch(std::slice::from_ref(h), n, m, psi_tol)?;
        Ok(out.pop().expect("one input, one output"))
    }

    /// Batched variant of [`Self::mellin_inverse_extended`]: several inputs
    /// against the same level share one basis construction and one
    /// elimination.
    pub fn mellin_inverse_extended_batch(
        &self,
        hs: &[Series<S>],
        n: u32,
        m: u32,
        psi_tol: u32,
    ) -> Result<Vec<IwasawaElement<S>>> {
        if n == 0 {
            return Err(Error::InvalidParameter("level must be at least 1".into()));
        }
        if hs.is_empty() {
            return Ok(Vec::new());
        }
        let ring = ZRing::new(&self.zp, n, m as usize + 1)?;
        let (cols, index) = self.extended_basis_columns(&ring, n)?;
        let a = Mat::from_columns(ring.dim(), &cols);
        let rhs_cols: Vec<Vec<S>> = hs
            .iter()
            .map(|h| ring.fold_poly(&pi_to_z(&self.zp, h.coeffs())))
            .collect();
        let rhs = Mat::from_columns(ring.dim(), &rhs_cols);
        let sol = solve_unit(&self.zp, &a, &rhs).map_err(|e| match e {
            Error::SingularSystem(msg) => Error::PrecisionExhausted(msg),
            e => e,
        })?;
        if sol.residual_digits < psi_tol {
            return Err(Error::NotPsiZero(format!(
                "system residual vanishes only to {} digits, needed {}",
                sol.residual_digits, psi_tol
            )));
        }
        // assemble isotypic components from the solved coordinates
        let deg = checked_p_pow(self.p, n - 1)? as usize;
        let trunc = (m as usize + 1) * deg;
        // prefix products of the twisted omega polynomials, in the z basis
        let mut prods = vec![Series::one(&self.zp, trunc)];
        for i in 0..m {
            let f = self.omega_twisted(n - 1, i)?.truncated(trunc);
            let last = prods.last().unwrap().clone();
            prods.push(last.mul(&f)?);
        }
        let prods_z: Vec<Vec<S>> =
            prods.iter().map(|f| pi_to_z(&self.zp, f.coeffs())).collect();
        let d = (self.p - 1) as usize;
        let mut out = Vec::with_capacity(hs.len());
        for (hi, h) in hs.iter().enumerate() {
            let mut rows = vec![vec![S::zero(); trunc]; d];
            for (col, &(r, c, e)) in index.iter().enumerate() {
                let x = sol.x.get(col, hi);
                if x.is_zero() {
                    continue;
                }
                // (1+X)^c * prods[e] in the z basis is a shift by c
                for (j, pc) in prods_z[e].iter().enumerate() {
                    if c + j < trunc {
                        let t = self.zp.mul(x, pc);
                        rows[r - 1][c + j] = self.zp.add(&rows[r - 1][c + j], &t);
                    }
                }
            }
            out.push(self.from_group_basis(&rows, h.denom())?);
        }
        Ok(out)
    }

    /// Columns of the extended Mellin basis matrix, with their (r, c, e)
    /// labels: r the Delta coordinate, c the gamma_1 exponent, e the number
    /// of twisted omega factors.
    #[allow(clippy::type_complexity)]
    fn extended_basis_columns(
        &self,
        ring: &ZRing<S>,
        n: u32,
    ) -> Result<(Vec<Vec<S>>, Vec<(usize, usize, usize)>)> {
        let exp = ring.exp_ctx();
        let u_w = exp.from_u64(1 + self.p);
        let pnm1 = checked_p_pow(self.p, n - 1)?;
        let deg = pnm1 as usize;
        let nil = ring.nil();
        // substitution table for gamma_1^{p^{n-1}}: z^j -> z^{U j}
        let u_big = exp.pow_u64(&u_w, pnm1);
        let mut subst = Vec::with_capacity(ring.dim());
        for j in 0..ring.dim() {
            let ej = exp.mul(&u_big, &exp.from_u64(j as u64));
            subst.push(ring.monomial_big(&ej));
        }
        let mut cols = Vec::new();
        let mut index = Vec::new();
        for r in 1..self.p as usize {
            let tr = exp.teichmuller(r as u64);
            for c in 0..deg {
                let e0 = exp.mul(&tr, &exp.pow_u64(&u_w, c as u64));
                let mut w = ring.monomial_big(&e0);
                cols.push(w.clone());
                index.push((r, c, 0));
                for e in 1..nil {
                    // apply omega_{n-1,e-1} = u^{-(e-1)p^{n-1}} gamma_1^{p^{n-1}} - 1
                    let s = self.zp.pow_u64(&self.u_inv, (e as u64 - 1) * pnm1);
                    let mut next = vec![S::zero(); ring.dim()];
                    for (j, wj) in w.iter().enumerate() {
                        if wj.is_zero() {
                            continue;
                        }
                        for (t, st) in subst[j].iter().enumerate() {
                            let v = self.zp.mul(wj, st);
                            next[t] = self.zp.add(&next[t], &v);
                        }
                    }
                    for (t, nt) in next.iter_mut().enumerate() {
                        let scaled = self.zp.mul(nt, &s);
                        *nt = self.zp.sub(&scaled, &w[t]);
                    }
                    w = next;
                    cols.push(w.clone());
                    index.push((r, c, e));
                }
            }
        }
        Ok((cols, index))
    }

    /// Bijectivity check of the finite-level Mellin transform: the basis
    /// {sigma (1+pi) : sigma in Gamma/Gamma_n} against the modulus
    /// phi^{n+1}(pi). Both the basis rank and the rank of the target psi = 0
    /// subspace are computed through Smith normal form oracles.
    pub fn mellin_rank(&self, n: u32) -> Result<RankCheck> {
        let ring = ZRing::new(&self.zp, n + 1, 1)?;
        let exp = ring.exp_ctx();
        let u_w = exp.from_u64(1 + self.p);
        let pn = checked_p_pow(self.p, n)? as usize;
        let mut cols = Vec::new();
        for r in 1..self.p as usize {
            let tr = exp.teichmuller(r as u64);
            let mut e = tr;
            for _ in 0..pn {
                cols.push(ring.monomial_big(&e));
                e = exp.mul(&e, &u_w);
            }
        }
        let a = Mat::from_columns(ring.dim(), &cols);
        let rep = snf(&self.zp, a)?;
        let target = self.psi_kernel_rank(n + 1, 1)?;
        let expected = (self.p as usize - 1) * pn;
        Ok(RankCheck {
            map_rank: rank_of(&rep),
            map_units: rep.unit_rank(),
            target_rank: target,
            expected,
        })
    }

    /// Same bijectivity check for the extended quotients: Lambda modulo
    /// omega-tilde_{n-1,m} against the modulus phi^n(pi^{m+1}).
    pub fn mellin_rank_extended(&self, n: u32, m: u32) -> Result<RankCheck> {
        let ring = ZRing::new(&self.zp, n, m as usize + 1)?;
        let (cols, _) = self.extended_basis_columns(&ring, n)?;
        let a = Mat::from_columns(ring.dim(), &cols);
        let rep = snf(&self.zp, a)?;
        let target = self.psi_kernel_rank(n, m as usize + 1)?;
        let expected = (self.p as usize - 1)
            * checked_p_pow(self.p, n - 1)? as usize
            * (m as usize + 1);
        Ok(RankCheck {
            map_rank: rank_of(&rep),
            map_units: rep.unit_rank(),
            target_rank: target,
            expected,
        })
    }

    /// Rank of the kernel of psi on Z_p[z]/(z^{p^ell} - 1)^{nil}, computed as
    /// dim - rank(psi matrix). psi sends z^j to z^{j/p} when p | j and kills
    /// the other monomials.
    fn psi_kernel_rank(&self, ell: u32, nil: usize) -> Result<usize> {
        let dim = checked_p_pow(self.p, ell)? as usize * nil;
        let tdim = checked_p_pow(self.p, ell - 1)? as usize * nil;
        let mut cols = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut col = vec![S::zero(); tdim];
            if (j as u64).is_multiple_of(self.p) {
                col[j / self.p as usize] = S::one();
            }
            cols.push(col);
        }
        let rep = snf(&self.zp, Mat::from_columns(tdim, &cols))?;
        if rep.unit_rank() != rank_of(&rep) {
            return Err(Error::PrecisionExhausted(
                "psi matrix has non-unit elementary divisors".into(),
            ));
        }
        Ok(dim - rank_of(&rep))
    }

    /// Componentwise polynomial reduction by a fixed modulus with unit
    /// leading coefficient (the omega family).
    pub fn reduce_mod(
        &self,
        g: &IwasawaElement<S>,
        modulus: &Series<S>,
    ) -> Result<IwasawaElement<S>> {
        let components = g
            .components
            .iter()
            .map(|f| {
                let rem = poly_rem(&self.zp, f.coeffs().to_vec(), modulus.coeffs())?;
                Ok(Series::new(self.zp.clone(), rem, f.denom()))
            })
            .collect::<Result<_>>()?;
        Ok(IwasawaElement { components })
    }
}

fn rank_of(rep: &SnfReport) -> usize {
    rep.pivot_vals.iter().filter(|v| v.is_some()).count()
}

fn checked_p_pow(p: u64, n: u32) -> Result<u64> {
    p.checked_pow(n)
        .filter(|v| *v < (1 << 62))
        .ok_or_else(|| Error::InvalidParameter(format!("p^{n} out of range")))
}

/// f(c0 + c1 X) by Horner, treating the stored coefficients as a polynomial.
/// The inner polynomial is linear, so degrees do not grow and nothing is cut.
fn compose_affine<S: Scalar>(f: &Series<S>, c0: &S, c1: &S) -> Series<S> {
    let zp = f.zp().clone();
    let n = f.trunc();
    let mut acc = vec![S::zero(); n];
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let shifted = if j > 0 { zp.mul(&acc[j - 1], c1) } else { S::zero() };
            acc[j] = zp.add(&zp.mul(&acc[j], c0), &shifted);
        }
        acc[0] = zp.add(&acc[0], &f.coeff(i));
    }
    Series::new(zp, acc, f.denom())
}

/// Remainder of `num` by a polynomial with unit leading coefficient.
pub(crate) fn poly_rem<S: Scalar>(zp: &Zp<S>, mut num: Vec<S>, modpoly: &[S]) -> Result<Vec<S>> {
    let d = modpoly
        .iter()
        .rposition(|c| !c.is_zero())
        .ok_or_else(|| Error::InvalidParameter("zero modulus polynomial".into()))?;
    if d == 0 {
        return Err(Error::InvalidParameter("constant modulus polynomial".into()));
    }
    let lead_inv = zp.inv_unit(&modpoly[d])?;
    for i in (d..num.len()).rev() {
        if num[i].is_zero() {
            continue;
        }
        let f = zp.mul(&num[i], &lead_inv);
        for j in 0..=d {
            let t = zp.mul(&f, &modpoly[j]);
            num[i - d + j] = zp.sub(&num[i - d + j], &t);
        }
    }
    num.truncate(d);
    Ok(num)
}

/// Z_p[z]/(z^{p^ell} - 1)^{nil}: the finite-level model of the pi-side.
/// Elements are coefficient vectors of length p^ell * nil; huge monomial
/// exponents reduce through z^{p^ell} = 1 + t with t nilpotent of order nil.
pub struct ZRing<S: Scalar> {
    zp: Zp<S>,
    pell: usize,
    nil: usize,
    exp: Zp<Wide>,
    pell_big: BigUint,
}

impl<S: Scalar> ZRing<S> {
    pub fn new(zp: &Zp<S>, ell: u32, nil: usize) -> Result<Self> {
        let p = zp.p();
        let pell = checked_p_pow(p, ell)? as usize;
        if nil == 0 || nil as u64 >= p {
            return Err(Error::InvalidParameter(
                "nilpotency order must be positive and below p".into(),
            ));
        }
        // exponents are carried at ell extra digits so that both the residue
        // mod p^ell and the quotient mod p^N come out exactly
        let exp = Zp::<Wide>::new(p, zp.prec() + ell)?;
        Ok(ZRing { zp: zp.clone(), pell, nil, exp, pell_big: BigUint::from(pell) })
    }

    pub fn dim(&self) -> usize {
        self.pell * self.nil
    }

    pub fn nil(&self) -> usize {
        self.nil
    }

    pub fn exp_ctx(&self) -> &Zp<Wide> {
        &self.exp
    }

    /// z^e for an exponent residue carried in the extended context.
    pub fn monomial_big(&self, e: &BigUint) -> Vec<S> {
        let s = (e % &self.pell_big).to_u64().expect("p^ell fits u64") as usize;
        let q = (e - BigUint::from(s)) / &self.pell_big;
        self.monomial_parts(s, self.zp.from_biguint(&q))
    }

    pub fn monomial_usize(&self, j: usize) -> Vec<S> {
        self.monomial_parts(j % self.pell, self.zp.from_u64((j / self.pell) as u64))
    }

    /// z^s (1 + t)^q with t = z^{p^ell} - 1: binomially expanded, using that
    /// t has nilpotency order `nil` and all needed factorials are units.
    fn monomial_parts(&self, s: usize, q: S) -> Vec<S> {
        let zp = &self.zp;
        let mut binom = Vec::with_capacity(self.nil);
        binom.push(S::one());
        for j in 1..self.nil {
            let factor = zp.sub(&q, &zp.from_u64(j as u64 - 1));
            let prev = zp.mul(&binom[j - 1], &factor);
            let inv_j = zp.inv_unit(&zp.from_u64(j as u64)).expect("j < p is a unit");
            binom.push(zp.mul(&prev, &inv_j));
        }
        let mut out = vec![S::zero(); self.dim()];
        // t^j = sum_i C(j,i)(-1)^{j-i} z^{i p^ell}
        for i in 0..self.nil {
            let mut w = S::zero();
            for j in i..self.nil {
                let mut c = zp.mul(&binom[j], &binomial_u64(zp, j as u64, i as u64));
                if (j - i) % 2 == 1 {
                    c = zp.neg(&c);
                }
                w = zp.add(&w, &c);
            }
            out[s + i * self.pell] = w;
        }
        out
    }

    /// Reduction of a plain polynomial into the ring.
    pub fn fold_poly(&self, coeffs: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        for (j, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j < self.dim() && j / self.pell == 0 {
                out[j] = self.zp.add(&out[j], c);
            } else {
                let m = self.monomial_usize(j);
                for (t, mt) in m.iter().enumerate() {
                    if !mt.is_zero() {
                        let v = self.zp.mul(c, mt);
                        out[t] = self.zp.add(&out[t], &v);
                    }
                }
            }
        }
        out
    }
}

fn binomial_u64<S: Scalar>(zp: &Zp<S>, n: u64, k: u64) -> S {
    if k > n {
        return S::zero();
    }
    let mut acc = S::one();
    for i in 0..k {
        acc = zp.mul(&acc, &zp.from_u64(n - i));
        let inv = zp.inv_unit(&zp.from_u64(i + 1)).expect("small factorial");
        acc = zp.mul(&acc, &inv);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Fast;

    fn lambda(p: u64, n: u32) -> Lambda<Fast> {
        Lambda::new(Zp::new(p, n).unwrap()).unwrap()
    }

    #[test]
    fn omega_small_cases() {
        let l = lambda(5, 10);
        let w0 = l.omega(0).unwrap();
        assert_eq!(w0.coeffs(), &[0, 1][..]);
        let w1 = l.omega(1).unwrap();
        assert_eq!(w1.coeffs(), &[0, 5, 10, 10, 5, 1][..]);
        let t = l.omega_twisted(2, 0).unwrap();
        assert_eq!(t.coeffs(), l.omega(2).unwrap().coeffs());
    }

    #[test]
    fn omega_tilde_degree() {
        let l = lambda(3, 8);
        let w = l.omega_tilde(1, 2).unwrap();
        let deg = w.coeffs().iter().rposition(|c| *c != 0).unwrap();
        assert_eq!(deg, 9); // (m+1) p^n = 3 * 3
    }

    #[test]
    fn twist_group_law() {
        let l = lambda(5, 12);
        let comps = (0..4)
            .map(|b| Series::from_i64(l.zp(), &[b as i64 + 2, 7, 0, 3, 1], 5))
            .collect();
        let g = l.from_components(comps).unwrap();
        let round = l.twist(&l.twist(&g, 1).unwrap(), -1).unwrap();
        let diff = round.sub(&g).unwrap();
        assert!(diff.is_zero_mod(12));
    }

    #[test]
    fn twist_preserves_invariants() {
        let l = lambda(5, 12);
        let f = Series::from_i64(l.zp(), &[25, 5, 1, 3, 0, 0], 6);
        let g = l.from_component(1, f.clone(), 6);
        let tw = l.twist(&g, 2).unwrap();
        // component moved from index 1 to index 1 - 2 = 3 mod 4
        let moved = tw.component(3);
        let a = f.iwasawa_invariants().unwrap();
        let b = moved.iwasawa_invariants().unwrap();
        assert_eq!((a.mu, a.lambda), (b.mu, b.lambda));
        assert!(tw.component(0).is_zero());
    }

    #[test]
    fn group_basis_round_trip() {
        let l = lambda(7, 9);
        let comps = (0..6)
            .map(|b| Series::from_i64(l.zp(), &[1 + b as i64, 2, 3 * b as i64, 4], 4))
            .collect();
        let g = l.from_components(comps).unwrap();
        let (rows, denom) = l.to_group_basis(&g).unwrap();
        let back = l.from_group_basis(&rows, denom).unwrap();
        assert!(back.sub(&g).unwrap().is_zero_mod(9));
    }

    #[test]
    fn mellin_of_one_and_gamma() {
        let l = lambda(5, 10);
        let one = l.one_elem(1);
        let h = l.mellin(&one, 8).unwrap();
        assert_eq!(h.coeffs(), Series::from_i64(l.zp(), &[1, 1, 0, 0, 0, 0, 0, 0], 8).coeffs());
        // gamma_1 = 1 + X in every component
        let gamma = l
            .from_components((0..4).map(|_| Series::from_i64(l.zp(), &[1, 1], 2)).collect())
            .unwrap();
        let h = l.mellin(&gamma, 8).unwrap();
        let expect = Series::one_plus_x_pow(l.zp(), &l.zp().from_u64(6), 8);
        assert!(h.sub(&expect).unwrap().is_zero());
    }

    #[test]
    fn mellin_lands_in_psi_zero() {
        let l = lambda(3, 10);
        let comps = (0..2)
            .map(|b| Series::from_i64(l.zp(), &[2 + b as i64, 5, 1], 3))
            .collect();
        let g = l.from_components(comps).unwrap();
        let m = 60;
        let h = l.mellin(&g, m).unwrap();
        let psi = h.psi();
        // the truncation tail feeds back into low coefficients, but only with
        // high p-valuation: check the visible window
        for i in 0..6 {
            let ord = l.zp().ord(&psi.coeff(i));
            assert!(ord.is_none_or(|v| v >= 5), "psi coefficient {i}: {ord:?}");
        }
    }

    #[test]
    fn mellin_operator_agrees() {
        let l = lambda(3, 10);
        let comps = (0..2)
            .map(|b| Series::from_i64(l.zp(), &[1, 2 + b as i64, 3], 3))
            .collect();
        let g = l.from_components(comps).unwrap();
        let a = l.mellin(&g, 30).unwrap();
        let b = l.mellin_operator(&g, 30).unwrap();
        assert!(a.sub(&b).unwrap().is_zero_mod(6));
    }

    #[test]
    fn mellin_twist_is_derivative() {
        let l = lambda(5, 12);
        let comps = (0..4)
            .map(|b| Series::from_i64(l.zp(), &[2, 1 + b as i64, 0, 4], 4))
            .collect();
        let g = l.from_components(comps).unwrap();
        let lhs = l.mellin(&l.twist(&g, 1).unwrap(), 25).unwrap();
        let rhs = l.mellin(&g, 25).unwrap().partial();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn mellin_inverse_round_trip() {
        let l = lambda(3, 12);
        let comps = (0..2)
            .map(|b| Series::from_i64(l.zp(), &[1 + b as i64, 4, 2], 3))
            .collect();
        let g = l.from_components(comps).unwrap();
        let m = 9 * 7; // folding mod phi^2(pi) is then good to about 7 digits
        let h = l.mellin(&g, m).unwrap();
        let back = l.mellin_inverse(&h, 2, 5).unwrap();
        assert!(back.sub(&g).unwrap().is_zero_mod(5));
    }

    #[test]
    fn mellin_inverse_rejects_psi_nonzero() {
        let l = lambda(3, 10);
        // (1+pi)^3 has psi equal to 1+pi, not 0
        let bad = Series::from_i64(l.zp(), &[1, 3, 3, 1, 0, 0, 0, 0, 0], 9);
        assert!(matches!(
            l.mellin_inverse(&bad, 1, 10),
            Err(Error::NotPsiZero(_))
        ));
    }

    #[test]
    fn mellin_rank_small() {
        let l = lambda(3, 8);
        let c = l.mellin_rank(1).unwrap();
        assert_eq!(c.expected, 6);
        assert!(c.bijective(), "{c:?}");
    }

    #[test]
    fn mellin_rank_extended_small() {
        let l = lambda(3, 8);
        let c = l.mellin_rank_extended(1, 1).unwrap();
        assert_eq!(c.expected, 4);
        assert!(c.bijective(), "{c:?}");
    }

    #[test]
    fn extended_inverse_round_trip() {
        let l = lambda(3, 12);
        // element already reduced mod omega-tilde_{0,1}: components of degree < 2
        let comps = (0..2)
            .map(|b| Series::from_i64(l.zp(), &[2 + b as i64, 5], 2))
            .collect();
        let g = l.from_components(comps).unwrap();
        let h = l.mellin(&g, 9 * 8).unwrap();
        let back = l.mellin_inverse_extended(&h, 1, 1, 4).unwrap();
        let wt = l.omega_tilde(0, 1).unwrap();
        let diff = l.reduce_mod(&back.sub(&g).unwrap(), &wt).unwrap();
        assert!(diff.is_zero_mod(4), "{diff:?}");
    }

    #[test]
    fn newton_bridge() {
        let l = lambda(3, 12);
        let zp = l.zp();
        // f = p + pi^3: mu = 0, lambda = 3
        let f = Series::from_i64(zp, &[3, 0, 0, 1], 4);
        let inv_f = f.iwasawa_invariants().unwrap();
        let h = Series::from_i64(zp, &[0, 1], 2)
            .add(&Series::one(zp, 2))
            .unwrap()
            .truncated(40)
            .mul(&f.truncated(40).phi())
            .unwrap();
        let g = l.mellin_inverse(&h, 3, 12).unwrap();
        let (rows, _) = l.to_group_basis(&g).unwrap();
        // supported on the trivial Delta coordinate
        assert!(rows[1].iter().all(|c| *c == 0));
        let series = Series::new(zp.clone(), z_to_pi(zp, &rows[0]), 0);
        let inv_g = series.iwasawa_invariants().unwrap();
        assert_eq!((inv_f.mu, inv_f.lambda), (inv_g.mu, inv_g.lambda));
    }

    #[test]
    fn zring_monomial_consistency() {
        let zp = Zp::<Fast>::new(3, 8).unwrap();
        let ring = ZRing::new(&zp, 1, 2).unwrap();
        // degree 5 is below the dimension, so the monomial is untouched
        let m = ring.monomial_usize(5);
        assert_eq!(m, vec![0, 0, 0, 0, 0, 1]);
        // z^7 = z * (1+t)^2 = z(1 + 2t) = -z + 2 z^4 mod t^2
        let m7 = ring.monomial_usize(7);
        let zp7 = &ring.zp;
        assert_eq!(m7, vec![0, zp7.from_i64(-1), 0, 0, zp7.from_u64(2), 0]);
        // folding x^5 as a polynomial gives the same answer
        let poly = [0, 0, 0, 0, 0, 1].map(|v| zp.from_u64(v)).to_vec();
        assert_eq!(ring.fold_poly(&poly), m);
        // big-exponent path agrees on small exponents
        let big = ring.monomial_big(&BigUint::from(5u32));
        assert_eq!(big, m);
    }
}
