//! Kobayashi ranks (closed forms and a Smith-normal-form oracle), the
//! modesty selector tau(n, eta) with its q* valuations, the growth bound for
//! the n-th layer, and the Tamagawa-corrected growth identities.

use crate::cyclo::CycloRing;
use crate::error::{Error, Result};
use crate::linalg::{snf, Mat};
use crate::logmatrix::{self, FormParams};
use crate::scalar::Scalar;
use crate::series::Series;
use crate::valuation::{eps_order, ExtVal, Rat};

/// Symbolic parameters of a growth computation. Unlike [`FormParams`], the
/// valuation v and the ramification data (e, d, r) are free inputs, so the
/// formula layer covers ramified coefficient fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthParams {
    pub p: u64,
    pub k: u32,
    pub j: u32,
    /// v = ord_p(a_p), exact rational.
    pub v: Rat,
    /// Ramification index of the coefficient field.
    pub e: u32,
    /// Degree d = e * r of the coefficient field.
    pub d: u32,
    /// Residue degree.
    pub r: u32,
    pub n_min: u32,
    pub n_max: u32,
}

impl GrowthParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: u64,
        k: u32,
        j: u32,
        v: Rat,
        e: u32,
        d: u32,
        r: u32,
        n_min: u32,
        n_max: u32,
    ) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) {
            return Err(Error::InvalidParameter("p must be an odd prime".into()));
        }
        if !(3..=p as u32).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "weight k = {k} outside 3..=p (p = {p})"
            )));
        }
        if j == 0 || j > k - 1 {
            return Err(Error::InvalidParameter(format!(
                "twist j = {j} outside 1..=k-1"
            )));
        }
        if e == 0 || d == 0 || r == 0 || e * r != d {
            return Err(Error::InvalidParameter(format!(
                "ramification data must satisfy d = e*r (e = {e}, d = {d}, r = {r})"
            )));
        }
        if v <= Rat::from_integer(0) {
            return Err(Error::HypothesisViolated("v must be positive".into()));
        }
        if v * Rat::from_integer(2) <= Rat::new((k - 1) as i64, p as i64) {
            return Err(Error::HypothesisViolated(format!(
                "2v > (k-1)/p fails: v = {v}, k = {k}, p = {p}"
            )));
        }
        if n_min == 0 || n_min > n_max {
            return Err(Error::InvalidParameter(format!(
                "level range {n_min}..={n_max} is empty or starts at 0"
            )));
        }
        Ok(GrowthParams { p, k, j, v, e, d, r, n_min, n_max })
    }

    /// Growth parameters matching exact form data (e = d = r = 1).
    pub fn from_form<S: Scalar>(params: &FormParams<S>, n_min: u32, n_max: u32) -> Result<Self> {
        GrowthParams::new(
            params.p(),
            params.k(),
            params.j(),
            Rat::from_integer(params.v() as i64),
            1,
            1,
            1,
            n_min,
            n_max,
        )
    }

    fn pn_step(&self, n: u32) -> Rat {
        // p^n - p^{n-1}
        let p = self.p as i64;
        Rat::from_integer(p.pow(n) - p.pow(n - 1))
    }
}

/// Per-character invariants consumed by the growth formulas. The mu/lambda
/// pairs belong to the two fixed power series (Coleman images); kappa and
/// r_inf are the correction terms of the growth bound; the optional pair
/// (mu0, lambda0) describes the common submodule in the decomposition
/// identity; b_n are optional per-level Tamagawa valuations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CharacterInvariants {
    pub eta_index: u32,
    pub mu1: u32,
    pub mu2: u32,
    pub lambda1: u32,
    pub lambda2: u32,
    pub kappa1: u32,
    pub kappa2: u32,
    pub r_inf: u32,
    pub mu0: Option<u32>,
    pub lambda0: Option<u32>,
    /// (level, valuation) pairs.
    pub b_n: Option<Vec<(u32, i64)>>,
}

impl CharacterInvariants {
    pub fn validate(&self, params: &GrowthParams) -> Result<()> {
        for (name, kappa) in [("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if kappa > params.k - 1 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {kappa} exceeds k-1 = {}",
                    params.k - 1
                )));
            }
        }
        Ok(())
    }

    /// Derives (mu_i, lambda_i) from a supplied series and cross-checks the
    /// stored values.
    pub fn check_against_series<S: Scalar>(&self, i: u8, f: &Series<S>) -> Result<()> {
        let inv = f.iwasawa_invariants()?;
        let (mu, lambda) = match i {
            1 => (self.mu1, self.lambda1),
            2 => (self.mu2, self.lambda2),
            _ => return Err(Error::InvalidParameter("series index must be 1 or 2".into())),
        };
        if inv.mu != mu || inv.lambda != lambda as usize {
            return Err(Error::ContextMismatch(format!(
                "series {i} has invariants (mu, lambda) = ({}, {}), config says ({mu}, {lambda})",
                inv.mu, inv.lambda
            )));
        }
        Ok(())
    }
}

/// How a Kobayashi rank was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankMethod {
    /// e*lambda + (p^n - p^{n-1}) mu.
    ClosedFormB,
    /// lambda + (p^n - p^{n-1}) mu.
    ClosedFormC,
    /// Smith-normal-form lengths of the finite layers.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KobayashiRankResult {
    pub value: Rat,
    pub method: RankMethod,
    pub defined: bool,
}

/// Closed-form Kobayashi rank of the quotient by a series with invariants
/// (mu, lambda).
pub fn kobayashi_rank_closed(
    n: u32,
    mu: u32,
    lambda: u32,
    e: u32,
    p: u64,
    variant: RankMethod,
) -> Result<KobayashiRankResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("level must be at least 1".into()));
    }
    let step = Rat::from_integer((p as i64).pow(n) - (p as i64).pow(n - 1));
    let mu = Rat::from_integer(mu as i64);
    let lam = Rat::from_integer(lambda as i64);
    let value = match variant {
        RankMethod::ClosedFormB => Rat::from_integer(e as i64) * lam + step * mu,
        RankMethod::ClosedFormC => lam + step * mu,
        RankMethod::Oracle => {
            return Err(Error::InvalidParameter(
                "the oracle variant needs a series; use kobayashi_rank_oracle".into(),
            ))
        }
    };
    Ok(KobayashiRankResult { value, method: variant, defined: true })
}

/// First level at which the closed forms are exact: p^{n-1}(p-1) > e*lambda.
pub fn stabilization_threshold(p: u64, e: u32, lambda: u32) -> u32 {
    let mut n = 1u32;
    let bound = (e as u64) * (lambda as u64);
    while p.pow(n - 1) * (p - 1) <= bound {
        n += 1;
    }
    n
}

/// Lengths of the finite layers O[[X]]/(F, omega_n), via Smith normal form
/// of multiplication by F on (Z/p^N)[X]/(omega_n).
pub fn layer_length<S: Scalar>(f: &Series<S>, n: u32) -> Result<u64> {
    let zp = f.zp();
    if f.denom() != 0 {
        return Err(Error::InvalidParameter("series must be integral".into()));
    }
    let p = zp.p();
    if n == 0 {
        // omega_0 = X: the layer is O/F(0)
        return match zp.ord(&f.coeff(0)) {
            Some(v) => Ok(v as u64),
            None => Err(Error::RankUndefined(
                "F(0) vanishes at working precision: infinite layer".into(),
            )),
        };
    }
    let dim = p
        .checked_pow(n)
        .filter(|&d| d <= 1 << 16)
        .ok_or_else(|| Error::InvalidParameter(format!("p^{n} out of range")))? as usize;
    // omega_n = (1+X)^{p^n} - 1, monic of degree p^n:
    // X^{p^n} = -sum_{i<p^n} C(p^n, i') X^i below the top
    let omega = crate::series::binomial_row::<S>(zp, dim as u64);
    // fold F itself mod omega_n
    let mut base = vec![S::zero(); dim];
    let mut carry: Vec<S> = f.coeffs().to_vec();
    while let Some(top) = carry.pop() {
        let deg = carry.len();
        if deg < dim {
            carry.push(top);
            break;
        }
        if !top.is_zero() {
            // X^deg = X^{deg-dim} * X^dim; reduce the top power of X
            for i in 1..=dim {
                let t = zp.mul(&top, &omega[i]);
                if i == dim {
                    continue;
                }
                carry[deg - dim + i] = zp.sub(&carry[deg - dim + i], &t);
            }
        }
    }
    for (i, c) in carry.into_iter().enumerate() {
        base[i] = c;
    }
    // columns: X^j * F mod omega_n
    let mut mat = Mat::zero(dim, dim);
    let mut col = base;
    for j in 0..dim {
        for (i, c) in col.iter().enumerate() {
            mat.set(i, j, c.clone());
        }
        if j + 1 < dim {
            // multiply by X and reduce the top coefficient
            let top = col[dim - 1].clone();
            for i in (1..dim).rev() {
                col[i] = col[i - 1].clone();
            }
            col[0] = S::zero();
            if !top.is_zero() {
                // X^dim = -sum_{1<=i<dim} C(p^n, i) X^i
                for i in 1..dim {
                    let t = zp.mul(&top, &omega[i]);
                    col[i] = zp.sub(&col[i], &t);
                }
            }
        }
    }
    let rep = snf(zp, mat)?;
    if rep.free_rank() > 0 {
        return Err(Error::RankUndefined(format!(
            "multiplication by F drops rank by {} at level {n}: infinite layer",
            rep.free_rank()
        )));
    }
    rep.check_guard(2)?;
    Ok(rep.torsion_length())
}

/// Brute-force Kobayashi rank at level n: the difference of consecutive
/// layer lengths (the projection to the lower layer is onto, so its kernel
/// length is exactly this difference).
pub fn kobayashi_rank_oracle<S: Scalar>(f: &Series<S>, n: u32) -> Result<KobayashiRankResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("level must be at least 1".into()));
    }
    let s_n = layer_length(f, n)?;
    let s_prev = layer_length(f, n - 1)?;
    Ok(KobayashiRankResult {
        value: Rat::from_integer(s_n as i64 - s_prev as i64),
        method: RankMethod::Oracle,
        defined: true,
    })
}

/// Per-level ranks of a synthetic finite tower with lengths s_n (measured
/// over Z_p) and residue degree r: r * rank = s_n - s_{n-1} must hold with
/// the rank an integer.
pub fn finite_tower_ranks(s: &[u64], r: u32) -> Result<Vec<Rat>> {
    if r == 0 {
        return Err(Error::InvalidParameter("residue degree must be positive".into()));
    }
    let mut out = Vec::new();
    for w in s.windows(2) {
        let diff = w[1] as i64 - w[0] as i64;
        if diff % r as i64 != 0 {
            return Err(Error::RankUndefined(format!(
                "length step {diff} is not a multiple of the residue degree {r}"
            )));
        }
        out.push(Rat::new(diff, r as i64));
    }
    Ok(out)
}

/// The selector tau(n, eta), by the verbatim parity inequalities.
pub fn modesty_tau(n: u32, inv: &CharacterInvariants, params: &GrowthParams) -> u8 {
    let e = Rat::from_integer(params.e as i64);
    let m1 = Rat::from_integer(inv.mu1 as i64) / e;
    let m2 = Rat::from_integer(inv.mu2 as i64) / e;
    let margin = params.v + Rat::new((params.k - 1) as i64, params.p as i64 + 1);
    let first = if n % 2 == 1 {
        m1 + margin <= m2
    } else {
        m1 < m2 + margin
    };
    if first {
        1
    } else {
        2
    }
}

/// First-row closed-form entry (1, tau) at level n, in ord_p normalisation,
/// by the verbatim displayed formulas (`swapped = false`) or the
/// recursion-consistent odd-level variant (`swapped = true`).
fn closed_entry(n: u32, tau: u8, params: &GrowthParams, swapped: bool) -> Result<Rat> {
    if n == 0 || !(tau == 1 || tau == 2) {
        return Err(Error::InvalidParameter("need n >= 1 and tau in {1,2}".into()));
    }
    let p = params.p as i64;
    let km1 = (params.k - 1) as i64;
    let sum = |upto: u32, odd_exponents: bool| -> Rat {
        let mut s = Rat::from_integer(0);
        for i in 1..=upto {
            let e = if odd_exponents { 2 * i - 1 } else { 2 * i };
            s += Rat::new(km1, p.pow(e));
        }
        s
    };
    let value = if n % 2 == 1 {
        let half = (n - 1) / 2;
        match (tau, swapped) {
            (1, false) => params.v + sum(half, true),
            (2, false) => sum(half, false),
            (1, true) => params.v + sum(half, false),
            (2, true) => sum(half, true),
            _ => unreachable!(),
        }
    } else {
        let half = n / 2;
        if tau == 1 {
            sum(half, true)
        } else {
            params.v + sum(half - 1, false)
        }
    };
    Ok(value)
}

/// q*_n: the eps-normalised closed-form valuation of the (1, tau) companion
/// entry at eps_n, by the verbatim displayed formulas.
pub fn q_star(n: u32, tau: u8, params: &GrowthParams) -> Result<Rat> {
    let entry = closed_entry(n, tau, params, false)?;
    match eps_order(ExtVal::Finite(entry), params.p, n) {
        ExtVal::Finite(v) => Ok(v),
        ExtVal::Infinity => unreachable!("finite entry stays finite"),
    }
}

/// q*_n from the recursion-consistent closed form (odd-level first-row
/// entries exchanged); agrees with [`q_star`] at n = 1 and even n, and with
/// the exact oracle at every n.
pub fn q_star_swapped(n: u32, tau: u8, params: &GrowthParams) -> Result<Rat> {
    let entry = closed_entry(n, tau, params, true)?;
    match eps_order(ExtVal::Finite(entry), params.p, n) {
        ExtVal::Finite(v) => Ok(v),
        ExtVal::Infinity => unreachable!("finite entry stays finite"),
    }
}

/// Exact-oracle q*_n: the eps-normalised valuation of the (1, tau) entry of
/// the inverse-Mellin companion evaluated at eps_n in the cyclotomic ring.
/// Returns the value and the precision guard behind it.
pub fn q_star_exact<S: Scalar>(form: &FormParams<S>, n: u32, tau: u8) -> Result<(Rat, u32)> {
    if !(tau == 1 || tau == 2) {
        return Err(Error::InvalidParameter("tau must be 1 or 2".into()));
    }
    let (ring, row) = logmatrix::script_h_row_at_eps(form, n)?;
    let rep = ring.valuation(&row[(tau - 1) as usize]);
    match eps_order(rep.value, form.p(), n) {
        ExtVal::Finite(v) => Ok((v, rep.guard)),
        ExtVal::Infinity => Err(Error::Indeterminate(
            "companion entry vanishes at working precision".into(),
        )),
    }
}

/// Exact-oracle check of the valuation bookkeeping for a supplied Coleman
/// series: ord_{eps_n} of (companion entry) * F(eps_n) equals
/// q*_n + ord_{eps_n} F(eps_n), both sides computed in the cyclotomic ring.
pub fn q_star_with_series<S: Scalar>(
    form: &FormParams<S>,
    n: u32,
    tau: u8,
    f: &Series<S>,
) -> Result<(Rat, Rat)> {
    let (ring, row) = logmatrix::script_h_row_at_eps(form, n)?;
    let entry = &row[(tau - 1) as usize];
    let (fe, _tail) = ring.eval_series_at_eps(f);
    let prod = ring.mul(entry, &fe);
    let lhs = eps_order(ring.valuation(&prod).value, form.p(), n);
    let rhs = eps_order(ring.valuation(entry).value, form.p(), n)
        + eps_order(ring.valuation(&fe).value, form.p(), n);
    match (lhs, rhs) {
        (ExtVal::Finite(a), ExtVal::Finite(b)) => Ok((a, b)),
        _ => Err(Error::Indeterminate("vanishing factor in the q* product".into())),
    }
}

/// The growth bound of the n-th layer with its per-term breakdown:
/// total = d * (q* + lambda_tau + (p^n - p^{n-1}) mu_tau / e + kappa - r_inf / e).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShaBound {
    pub n: u32,
    pub tau: u8,
    pub q_star: Rat,
    /// lambda_tau + (p^n - p^{n-1}) mu_tau / e.
    pub nabla: Rat,
    pub kappa: u32,
    /// r_inf / e.
    pub r_inf_term: Rat,
    pub total: Rat,
}

impl ShaBound {
    /// Recomposes the bound from the attached terms (no hidden arithmetic).
    pub fn recompose(&self, d: u32) -> Rat {
        Rat::from_integer(d as i64)
            * (self.q_star + self.nabla + Rat::from_integer(self.kappa as i64) - self.r_inf_term)
    }
}

pub fn sha_growth_bound(
    n: u32,
    inv: &CharacterInvariants,
    params: &GrowthParams,
) -> Result<ShaBound> {
    inv.validate(params)?;
    let tau = modesty_tau(n, inv, params);
    let (mu, lambda, kappa) = if tau == 1 {
        (inv.mu1, inv.lambda1, inv.kappa1)
    } else {
        (inv.mu2, inv.lambda2, inv.kappa2)
    };
    let q = q_star(n, tau, params)?;
    let e = Rat::from_integer(params.e as i64);
    let nabla = Rat::from_integer(lambda as i64)
        + params.pn_step(n) * Rat::from_integer(mu as i64) / e;
    let r_inf_term = Rat::from_integer(inv.r_inf as i64) / e;
    let total = Rat::from_integer(params.d as i64)
        * (q + nabla + Rat::from_integer(kappa as i64) - r_inf_term);
    Ok(ShaBound { n, tau, q_star: q, nabla, kappa, r_inf_term, total })
}

/// The decomposition identity for the dual module attached to the i-th
/// Coleman map: nabla X_i = nabla(Lambda / Col_i) + nabla X_0 - e kappa_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NablaDecomposition {
    /// nabla(Lambda / Col_i) from the closed form.
    pub quotient_term: Rat,
    /// nabla X_0 from (mu0, lambda0), when supplied.
    pub x0_term: Option<Rat>,
    /// e * kappa_i.
    pub kappa_term: Rat,
    /// The decomposed value, when x0 is available.
    pub value: Option<Rat>,
    /// Reduced invariants mu_i - mu0 and lambda_i - lambda0, when available.
    pub reduced: Option<(i64, i64)>,
}

pub fn nabla_x_i(
    n: u32,
    inv: &CharacterInvariants,
    params: &GrowthParams,
    i: u8,
) -> Result<NablaDecomposition> {
    let (mu, lambda, kappa) = match i {
        1 => (inv.mu1, inv.lambda1, inv.kappa1),
        2 => (inv.mu2, inv.lambda2, inv.kappa2),
        _ => return Err(Error::InvalidParameter("index must be 1 or 2".into())),
    };
    let quotient_term =
        kobayashi_rank_closed(n, mu, lambda, params.e, params.p, RankMethod::ClosedFormC)?.value;
    let kappa_term = Rat::from_integer((params.e * kappa) as i64);
    let (x0_term, value, reduced) = match (inv.mu0, inv.lambda0) {
        (Some(m0), Some(l0)) => {
            let x0 =
                kobayashi_rank_closed(n, m0, l0, params.e, params.p, RankMethod::ClosedFormC)?
                    .value;
            let val = quotient_term + x0 - kappa_term;
            let red = (mu as i64 - m0 as i64, lambda as i64 - l0 as i64);
            (Some(x0), Some(val), Some(red))
        }
        _ => (None, None, None),
    };
    Ok(NablaDecomposition { quotient_term, x0_term, kappa_term, value, reduced })
}

/// Kernel length from consecutive Tamagawa valuations:
/// b_{n+1} - b_n - p^{n-1}(p-1) n (k-j-1). Negative values indicate
/// inconsistent inputs (a length cannot be negative).
pub fn tamagawa_defect(n: u32, b_n: i64, b_next: i64, params: &GrowthParams) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidParameter("level must be at least 1".into()));
    }
    let p = params.p as i64;
    let corr = p.pow(n - 1) * (p - 1) * n as i64 * (params.k - 1 - params.j) as i64;
    Ok(b_next - b_n - corr)
}

/// Tamagawa-corrected growth delta:
/// t_{n+1} - t_n = q* + nabla + kappa - r_inf + p^{n-1}(p-1) n (k-j-1).
pub fn tamagawa_growth_delta(
    n: u32,
    inv: &CharacterInvariants,
    params: &GrowthParams,
) -> Result<Rat> {
    let bound = sha_growth_bound(n, inv, params)?;
    let p = params.p as i64;
    let corr = Rat::from_integer(
        p.pow(n - 1) * (p - 1) * n as i64 * (params.k - 1 - params.j) as i64,
    );
    Ok(bound.total / Rat::from_integer(params.d as i64) + corr)
}

/// Outcome of the modesty comparison at level n: which of the two
/// eps-normalised companion-column valuations is smaller, against the branch
/// the mu-inequalities predict for large n of the same parity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModestyCompare {
    pub n: u32,
    pub left: Rat,
    pub right: Rat,
    /// 1 if left < right, 2 if right < left, 0 on a tie.
    pub smaller: u8,
    /// Predicted asymptotic branch (1 or 2), when decidable.
    pub predicted: Option<u8>,
    /// First level of the same parity from which the outcome matches the
    /// prediction (the deciding sequences are monotone per parity).
    pub threshold: Option<u32>,
    pub agrees: bool,
    /// The deciding margin (k-1)/(p+1).
    pub limit: Rat,
}

fn compare_sides(n: u32, inv: &CharacterInvariants, params: &GrowthParams) -> Result<(Rat, Rat)> {
    let e = Rat::from_integer(params.e as i64);
    let step = params.pn_step(n);
    let left = Rat::from_integer(inv.lambda1 as i64)
        + step * (Rat::from_integer(inv.mu1 as i64) / e + closed_entry(n, 1, params, false)?);
    let right = Rat::from_integer(inv.lambda2 as i64)
        + step * (Rat::from_integer(inv.mu2 as i64) / e + closed_entry(n, 2, params, false)?);
    Ok((left, right))
}

pub fn cor_modesty_compare(
    n: u32,
    inv: &CharacterInvariants,
    params: &GrowthParams,
) -> Result<ModestyCompare> {
    let (left, right) = compare_sides(n, inv, params)?;
    let smaller = match left.cmp(&right) {
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Greater => 2,
        std::cmp::Ordering::Equal => 0,
    };
    let limit = Rat::new((params.k - 1) as i64, params.p as i64 + 1);
    // asymptotic branch: the (p^n - p^{n-1})-scaled coefficients dominate
    let e = Rat::from_integer(params.e as i64);
    let m1 = Rat::from_integer(inv.mu1 as i64) / e;
    let m2 = Rat::from_integer(inv.mu2 as i64) / e;
    // limits of the closed-form entries along the fixed parity of n
    let km1 = Rat::from_integer((params.k - 1) as i64);
    let p = Rat::from_integer(params.p as i64);
    let psq = p * p - Rat::from_integer(1);
    let (l1, l2) = if n % 2 == 1 {
        (params.v + km1 * p / psq, km1 / psq)
    } else {
        (km1 * p / psq, params.v + km1 / psq)
    };
    let c1 = m1 + l1;
    let c2 = m2 + l2;
    let predicted = match c1.cmp(&c2) {
        std::cmp::Ordering::Less => Some(1),
        std::cmp::Ordering::Greater => Some(2),
        std::cmp::Ordering::Equal => None,
    };
    let (threshold, agrees) = match predicted {
        Some(branch) => {
            let mut t = None;
            let mut m = if n % 2 == 1 { 1 } else { 2 };
            while m <= n {
                let (l, r) = compare_sides(m, inv, params)?;
                let s = if l < r { 1 } else { 2 };
                if s == branch {
                    t = Some(m);
                    break;
                }
                m += 2;
            }
            (t, t.is_none_or(|t0| n < t0 || smaller == branch))
        }
        None => (None, true),
    };
    Ok(ModestyCompare { n, left, right, smaller, predicted, threshold, agrees, limit })
}

/// Newton-polygon transport of (mu, lambda) under the twisted inverse
/// Mellin step and companion checks live in the series and iwasawa modules;
/// this helper exposes the stabilised layer range for the oracle suites.
pub fn oracle_levels(p: u64, e: u32, lambda: u32, n_max: u32) -> Vec<u32> {
    (stabilization_threshold(p, e, lambda)..=n_max).collect()
}

/// Exact twist-compatibility data at one level: ord_p F(eps_n), of its
/// Mellin transform at eps_{n+1}, and of its twist at eps_n.
pub fn twist_orders<S: Scalar>(
    lam: &crate::iwasawa::Lambda<S>,
    f: &Series<S>,
    n: u32,
) -> Result<[ExtVal; 3]> {
    let zp = lam.zp();
    let ring_n = CycloRing::new(zp, n)?;
    let ring_next = CycloRing::new(zp, n + 1)?;
    // F at eps_n
    let (fe, _) = ring_n.eval_series_at_eps(f);
    let v0 = ring_n.valuation(&fe).value;
    // Mellin transform at eps_{n+1}: sum of the (1+X)-basis coefficients of
    // F mod omega_n against zeta^{u^c}
    let omega = lam.omega(n)?;
    let fm = crate::iwasawa::poly_rem(zp, f.coeffs().to_vec(), omega.coeffs())?;
    let fm_series = Series::new(zp.clone(), fm, f.denom());
    let coeffs_z = crate::series::pi_to_z(zp, fm_series.coeffs());
    let pnext = (zp.p() as u128).pow(n + 1) as u64;
    let mut e: u64 = 1;
    let u = 1 + zp.p();
    let mut terms = Vec::new();
    for c in coeffs_z.iter() {
        if !c.is_zero() {
            terms.push((e, c.clone()));
        }
        e = ((e as u128 * u as u128) % pnext as u128) as u64;
    }
    let me = ring_next.from_zeta_powers(&terms);
    let v1 = ring_next.valuation(&me).value;
    // twist at eps_n: F(u(1+eps_n) - 1)
    let tw = lam.twist(&lam.from_component(0, f.clone(), f.trunc()), 1)?;
    let twf = tw.component((zp.p() as usize - 2) % (zp.p() as usize - 1)).clone();
    let (te, _) = ring_n.eval_series_at_eps(&twf);
    let v2 = ring_n.valuation(&te).value;
    Ok([v0, v1, v2])
}
