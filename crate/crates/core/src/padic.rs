//! Exact arithmetic for p-adic integers at fixed absolute precision.
//!
//! Every value is a residue mod `p^M` together with the context `(p, M)` that
//! produced it. Arithmetic is zealous: results are exact mod `p^M`, zero
//! tests mean "congruent to 0 mod `p^M`", and the only way to lose precision
//! is the explicit [`PadicScalar::exact_divide`], which strips a known power
//! of `p` and shrinks `M` accordingly.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Rational exponents for the value group `p^Q`.
pub type Rational = Ratio<i64>;

#[derive(Debug, PartialEq, Eq)]
struct CtxInner {
    p: u64,
    abs_prec: u32,
    modulus: u64,
}

/// The pair `(p, M)`: values are known mod `p^M`.
///
/// Cloning is cheap; contexts compare equal when `p` and `M` agree.
#[derive(Clone, Debug)]
pub struct PrecisionContext(Arc<CtxInner>);

impl PartialEq for PrecisionContext {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.abs_prec == other.0.abs_prec
    }
}
impl Eq for PrecisionContext {}

impl PrecisionContext {
    /// Create a context for the prime `p` at absolute precision `M >= 1`.
    ///
    /// `p^M` must fit in a `u64`; larger moduli are rejected with
    /// [`Error::PrecisionOverflow`].
    pub fn new(p: u64, abs_prec: u32) -> Result<Self> {
        if p < 2 || abs_prec == 0 {
            return Err(Error::InvalidInput(format!(
                "need a prime p >= 2 and M >= 1, got p={p}, M={abs_prec}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        let mut modulus: u64 = 1;
        for _ in 0..abs_prec {
            modulus = modulus.checked_mul(p).ok_or(Error::PrecisionOverflow)?;
        }
        Ok(PrecisionContext(Arc::new(CtxInner { p, abs_prec, modulus })))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn abs_prec(&self) -> u32 {
        self.0.abs_prec
    }

    pub fn modulus(&self) -> u64 {
        self.0.modulus
    }

    /// The same prime at a lower absolute precision.
    pub fn truncated(&self, abs_prec: u32) -> Result<Self> {
        PrecisionContext::new(self.0.p, abs_prec)
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar { residue: 0, ctx: self.clone() }
    }

    pub fn one(&self) -> PadicScalar {
        PadicScalar { residue: 1 % self.modulus(), ctx: self.clone() }
    }

    /// Reduce a signed integer into the context.
    pub fn scalar(&self, value: i64) -> PadicScalar {
        let m = self.modulus() as i128;
        let r = ((value as i128 % m) + m) % m;
        PadicScalar { residue: r as u64, ctx: self.clone() }
    }

    pub fn scalar_from_u64(&self, value: u64) -> PadicScalar {
        PadicScalar { residue: value % self.modulus(), ctx: self.clone() }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Exponent of an absolute value in `p^Q ∪ {0}`, i.e. `|x| = p^{-v}`.
///
/// `AtFloor(b)` records that only the lower bound `v >= b` is known (the
/// residue vanished at working precision), while `Infinite` is an exact zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueExponent {
    Finite(Rational),
    AtFloor(Rational),
    Infinite,
}

impl ValueExponent {
    pub fn finite(v: impl Into<Rational>) -> Self {
        ValueExponent::Finite(v.into())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ValueExponent::Finite(_))
    }

    pub fn as_finite(&self) -> Option<Rational> {
        match self {
            ValueExponent::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Exponent of a product: exponents add.
    pub fn add(&self, other: &Self) -> Self {
        use ValueExponent::*;
        match (self, other) {
            (Infinite, _) | (_, Infinite) => Infinite,
            (Finite(a), Finite(b)) => Finite(a + b),
            (Finite(a), AtFloor(b)) | (AtFloor(a), Finite(b)) | (AtFloor(a), AtFloor(b)) => {
                AtFloor(a + b)
            }
        }
    }

    /// Exponent of a sum's sharpest ultrametric bound: the minimum.
    ///
    /// A floor bound only survives when it could undercut the finite side.
    pub fn min(&self, other: &Self) -> Self {
        use ValueExponent::*;
        match (self, other) {
            (Infinite, x) | (x, Infinite) => x.clone(),
            (Finite(a), Finite(b)) => Finite(*a.min(b)),
            (Finite(a), AtFloor(b)) | (AtFloor(b), Finite(a)) => {
                if b >= a {
                    Finite(*a)
                } else {
                    AtFloor(*b)
                }
            }
            (AtFloor(a), AtFloor(b)) => AtFloor(*a.min(b)),
        }
    }
}

impl fmt::Display for ValueExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExponent::Finite(v) => write!(f, "{v}"),
            ValueExponent::AtFloor(v) => write!(f, ">={v}"),
            ValueExponent::Infinite => write!(f, "inf"),
        }
    }
}

/// An element of `Z/p^M`, carrying its context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicScalar {
    residue: u64,
    ctx: PrecisionContext,
}

impl PadicScalar {
    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    pub fn is_unit(&self) -> bool {
        self.residue % self.ctx.p() != 0
    }

    fn check_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let m = self.ctx.modulus() as u128;
        let r = (self.residue as u128 + other.residue as u128) % m;
        Ok(PadicScalar { residue: r as u64, ctx: self.ctx.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let m = self.ctx.modulus() as u128;
        let r = (self.residue as u128 + m - other.residue as u128) % m;
        Ok(PadicScalar { residue: r as u64, ctx: self.ctx.clone() })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let m = self.ctx.modulus() as u128;
        let r = (self.residue as u128 * other.residue as u128) % m;
        Ok(PadicScalar { residue: r as u64, ctx: self.ctx.clone() })
    }

    pub fn neg(&self) -> Self {
        let m = self.ctx.modulus();
        PadicScalar { residue: if self.residue == 0 { 0 } else { m - self.residue }, ctx: self.ctx.clone() }
    }

    /// The unique multiplicative inverse mod `p^M`; fails on non-units.
    pub fn inv(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NonUnitInverse);
        }
        let m = self.ctx.modulus();
        // extended Euclid on (residue, p^M)
        let (mut r0, mut r1) = (self.residue as i128, m as i128);
        let (mut s0, mut s1) = (1i128, 0i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        let inv = ((s0 % m as i128) + m as i128) % m as i128;
        Ok(PadicScalar { residue: inv as u64, ctx: self.ctx.clone() })
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let m = self.ctx.modulus() as u128;
        let mut base = self.residue as u128;
        let mut acc: u128 = 1 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        PadicScalar { residue: acc as u64, ctx: self.ctx.clone() }
    }

    /// Smallest `k` with `p^k | residue`, or the precision floor for zero.
    pub fn valuation(&self) -> ValueExponent {
        if self.residue == 0 {
            return ValueExponent::AtFloor(Rational::from_integer(self.ctx.abs_prec() as i64));
        }
        let p = self.ctx.p();
        let mut r = self.residue;
        let mut k = 0i64;
        while r % p == 0 {
            r /= p;
            k += 1;
        }
        ValueExponent::Finite(Rational::from_integer(k))
    }

    /// Integer valuation when it is known exactly; `None` at the floor.
    pub fn valuation_exact(&self) -> Option<u32> {
        match self.valuation() {
            ValueExponent::Finite(v) => Some(*v.numer() as u32),
            _ => None,
        }
    }

    /// Divide by `p^k` exactly, shrinking the absolute precision to `M - k`.
    pub fn exact_divide(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Ok(self.clone());
        }
        if k >= self.ctx.abs_prec() {
            return Err(Error::InexactDivision(k));
        }
        let mut q: u64 = 1;
        for _ in 0..k {
            q *= self.ctx.p();
        }
        if self.residue % q != 0 {
            return Err(Error::InexactDivision(k));
        }
        let ctx = self.ctx.truncated(self.ctx.abs_prec() - k)?;
        Ok(PadicScalar { residue: (self.residue / q) % ctx.modulus(), ctx })
    }

    /// Reduce into a smaller context over the same prime.
    pub fn reduce_to(&self, ctx: &PrecisionContext) -> Result<Self> {
        if ctx.p() != self.ctx.p() || ctx.abs_prec() > self.ctx.abs_prec() {
            return Err(Error::ContextMismatch);
        }
        Ok(PadicScalar { residue: self.residue % ctx.modulus(), ctx: ctx.clone() })
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

/// Teichmüller lift of `a ∈ {0, …, p-1}`: the unique root of unity (or 0)
/// congruent to `a` mod `p`, fixed by `x ↦ x^p`.
pub fn teichmuller_lift(a: u64, ctx: &PrecisionContext) -> PadicScalar {
    assert!(a < ctx.p(), "residue class out of range");
    let mut x = ctx.scalar_from_u64(a);
    for _ in 1..ctx.abs_prec() {
        x = x.pow(ctx.p());
    }
    x
}

/// Square matrix over `Z/p^M`; all entries share one context.
#[derive(Clone, PartialEq, Eq)]
pub struct PadicMatrix {
    dim: usize,
    entries: Vec<u64>,
    ctx: PrecisionContext,
}

impl fmt::Debug for PadicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PadicMatrix{}x{}[", self.dim, self.dim)?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.entries[i * self.dim + j])?;
            }
        }
        write!(f, "]")
    }
}

impl PadicMatrix {
    pub fn zero(dim: usize, ctx: &PrecisionContext) -> Self {
        PadicMatrix { dim, entries: vec![0; dim * dim], ctx: ctx.clone() }
    }

    pub fn identity(dim: usize, ctx: &PrecisionContext) -> Self {
        let mut m = Self::zero(dim, ctx);
        for i in 0..dim {
            m.entries[i * dim + i] = 1 % ctx.modulus();
        }
        m
    }

    pub fn from_fn(dim: usize, ctx: &PrecisionContext, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut m = Self::zero(dim, ctx);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = ctx.scalar(f(i, j)).residue();
            }
        }
        m
    }

    /// Elementary matrix `c · E_{ij}` (1-indexed positions are the caller's
    /// concern; here `i`, `j` are 0-based).
    pub fn elementary(dim: usize, ctx: &PrecisionContext, i: usize, j: usize, c: i64) -> Self {
        let mut m = Self::zero(dim, ctx);
        m.entries[i * dim + j] = ctx.scalar(c).residue();
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn entry(&self, i: usize, j: usize) -> PadicScalar {
        PadicScalar { residue: self.entries[i * self.dim + j], ctx: self.ctx.clone() }
    }

    pub fn entry_residue(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.dim + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, value: &PadicScalar) {
        assert!(self.ctx == *value.ctx());
        self.entries[i * self.dim + j] = value.residue();
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim, &self.ctx)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx || self.dim != other.dim {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let m = self.ctx.modulus() as u128;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| ((a as u128 + b as u128) % m) as u64)
            .collect();
        Ok(PadicMatrix { dim: self.dim, entries, ctx: self.ctx.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let m = self.ctx.modulus() as u128;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| ((a as u128 + m - b as u128) % m) as u64)
            .collect();
        Ok(PadicMatrix { dim: self.dim, entries, ctx: self.ctx.clone() })
    }

    pub fn neg(&self) -> Self {
        let m = self.ctx.modulus();
        let entries = self.entries.iter().map(|&a| if a == 0 { 0 } else { m - a }).collect();
        PadicMatrix { dim: self.dim, entries, ctx: self.ctx.clone() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let d = self.dim;
        let m = self.ctx.modulus() as u128;
        let mut entries = vec![0u64; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k] as u128;
                if a == 0 {
                    continue;
                }
                for j in 0..d {
                    let b = other.entries[k * d + j] as u128;
                    if b == 0 {
                        continue;
                    }
                    let cur = entries[i * d + j] as u128;
                    entries[i * d + j] = ((cur + a * b % m) % m) as u64;
                }
            }
        }
        Ok(PadicMatrix { dim: d, entries, ctx: self.ctx.clone() })
    }

    pub fn scale(&self, c: &PadicScalar) -> Result<Self> {
        if *c.ctx() != self.ctx {
            return Err(Error::ContextMismatch);
        }
        let m = self.ctx.modulus() as u128;
        let cr = c.residue() as u128;
        let entries = self.entries.iter().map(|&a| (a as u128 * cr % m) as u64).collect();
        Ok(PadicMatrix { dim: self.dim, entries, ctx: self.ctx.clone() })
    }

    pub fn scale_u64(&self, c: u64) -> Self {
        let m = self.ctx.modulus() as u128;
        let cr = c as u128 % m;
        let entries = self.entries.iter().map(|&a| (a as u128 * cr % m) as u64).collect();
        PadicMatrix { dim: self.dim, entries, ctx: self.ctx.clone() }
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::identity(self.dim, &self.ctx);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Determinant by cofactor expansion; intended for the small ranks the
    /// descent kernels use.
    pub fn det(&self) -> PadicScalar {
        assert!(self.dim <= 8, "cofactor determinant limited to dim <= 8");
        fn go(m: &PadicMatrix, rows: &[usize], cols: &[usize]) -> PadicScalar {
            let ctx = m.ctx();
            if rows.is_empty() {
                return ctx.one();
            }
            let i = rows[0];
            let rest: Vec<usize> = rows[1..].to_vec();
            let mut acc = ctx.zero();
            for (pos, &j) in cols.iter().enumerate() {
                let minor_cols: Vec<usize> =
                    cols.iter().copied().filter(|&c| c != j).collect();
                let term = m.entry(i, j).mul(&go(m, &rest, &minor_cols)).unwrap();
                acc = if pos % 2 == 0 { acc.add(&term).unwrap() } else { acc.sub(&term).unwrap() };
            }
            acc
        }
        let idx: Vec<usize> = (0..self.dim).collect();
        go(self, &idx, &idx)
    }

    /// Inverse via Gauss–Jordan with unit pivots.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(d, &self.ctx);
        for col in 0..d {
            let pivot_row = (col..d)
                .find(|&r| {
                    let e = a.entries[r * d + col];
                    e % self.ctx.p() != 0
                })
                .ok_or(Error::NotInvertible)?;
            if pivot_row != col {
                for j in 0..d {
                    a.entries.swap(pivot_row * d + j, col * d + j);
                    inv.entries.swap(pivot_row * d + j, col * d + j);
                }
            }
            let piv = PadicScalar { residue: a.entries[col * d + col], ctx: self.ctx.clone() };
            let piv_inv = piv.inv()?;
            for j in 0..d {
                a.entries[col * d + j] =
                    mulmod(a.entries[col * d + j], piv_inv.residue(), self.ctx.modulus());
                inv.entries[col * d + j] =
                    mulmod(inv.entries[col * d + j], piv_inv.residue(), self.ctx.modulus());
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a.entries[r * d + col];
                if f == 0 {
                    continue;
                }
                for j in 0..d {
                    let s = mulmod(f, a.entries[col * d + j], self.ctx.modulus());
                    a.entries[r * d + j] = submod(a.entries[r * d + j], s, self.ctx.modulus());
                    let s = mulmod(f, inv.entries[col * d + j], self.ctx.modulus());
                    inv.entries[r * d + j] = submod(inv.entries[r * d + j], s, self.ctx.modulus());
                }
            }
        }
        Ok(inv)
    }

    pub fn reduce_to(&self, ctx: &PrecisionContext) -> Result<Self> {
        if ctx.p() != self.ctx.p() || ctx.abs_prec() > self.ctx.abs_prec() {
            return Err(Error::ContextMismatch);
        }
        let m = ctx.modulus();
        let entries = self.entries.iter().map(|&a| a % m).collect();
        Ok(PadicMatrix { dim: self.dim, entries, ctx: ctx.clone() })
    }
}

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

#[inline]
fn submod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + m as u128 - b as u128) % m as u128) as u64
}

fn residue_valuation(mut r: u64, p: u64, floor: u32) -> u32 {
    if r == 0 {
        return floor;
    }
    let mut k = 0;
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    k
}

/// Smith normal form over `Z/p^M` with tracked column operations.
///
/// Returns the divisor exponents (ascending, `M` standing for a divisor that
/// vanishes at working precision) and the accumulated column-operation
/// matrix `T`: kernel generators of the input are the columns of `T` at
/// positions whose divisor exponent is `>= M`, plus all pivotless columns.
pub struct SmithForm {
    pub divisor_exponents: Vec<u32>,
    pub col_transform: Vec<Vec<u64>>, // column-major: col_transform[j] is the j-th column
    pub rows: usize,
    pub cols: usize,
}

pub fn smith_form(matrix: &[Vec<u64>], ctx: &PrecisionContext) -> SmithForm {
    let rows = matrix.len();
    let cols = if rows == 0 { 0 } else { matrix[0].len() };
    let m = ctx.modulus();
    let p = ctx.p();
    let floor = ctx.abs_prec();
    let mut a: Vec<Vec<u64>> = matrix.to_vec();
    // T starts as the identity; every column operation on `a` is mirrored.
    let mut t: Vec<Vec<u64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1 % m } else { 0 }).collect())
        .collect();

    let mut divisors = Vec::new();
    let steps = rows.min(cols);
    for s in 0..steps {
        // global minimum valuation in the remaining submatrix
        let mut best: Option<(usize, usize, u32)> = None;
        for i in s..rows {
            for j in s..cols {
                if a[i][j] == 0 {
                    continue;
                }
                let v = residue_valuation(a[i][j], p, floor);
                if best.map_or(true, |(_, _, bv)| v < bv) {
                    best = Some((i, j, v));
                }
            }
        }
        let Some((pi, pj, pv)) = best else {
            break;
        };
        a.swap(s, pi);
        if pj != s {
            for row in a.iter_mut() {
                row.swap(s, pj);
            }
            t.swap(s, pj);
        }
        // normalize pivot to p^pv by scaling its column with the unit inverse
        let mut q = 1u64;
        for _ in 0..pv {
            q *= p;
        }
        let unit = a[s][s] / q;
        let unit_inv = PadicScalar { residue: unit % m, ctx: ctx.clone() }
            .inv()
            .expect("pivot unit part is invertible");
        for row in a.iter_mut() {
            row[s] = mulmod(row[s], unit_inv.residue(), m);
        }
        for e in t[s].iter_mut() {
            *e = mulmod(*e, unit_inv.residue(), m);
        }
        // clear the pivot row (column ops, tracked) and pivot column (row ops)
        for j in (s + 1)..cols {
            if a[s][j] == 0 {
                continue;
            }
            let f = a[s][j] / q; // exact: pivot has minimal valuation
            for i in 0..rows {
                let sub = mulmod(f, a[i][s], m);
                a[i][j] = submod(a[i][j], sub, m);
            }
            let col_s = t[s].clone();
            for (ti, &cs) in t[j].iter_mut().zip(col_s.iter()) {
                let sub = mulmod(f, cs, m);
                *ti = submod(*ti, sub, m);
            }
        }
        for i in (s + 1)..rows {
            if a[i][s] == 0 {
                continue;
            }
            let f = a[i][s] / q;
            let row_s = a[s].clone();
            for (e, &rs) in a[i].iter_mut().zip(row_s.iter()) {
                let sub = mulmod(f, rs, m);
                *e = submod(*e, sub, m);
            }
        }
        divisors.push(pv);
    }
    SmithForm { divisor_exponents: divisors, col_transform: t, rows, cols }
}

impl SmithForm {
    /// Number of unit pivots: the rank counted at working precision.
    pub fn unit_rank(&self) -> usize {
        self.divisor_exponents.iter().filter(|&&e| e == 0).count()
    }

    /// Kernel generators that are primitive mod `p` (columns of the tracked
    /// transform with no surviving pivot).
    pub fn kernel_columns(&self, ctx: &PrecisionContext) -> Vec<Vec<u64>> {
        let floor = ctx.abs_prec();
        let mut out = Vec::new();
        for j in 0..self.cols {
            let pivoted = j < self.divisor_exponents.len() && self.divisor_exponents[j] < floor;
            if !pivoted {
                out.push(self.col_transform[j].clone());
            }
        }
        out
    }
}

/// Rank of a matrix mod `p^M` by Smith-normal-form unit-pivot counting.
pub fn unit_rank(matrix: &PadicMatrix) -> usize {
    let d = matrix.dim();
    let rows: Vec<Vec<u64>> =
        (0..d).map(|i| (0..d).map(|j| matrix.entry_residue(i, j)).collect()).collect();
    smith_form(&rows, matrix.ctx()).unit_rank()
}

/// Nilpotency diagnostics: the smallest `e` with `N^e ≡ 0 mod p^M` (up to
/// the dimension), and the unit ranks of `N, N², …` below it.
pub fn nilpotency_profile(n: &PadicMatrix) -> (Option<usize>, Vec<usize>) {
    let d = n.dim();
    let mut power = PadicMatrix::identity(d, n.ctx());
    let mut ranks = Vec::new();
    for e in 1..=d {
        power = power.mul(n).expect("shared context");
        if power.is_zero() {
            return (Some(e), ranks);
        }
        ranks.push(unit_rank(&power));
    }
    (None, ranks)
}
