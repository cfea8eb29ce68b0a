//! Descent data for log (F-)crystals over standard and multi-factor log
//! points: cocycle verification, monodromy extraction, reconstruction from a
//! monodromy matrix, descent tests, and (φ, N)-compatibility.
//!
//! A datum is a matrix-valued divided-power series `T(t)` with invertible
//! constant term. The cocycle condition compares `T(t2)·T(t1)` against
//! `T(t1 t2 + t1 + t2)` coefficient-wise; its solutions are exactly the
//! series `(1+t)^N`, and `N` (the `t^[1]` coordinate) is the monodromy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::padic::{nilpotency_profile, PadicMatrix, PrecisionContext, ValueExponent};
use crate::series::{binomial_power, PDSeries, RingSpec, Substitution, Truncation, VarKind};

/// Ring of a standard log point: one divided-power variable `t`.
pub fn log_point_ring() -> Arc<RingSpec> {
    RingSpec::new(vec![("t", VarKind::Pd)])
}

/// Ring of a multi-factor log point: pd variables `t1, …, tn`.
pub fn multi_log_point_ring(n: usize) -> Arc<RingSpec> {
    let names: Vec<String> = (1..=n).map(|i| format!("t{i}")).collect();
    RingSpec::new(names.iter().map(|s| (s.as_str(), VarKind::Pd)).collect())
}

/// Outcome of a cocycle check: either clean, or the first coefficient
/// (graded-lex) where the two sides disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CocycleVerdict {
    Ok,
    Fail { index: Vec<i32> },
}

impl CocycleVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CocycleVerdict::Ok)
    }
}

/// Descent datum over the standard log point.
#[derive(Clone, Debug)]
pub struct LogPointDatum {
    series: PDSeries,
    rank: usize,
}

impl LogPointDatum {
    /// Wrap a series over the one-variable pd ring; the constant term must
    /// be invertible.
    pub fn new(series: PDSeries) -> Result<Self> {
        let ring = series.ring();
        if ring.num_vars() != 1 || ring.kind(0) != VarKind::Pd {
            return Err(Error::InvalidInput("expected a one-variable pd ring".into()));
        }
        let rank = series.dim();
        series
            .constant_term()
            .inverse()
            .map_err(|_| Error::NonUnitConstantTerm)?;
        Ok(LogPointDatum { series, rank })
    }

    /// The canonical datum `(1+t)^N` attached to a monodromy matrix.
    pub fn from_monodromy(n: &PadicMatrix, trunc: Truncation) -> Self {
        let ring = log_point_ring();
        let series = binomial_power(&ring, trunc, n, "t");
        LogPointDatum { series, rank: n.dim() }
    }

    pub fn series(&self) -> &PDSeries {
        &self.series
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ctx(&self) -> &PrecisionContext {
        self.series.ctx()
    }

    /// Check `T(t2)·T(t1) = T(t1 t2 + t1 + t2)` to truncation.
    pub fn cocycle_check(&self) -> CocycleVerdict {
        let trunc = self.series.trunc();
        let ctx = self.series.ctx();
        let two = RingSpec::new(vec![("t1", VarKind::Pd), ("t2", VarKind::Pd)]);
        let t1 = PDSeries::monomial(&two, trunc, ctx, "t1", 1, 1);
        let t2 = PDSeries::monomial(&two, trunc, ctx, "t2", 1, 1);
        let coproduct = t1.mul(&t2).unwrap().add(&t1).unwrap().add(&t2).unwrap();

        let at = |img: PDSeries| Substitution::new(&two, trunc, vec![img]);
        let lhs = self
            .series
            .substitute(&at(t2))
            .and_then(|a| a.mul(&self.series.substitute(&at(t1))?));
        let rhs = self.series.substitute(&at(coproduct));
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => match l.first_difference(&r) {
                None => CocycleVerdict::Ok,
                Some(index) => CocycleVerdict::Fail { index },
            },
            // substitution failures count as cocycle failures at the origin
            _ => CocycleVerdict::Fail { index: vec![0, 0] },
        }
    }

    /// The monodromy matrix: the `t^[1]` coordinate of a cocycle-valid datum.
    ///
    /// The cocycle forces the constant term to be the identity; a datum that
    /// passes the cocycle but violates this indicates corrupted input and is
    /// reported as an internal inconsistency.
    pub fn monodromy(&self) -> Result<PadicMatrix> {
        if !self.cocycle_check().is_ok() {
            return Err(Error::CocycleInvalid);
        }
        if !self.series.constant_term().is_identity() {
            return Err(Error::InternalInconsistency(
                "cocycle-valid datum with non-identity constant term".into(),
            ));
        }
        Ok(self.series.coeff(&[1]))
    }

    /// True iff the datum descends to the underlying point, i.e. its
    /// monodromy vanishes at working precision. For a vanishing monodromy the
    /// whole series must collapse to the identity; any surviving coefficient
    /// is reported as an internal inconsistency.
    pub fn descends_to_point(&self) -> Result<bool> {
        let n = self.monodromy()?;
        if !n.is_zero() {
            return Ok(false);
        }
        let one = PDSeries::one(self.series.ring(), self.series.trunc(), self.rank, self.ctx());
        if self.series.first_difference(&one).is_some() {
            return Err(Error::InternalInconsistency(
                "vanishing monodromy but a non-identity descent series".into(),
            ));
        }
        Ok(true)
    }
}

/// A Frobenius module with monodromy endomorphism.
#[derive(Clone, Debug)]
pub struct PhiNModule {
    pub phi: PadicMatrix,
    pub monodromy: PadicMatrix,
}

impl PhiNModule {
    /// The Frobenius must be an isogeny: its determinant carries finite
    /// valuation below the precision floor.
    pub fn new(phi: PadicMatrix, monodromy: PadicMatrix) -> Result<Self> {
        if phi.dim() != monodromy.dim() || phi.ctx() != monodromy.ctx() {
            return Err(Error::ContextMismatch);
        }
        match phi.det().valuation() {
            ValueExponent::Finite(_) => Ok(PhiNModule { phi, monodromy }),
            _ => Err(Error::InvalidInput(
                "phi is not an isogeny at working precision (determinant at the floor)".into(),
            )),
        }
    }

    /// Check the compatibility `N·φ = p·φ·N` at working precision.
    pub fn phi_compatibility(&self) -> bool {
        let ctx = self.phi.ctx();
        let lhs = self.monodromy.mul(&self.phi).expect("shared context");
        let rhs = self
            .phi
            .mul(&self.monodromy)
            .expect("shared context")
            .scale_u64(ctx.p());
        lhs == rhs
    }

    /// Compatibility forces the monodromy to be nilpotent mod p.
    pub fn monodromy_nilpotent_mod_p(&self) -> bool {
        let ctx1 = self
            .monodromy
            .ctx()
            .truncated(1)
            .expect("precision 1 context");
        let reduced = self.monodromy.reduce_to(&ctx1).expect("same prime");
        nilpotency_profile(&reduced).0.is_some()
    }
}

/// Descent datum over a multi-factor log point (pd variables `t1, …, tn`).
#[derive(Clone, Debug)]
pub struct MultiLogPointDatum {
    series: PDSeries,
    rank: usize,
}

impl MultiLogPointDatum {
    pub fn new(series: PDSeries) -> Result<Self> {
        let ring = series.ring();
        if ring.num_vars() < 2 || ring.vars().iter().any(|v| v.kind != VarKind::Pd) {
            return Err(Error::InvalidInput("expected a multi-variable pd ring".into()));
        }
        series
            .constant_term()
            .inverse()
            .map_err(|_| Error::NonUnitConstantTerm)?;
        let rank = series.dim();
        Ok(MultiLogPointDatum { series, rank })
    }

    pub fn series(&self) -> &PDSeries {
        &self.series
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn factors(&self) -> usize {
        self.series.ring().num_vars()
    }

    /// Cocycle in every factor simultaneously: `T(u)·T(t) = T(t ∘ u)` with
    /// `t_j ∘ u_j = t_j u_j + t_j + u_j`.
    pub fn cocycle_check(&self) -> CocycleVerdict {
        let n = self.factors();
        let trunc = self.series.trunc();
        let ctx = self.series.ctx();
        let mut names = Vec::new();
        for i in 1..=n {
            names.push(format!("t{i}"));
        }
        for i in 1..=n {
            names.push(format!("u{i}"));
        }
        let big = RingSpec::new(names.iter().map(|s| (s.as_str(), VarKind::Pd)).collect());

        let var = |name: &str| PDSeries::monomial(&big, trunc, ctx, name, 1, 1);
        let mut to_t = Vec::new();
        let mut to_u = Vec::new();
        let mut to_prod = Vec::new();
        for i in 1..=n {
            let t = var(&format!("t{i}"));
            let u = var(&format!("u{i}"));
            let prod = t.mul(&u).unwrap().add(&t).unwrap().add(&u).unwrap();
            to_t.push(t);
            to_u.push(u);
            to_prod.push(prod);
        }
        let lhs = self
            .series
            .substitute(&Substitution::new(&big, trunc, to_u))
            .and_then(|a| a.mul(&self.series.substitute(&Substitution::new(&big, trunc, to_t))?));
        let rhs = self.series.substitute(&Substitution::new(&big, trunc, to_prod));
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => match l.first_difference(&r) {
                None => CocycleVerdict::Ok,
                Some(index) => CocycleVerdict::Fail { index },
            },
            _ => CocycleVerdict::Fail { index: vec![0; 2 * n] },
        }
    }

    /// Monodromy of the pullback along the direction `(m_1, …, m_n)`:
    /// substitute `t_j ↦ (1+t)^{m_j} - 1` and read off the `t^[1]` term.
    pub fn directional_monodromy(&self, dir: &[u32]) -> Result<PadicMatrix> {
        if dir.len() != self.factors() {
            return Err(Error::InvalidInput("direction arity mismatch".into()));
        }
        if !self.cocycle_check().is_ok() {
            return Err(Error::CocycleInvalid);
        }
        let trunc = self.series.trunc();
        let ctx = self.series.ctx();
        let target = log_point_ring();
        let one = PDSeries::one(&target, trunc, 1, ctx);
        let images = dir
            .iter()
            .map(|&m| {
                let scalar_m = PadicMatrix::from_fn(1, ctx, |_, _| m as i64);
                binomial_power(&target, trunc, &scalar_m, "t")
                    .sub(&one)
                    .expect("shared context")
            })
            .collect();
        let pulled = self.series.substitute(&Substitution::new(&target, trunc, images))?;
        Ok(pulled.coeff(&[1]))
    }

    /// True iff every coefficient of positive total degree vanishes, the
    /// coefficient form of "trivial monodromy in all directions". The
    /// verdict is cross-validated on the unit and diagonal directions.
    pub fn all_directions_trivial(&self) -> Result<bool> {
        if !self.cocycle_check().is_ok() {
            return Err(Error::CocycleInvalid);
        }
        let n = self.factors();
        let ring = self.series.ring().clone();
        let coefficient_form = self
            .series
            .iter()
            .all(|(idx, m)| ring.total_degree(idx) == 0 || m.is_zero());
        let mut spot_checks = Vec::new();
        for i in 0..n {
            let mut dir = vec![0u32; n];
            dir[i] = 1;
            spot_checks.push(dir);
        }
        spot_checks.push(vec![1u32; n]);
        for dir in &spot_checks {
            let dm = self.directional_monodromy(dir)?;
            if coefficient_form && !dm.is_zero() {
                return Err(Error::InternalInconsistency(format!(
                    "vanishing coefficients but nonzero directional monodromy in {dir:?}"
                )));
            }
        }
        Ok(coefficient_form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrecisionContext;
    use crate::series::log1p_series;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(5, 8).unwrap()
    }

    fn tr() -> Truncation {
        Truncation::new(8)
    }

    #[test]
    fn identity_datum_is_cocycle_valid() {
        let c = ctx();
        let ring = log_point_ring();
        let d = LogPointDatum::new(PDSeries::one(&ring, tr(), 2, &c)).unwrap();
        assert!(d.cocycle_check().is_ok());
        assert!(d.monodromy().unwrap().is_zero());
        assert!(d.descends_to_point().unwrap());
    }

    #[test]
    fn one_plus_t_is_cocycle_valid_with_monodromy_one() {
        let c = ctx();
        let ring = log_point_ring();
        let s = PDSeries::one(&ring, tr(), 1, &c)
            .add(&PDSeries::monomial(&ring, tr(), &c, "t", 1, 1))
            .unwrap();
        let d = LogPointDatum::new(s).unwrap();
        assert!(d.cocycle_check().is_ok());
        assert_eq!(d.monodromy().unwrap().entry_residue(0, 0), 1);
        assert!(!d.descends_to_point().unwrap());
    }

    #[test]
    fn one_plus_t_square_fails_at_mixed_coefficient() {
        let c = ctx();
        let ring = log_point_ring();
        let s = PDSeries::one(&ring, tr(), 1, &c)
            .add(&PDSeries::monomial(&ring, tr(), &c, "t", 2, 1))
            .unwrap();
        let d = LogPointDatum::new(s).unwrap();
        assert_eq!(d.cocycle_check(), CocycleVerdict::Fail { index: vec![1, 1] });
        assert_eq!(d.monodromy(), Err(Error::CocycleInvalid));
    }

    #[test]
    fn monodromy_round_trip_random() {
        let c = ctx();
        let mut state = 7u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as i64
        };
        for d in 1..=3usize {
            for _ in 0..5 {
                let n = PadicMatrix::from_fn(d, &c, |_, _| next());
                let datum = LogPointDatum::from_monodromy(&n, tr());
                assert!(datum.cocycle_check().is_ok());
                assert_eq!(datum.monodromy().unwrap(), n);
            }
        }
    }

    #[test]
    fn nilpotent_monodromy_matches_log_form() {
        // for N^2 = 0: (1+t)^N = 1 + N log(1+t) exactly
        let c = ctx();
        let ring = log_point_ring();
        let n = PadicMatrix::elementary(2, &c, 0, 1, 3);
        let datum = LogPointDatum::from_monodromy(&n, tr());
        let expected = PDSeries::one(&ring, tr(), 2, &c)
            .add(&log1p_series(&ring, tr(), &c, "t").scale_matrix_left(&n))
            .unwrap();
        assert_eq!(datum.series(), &expected);
    }

    #[test]
    fn descends_fails_for_p_scaled_nilpotent() {
        let c = PrecisionContext::new(5, 2).unwrap();
        let n = PadicMatrix::elementary(2, &c, 0, 1, 5);
        let datum = LogPointDatum::from_monodromy(&n, tr());
        assert!(!datum.descends_to_point().unwrap());
    }

    #[test]
    fn phi_compatibility_examples() {
        let c = ctx();
        let phi = PadicMatrix::identity(2, &c).scale_u64(5);
        let m = PhiNModule::new(phi, PadicMatrix::zero(2, &c)).unwrap();
        assert!(m.phi_compatibility());

        let phi = PadicMatrix::from_fn(2, &c, |i, j| [[1, 0], [0, 5]][i][j]);
        let n = PadicMatrix::elementary(2, &c, 0, 1, 1);
        let m = PhiNModule::new(phi, n.clone()).unwrap();
        assert!(m.phi_compatibility());

        let m = PhiNModule::new(PadicMatrix::identity(2, &c), n).unwrap();
        assert!(!m.phi_compatibility());
    }

    #[test]
    fn compatible_phi_forces_nilpotent_monodromy() {
        let c = ctx();
        let mut state = 99u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 1000) as i64
        };
        for _ in 0..10 {
            // phi = diag(1, p, p^2); N supported on the (i, i+1) band is compatible
            let phi = PadicMatrix::from_fn(3, &c, |i, j| if i == j { 5i64.pow(i as u32) } else { 0 });
            let n = PadicMatrix::from_fn(3, &c, |i, j| if j == i + 1 { next() } else { 0 });
            let m = PhiNModule::new(phi, n).unwrap();
            assert!(m.phi_compatibility());
            assert!(m.monodromy_nilpotent_mod_p());
        }
    }

    #[test]
    fn directional_monodromy_is_linear_in_first_order_data() {
        let c = ctx();
        let ring = multi_log_point_ring(2);
        let a = PadicMatrix::from_fn(2, &c, |i, j| [[1, 0], [0, 0]][i][j]);
        let b = PadicMatrix::from_fn(2, &c, |i, j| [[0, 0], [0, 1]][i][j]);
        // commuting pair with A(A-1) = B(B-1) = AB = 0: (1+t1)^A (1+t2)^B
        let t = binomial_power(&ring, tr(), &a, "t1")
            .mul(&binomial_power(&ring, tr(), &b, "t2"))
            .unwrap();
        let d = MultiLogPointDatum::new(t).unwrap();
        assert!(d.cocycle_check().is_ok());
        let dm = d.directional_monodromy(&[2, 3]).unwrap();
        let expected = a.scale_u64(2).add(&b.scale_u64(3)).unwrap();
        assert_eq!(dm, expected);
        // additivity when all second-order coefficients vanish
        let d10 = d.directional_monodromy(&[1, 0]).unwrap();
        let d01 = d.directional_monodromy(&[0, 1]).unwrap();
        let d11 = d.directional_monodromy(&[1, 1]).unwrap();
        assert_eq!(d11, d10.add(&d01).unwrap());
    }

    #[test]
    fn pullback_of_single_factor_power() {
        let c = ctx();
        let ring = multi_log_point_ring(2);
        let a = PadicMatrix::from_fn(2, &c, |i, j| [[2, 1], [0, 2]][i][j]);
        let t = binomial_power(&ring, tr(), &a, "t1");
        let d = MultiLogPointDatum::new(t).unwrap();
        for (m, n) in [(1u32, 0u32), (2, 3), (4, 1)] {
            let dm = d.directional_monodromy(&[m, n]).unwrap();
            assert_eq!(dm, a.scale_u64(m as u64));
        }
    }

    #[test]
    fn opposite_first_order_terms_detected() {
        let c = ctx();
        let ring = multi_log_point_ring(2);
        let a = PadicMatrix::elementary(2, &c, 0, 1, 1);
        // N10 = A, N01 = -A: direction (1,1) is blind, (1,0) is not
        let t = binomial_power(&ring, tr(), &a, "t1")
            .mul(&binomial_power(&ring, tr(), &a.neg(), "t2"))
            .unwrap();
        let d = MultiLogPointDatum::new(t).unwrap();
        assert!(d.directional_monodromy(&[1, 1]).unwrap().is_zero());
        assert!(!d.directional_monodromy(&[1, 0]).unwrap().is_zero());
        assert!(!d.all_directions_trivial().unwrap());
    }

    #[test]
    fn pure_second_order_term_breaks_the_cocycle() {
        let c = ctx();
        let ring = multi_log_point_ring(2);
        let mut s = PDSeries::one(&ring, tr(), 2, &c);
        s.add_term(vec![1, 1], PadicMatrix::elementary(2, &c, 0, 1, 1));
        let d = MultiLogPointDatum::new(s).unwrap();
        assert!(!d.cocycle_check().is_ok());
    }

    #[test]
    fn all_directions_trivial_on_identity() {
        let c = ctx();
        let ring = multi_log_point_ring(3);
        let d = MultiLogPointDatum::new(PDSeries::one(&ring, tr(), 2, &c)).unwrap();
        assert!(d.all_directions_trivial().unwrap());
    }
}
