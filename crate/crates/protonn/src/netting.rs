//! Gamma-nets: maximal packings of a finite point pool.
//!
//! A gamma-net is a subset in which all pairwise distances are at least
//! `gamma`; maximality implies every pool point lies within `gamma` of some
//! member. Construction is greedy in pool-index order, which makes the pool
//! order part of the reproducibility contract; callers that want a random net
//! shuffle the pool with a seeded RNG first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist_sq, Point};

/// A maximal `gamma`-packing of a source pool, stored as indices into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaNet {
    gamma: f64,
    member_indices: Vec<usize>,
    source_size: usize,
}

impl GammaNet {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Indices of net members in the source pool, strictly increasing.
    pub fn member_indices(&self) -> &[usize] {
        &self.member_indices
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    /// Member points cloned out of the pool, in net order.
    pub fn members(&self, pool: &[Point]) -> Vec<Point> {
        self.member_indices.iter().map(|&i| pool[i].clone()).collect()
    }
}

/// Greedy pass in index order: point `i` joins iff its distance to every
/// already-accepted member is at least `gamma`. The result is a maximal
/// gamma-packing, deterministic given the pool order.
pub fn build_gamma_net(pool: &[Point], gamma: f64) -> Result<GammaNet> {
    if pool.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    let d = pool[0].dim();
    for p in pool {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    let gamma_sq = gamma * gamma;
    let mut members: Vec<usize> = Vec::new();
    for (i, p) in pool.iter().enumerate() {
        let accepted = members
            .iter()
            .all(|&m| dist_sq(p.coords(), pool[m].coords()) >= gamma_sq);
        if accepted {
            members.push(i);
        }
    }
    Ok(GammaNet {
        gamma,
        member_indices: members,
        source_size: pool.len(),
    })
}

/// True iff all member pairs are at distance >= gamma.
pub fn verify_packing(net: &GammaNet, pool: &[Point]) -> bool {
    if net.source_size != pool.len() || net.member_indices.is_empty() {
        return false;
    }
    let gamma_sq = net.gamma * net.gamma;
    let idx = &net.member_indices;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            if dist_sq(pool[i].coords(), pool[j].coords()) < gamma_sq {
                return false;
            }
        }
    }
    true
}

/// True iff every pool point is within distance < gamma of some member.
pub fn verify_covering(net: &GammaNet, pool: &[Point]) -> bool {
    if net.source_size != pool.len() || net.member_indices.is_empty() {
        return false;
    }
    let gamma_sq = net.gamma * net.gamma;
    pool.iter().all(|p| {
        net.member_indices
            .iter()
            .any(|&m| dist_sq(p.coords(), pool[m].coords()) < gamma_sq)
    })
}

/// Upper bound `ceil((2*diameter/gamma)^d)` on the size of any gamma-net of a
/// set with the given diameter. Used for sanity assertions and preallocation.
pub fn net_size_bound(diameter: f64, gamma: f64, d: usize) -> Result<usize> {
    if !(diameter.is_finite() && diameter > 0.0) {
        return Err(Error::invalid(format!("diameter must be positive, got {diameter}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let bound = (2.0 * diameter / gamma).powi(d as i32).ceil();
    if !bound.is_finite() || bound > usize::MAX as f64 {
        return Err(Error::Overflow(format!(
            "(2*{diameter}/{gamma})^{d} does not fit in usize"
        )));
    }
    Ok(bound.max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::distance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn random_pool(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Point> {
        (0..n)
            .map(|_| pt(&(0..d).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<_>>()))
            .collect()
    }

    /// Exhaustive pairwise oracle for the packing property.
    fn packing_oracle(members: &[Point], gamma: f64) -> bool {
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if distance(&members[i], &members[j]).unwrap() < gamma {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn singleton_pool() {
        let pool = vec![pt(&[0.3, 0.7])];
        let net = build_gamma_net(&pool, 10.0).unwrap();
        assert_eq!(net.member_indices(), &[0]);
        assert!(verify_packing(&net, &pool));
        assert!(verify_covering(&net, &pool));
    }

    #[test]
    fn greedy_rejects_close_point() {
        let pool = vec![pt(&[0.0, 0.0]), pt(&[0.5, 0.0]), pt(&[2.0, 0.0])];
        let net = build_gamma_net(&pool, 1.0).unwrap();
        assert_eq!(net.member_indices(), &[0, 2]);
    }

    #[test]
    fn random_pool_packs_and_covers() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pool = random_pool(&mut rng, 500, 2);
        let net = build_gamma_net(&pool, 0.1).unwrap();
        assert!(verify_packing(&net, &pool));
        assert!(verify_covering(&net, &pool));
        assert!(packing_oracle(&net.members(&pool), 0.1));
    }

    #[test]
    fn packing_detects_duplicates() {
        let pool = vec![pt(&[0.0]), pt(&[0.0])];
        let forged = GammaNet {
            gamma: 0.5,
            member_indices: vec![0, 1],
            source_size: 2,
        };
        assert!(!verify_packing(&forged, &pool));
    }

    #[test]
    fn covering_detects_missed_point() {
        let pool = vec![pt(&[0.0]), pt(&[10.0])];
        let forged = GammaNet {
            gamma: 1.0,
            member_indices: vec![0],
            source_size: 2,
        };
        assert!(!verify_covering(&forged, &pool));
    }

    #[test]
    fn size_bound_examples() {
        assert_eq!(net_size_bound(1.0, 2.0, 3).unwrap(), 1);
        assert_eq!(net_size_bound(1.0, 0.1, 2).unwrap(), 400);
        assert!(matches!(
            net_size_bound(1e200, 1e-200, 8),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn observed_net_size_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &gamma in &[0.1, 0.2, 0.4] {
            // Points on the unit disk, diameter 2.
            let pool: Vec<Point> = (0..400)
                .map(|_| {
                    loop {
                        let x = rng.gen_range(-1.0..1.0);
                        let y = rng.gen_range(-1.0..1.0);
                        if x * x + y * y <= 1.0 {
                            return pt(&[x, y]);
                        }
                    }
                })
                .collect();
            let net = build_gamma_net(&pool, gamma).unwrap();
            let bound = net_size_bound(2.0, gamma, 2).unwrap();
            assert!(net.len() <= bound, "net {} > bound {}", net.len(), bound);
        }
    }

    #[test]
    fn ball_in_cell_property() {
        // Every sampled point within gamma/2 of a member has that member as
        // its nearest member.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pool = random_pool(&mut rng, 300, 2);
        let gamma = 0.2;
        let net = build_gamma_net(&pool, gamma).unwrap();
        let members = net.members(&pool);
        for (mi, m) in members.iter().enumerate() {
            for _ in 0..100 {
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = 0.5 * gamma * rng.gen_range(0.0..1.0f64).sqrt();
                let q = pt(&[
                    m.coords()[0] + r * angle.cos(),
                    m.coords()[1] + r * angle.sin(),
                ]);
                let (idx, _) = crate::geom::nearest(&q, &members).unwrap();
                assert_eq!(idx, mi);
            }
        }
    }

    #[test]
    fn idempotence_on_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pool = random_pool(&mut rng, 200, 3);
        let net = build_gamma_net(&pool, 0.3).unwrap();
        let members = net.members(&pool);
        let again = build_gamma_net(&members, 0.3).unwrap();
        assert_eq!(again.len(), members.len());
    }

    #[test]
    fn empty_pool_and_bad_gamma() {
        assert!(matches!(
            build_gamma_net(&[], 1.0),
            Err(Error::EmptyPointSet)
        ));
        let pool = vec![pt(&[0.0])];
        assert!(matches!(
            build_gamma_net(&pool, 0.0),
            Err(Error::InvalidGamma(_))
        ));
        assert!(matches!(
            build_gamma_net(&pool, f64::NAN),
            Err(Error::InvalidGamma(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn net_is_maximal_packing(seed in 0u64..1000, n in 1usize..120) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gamma = rng.gen_range(0.05..0.6);
            let pool = random_pool(&mut rng, n, 2);
            let net = build_gamma_net(&pool, gamma).unwrap();
            prop_assert!(verify_packing(&net, &pool));
            prop_assert!(verify_covering(&net, &pool));
        }

        #[test]
        fn net_size_monotone_in_gamma(seed in 0u64..500, n in 1usize..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pool = random_pool(&mut rng, n, 2);
            let small = build_gamma_net(&pool, 0.1).unwrap();
            let large = build_gamma_net(&pool, 0.3).unwrap();
            prop_assert!(large.len() <= small.len());
        }
    }
}
