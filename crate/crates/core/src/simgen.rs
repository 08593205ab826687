//! Random markets from the cardinal model
//!
//! ```text
//! u_is  = lambda * (delta * d_is + (1 - delta) * v_s) + (1 - lambda) * eps_is
//! pi_is = alpha  * (beta  * d_is + (1 - beta)  * g_i) + (1 - alpha)  * eta_is
//! ```
//!
//! with every primitive drawn independently from U[0, 1].
//!
//! Draws are a pure function of `(n, m, seed)`. The generator is ChaCha12
//! seeded through `SeedableRng::seed_from_u64`, and entries are taken in the
//! fixed order d, v, eps, g, eta (matrices row-major by student). Changing
//! any of this changes every simulated market, so it is recorded in
//! [`GENERATOR_ID`] and written into result metadata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::market::{ordinal_from_cardinal, AcceptabilityRule, CardinalMatrices, Market};

pub const GENERATOR_ID: &str =
    "chacha12/rand_chacha-0.3/seed_from_u64; order d,v,eps,g,eta; subseed sha256(master,cell,draw)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardinalParams {
    pub lambda: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub q: u32,
}

impl CardinalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("delta", self.delta),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.n == 0 || self.m == 0 || self.q == 0 {
            return Err(Error::InvalidParams(format!(
                "n, m and q must be positive (got n = {}, m = {}, q = {})",
                self.n, self.m, self.q
            )));
        }
        Ok(())
    }
}

/// One realization of the model primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDraw {
    pub n: usize,
    pub m: usize,
    /// match quality, `n x m`
    pub d: Vec<f64>,
    /// common school quality, length `m`
    pub v: Vec<f64>,
    /// idiosyncratic taste, `n x m`
    pub eps: Vec<f64>,
    /// common student quality, length `n`
    pub g: Vec<f64>,
    /// idiosyncratic priority, `n x m`
    pub eta: Vec<f64>,
}

pub fn draw(params: &CardinalParams, seed: u64) -> MarketDraw {
    let (n, m) = (params.n, params.m);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut take = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen::<f64>()).collect() };
    let d = take(n * m);
    let v = take(m);
    let eps = take(n * m);
    let g = take(n);
    let eta = take(n * m);
    MarketDraw { n, m, d, v, eps, g, eta }
}

/// Seed of draw `draw` in sweep cell `cell`, so that any single market of a
/// sweep can be regenerated on its own.
pub fn sub_seed(master_seed: u64, cell: u64, draw: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(cell.to_le_bytes());
    hasher.update(draw.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn cardinal_matrices(params: &CardinalParams, dr: &MarketDraw) -> Result<CardinalMatrices> {
    let (n, m) = (dr.n, dr.m);
    if n != params.n || m != params.m {
        return Err(Error::InvalidParams(format!(
            "draw is {n}x{m} but parameters ask for {}x{}",
            params.n, params.m
        )));
    }
    let CardinalParams {
        lambda,
        delta,
        alpha,
        beta,
        ..
    } = *params;
    let mut u = Vec::with_capacity(n * m);
    let mut pi = Vec::with_capacity(n * m);
    for i in 0..n {
        for s in 0..m {
            let k = i * m + s;
            u.push(lambda * (delta * dr.d[k] + (1.0 - delta) * dr.v[s]) + (1.0 - lambda) * dr.eps[k]);
            pi.push(alpha * (beta * dr.d[k] + (1.0 - beta) * dr.g[i]) + (1.0 - alpha) * dr.eta[k]);
        }
    }
    CardinalMatrices::new(n, m, u, pi)
}

/// Ordinal market for one draw: every school acceptable, uniform capacity.
pub fn build_market(params: &CardinalParams, dr: &MarketDraw) -> Result<Market> {
    let c = cardinal_matrices(params, dr)?;
    ordinal_from_cardinal(&c, AcceptabilityRule::All, vec![params.q; params.m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::validate_market;

    fn params(lambda: f64, delta: f64, alpha: f64, beta: f64) -> CardinalParams {
        CardinalParams {
            lambda,
            delta,
            alpha,
            beta,
            n: 30,
            m: 6,
            q: 3,
        }
    }

    #[test]
    fn draws_are_deterministic_and_seed_sensitive() {
        let p = params(0.5, 0.5, 0.5, 0.5);
        assert_eq!(draw(&p, 7), draw(&p, 7));
        assert_ne!(draw(&p, 7), draw(&p, 8));
    }

    #[test]
    fn draw_dimensions_and_range() {
        let p = params(1.0, 1.0, 1.0, 1.0);
        let dr = draw(&p, 1);
        assert_eq!((dr.d.len(), dr.v.len(), dr.eps.len(), dr.g.len(), dr.eta.len()), (180, 6, 180, 30, 180));
        for x in dr.d.iter().chain(&dr.v).chain(&dr.eps).chain(&dr.g).chain(&dr.eta) {
            assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn uniform_marginal_mean() {
        let p = CardinalParams {
            n: 2000,
            m: 200,
            ..params(0.5, 0.5, 0.5, 0.5)
        };
        let dr = draw(&p, 2024);
        let all: Vec<f64> = dr.d.iter().chain(&dr.eps).chain(&dr.eta).copied().collect();
        let sample = &all[..1_000_000];
        let mean = sample.iter().sum::<f64>() / sample.len() as f64;
        assert!((0.499..=0.501).contains(&mean), "mean {mean}");
    }

    #[test]
    fn sub_seeds_are_distinct() {
        let a = sub_seed(1, 0, 0);
        assert_ne!(a, sub_seed(1, 0, 1));
        assert_ne!(a, sub_seed(1, 1, 0));
        assert_ne!(a, sub_seed(2, 0, 0));
        assert_eq!(a, sub_seed(1, 0, 0));
    }

    #[test]
    fn match_quality_only_sorts_by_d() {
        let p = params(1.0, 1.0, 1.0, 1.0);
        let dr = draw(&p, 3);
        let market = build_market(&p, &dr).unwrap();
        assert!(validate_market(&market).is_ok());
        for (i, list) in market.preferences.iter().enumerate() {
            for w in list.windows(2) {
                assert!(dr.d[i * p.m + w[0]] > dr.d[i * p.m + w[1]]);
            }
        }
        for (s, list) in market.priorities.iter().enumerate() {
            for w in list.windows(2) {
                assert!(dr.d[w[0] * p.m + s] > dr.d[w[1] * p.m + s]);
            }
        }
    }

    #[test]
    fn no_structure_means_idiosyncratic_preferences() {
        let p = params(0.0, 0.3, 1.0, 1.0);
        let dr = draw(&p, 4);
        let market = build_market(&p, &dr).unwrap();
        for (i, list) in market.preferences.iter().enumerate() {
            for w in list.windows(2) {
                assert!(dr.eps[i * p.m + w[0]] > dr.eps[i * p.m + w[1]]);
            }
        }
    }

    #[test]
    fn vertical_differentiation_gives_common_preferences() {
        let p = params(1.0, 0.0, 0.5, 0.5);
        let market = build_market(&p, &draw(&p, 5)).unwrap();
        assert!(market.preferences.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn student_quality_priorities_are_common() {
        let p = params(0.4, 0.7, 1.0, 0.0);
        let market = build_market(&p, &draw(&p, 6)).unwrap();
        assert!(market.priorities.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(params(1.5, 0.0, 0.0, 0.0).validate().is_err());
        assert!(CardinalParams { q: 0, ..params(0.0, 0.0, 0.0, 0.0) }.validate().is_err());
        assert!(params(0.0, 1.0, 0.25, 0.75).validate().is_ok());
    }
}
