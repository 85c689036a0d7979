//! Always-match urn processes that upper-bound any adversarial strategy
//! under constant rewards.
//!
//! Both processes track an adversarial and an honest component. An honest
//! draw adds `c` to the honest side. An adversarial draw cancels `c` honest
//! tokens (clipped at zero) and credits the adversary `c` (AM-1) or `2c`
//! (AM-2). The second variant keeps the urn growing by exactly `c` per draw,
//! which makes its mean tractable.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    Am1,
    Am2,
}

impl BoundVariant {
    fn adversary_credit(self) -> f64 {
        match self {
            BoundVariant::Am1 => 1.0,
            BoundVariant::Am2 => 2.0,
        }
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundVariant::Am1 => "am1",
            BoundVariant::Am2 => "am2",
        })
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "am1" | "am-1" => Ok(BoundVariant::Am1),
            "am2" | "am-2" => Ok(BoundVariant::Am2),
            other => Err(Error::Config(format!("unknown bound variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProcessState {
    pub x_adversary: f64,
    pub x_honest: f64,
    pub c: f64,
    pub variant: BoundVariant,
}

impl BoundProcessState {
    pub fn new(
        variant: BoundVariant,
        c: f64,
        adversary_fraction: f64,
        initial_stake: f64,
    ) -> Result<Self> {
        check_params(c, adversary_fraction, initial_stake)?;
        Ok(Self {
            x_adversary: adversary_fraction * initial_stake,
            x_honest: (1.0 - adversary_fraction) * initial_stake,
            c,
            variant,
        })
    }

    /// Adversarial share of the urn; an empty urn counts as fully adversarial.
    pub fn fraction(&self) -> f64 {
        let total = self.x_adversary + self.x_honest;
        if total > 0.0 {
            self.x_adversary / total
        } else {
            1.0
        }
    }

    pub fn total(&self) -> f64 {
        self.x_adversary + self.x_honest
    }

    /// Applies one draw; returns whether the adversary won it.
    #[inline]
    pub fn step_mut(&mut self, draw: f64) -> bool {
        let adversary_wins = draw < self.fraction();
        if adversary_wins {
            self.x_adversary += self.variant.adversary_credit() * self.c;
            self.x_honest = (self.x_honest - self.c).max(0.0);
        } else {
            self.x_honest += self.c;
        }
        adversary_wins
    }
}

fn check_params(c: f64, adversary_fraction: f64, initial_stake: f64) -> Result<()> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::invalid("per-draw reward must be nonnegative"));
    }
    if !(0.0..=1.0).contains(&adversary_fraction) {
        return Err(Error::invalid("adversary fraction must lie in [0,1]"));
    }
    if !(initial_stake.is_finite() && initial_stake > 0.0) {
        return Err(Error::invalid("initial stake must be positive"));
    }
    Ok(())
}

/// One transition of the bounding urn.
pub fn am_step(state: BoundProcessState, draw: f64) -> BoundProcessState {
    let mut next = state;
    next.step_mut(draw);
    next
}

/// Final adversarial fraction after `slots` draws.
pub fn run_bound<R: Rng + ?Sized>(
    variant: BoundVariant,
    slots: usize,
    c: f64,
    adversary_fraction: f64,
    initial_stake: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut state = BoundProcessState::new(variant, c, adversary_fraction, initial_stake)?;
    for _ in 0..slots {
        state.step_mut(rng.random::<f64>());
    }
    Ok(state.fraction())
}

/// Adversarial gain `η = cT / (S(0) + c)`.
pub fn gain_eta(slots: usize, c: f64, initial_stake: f64) -> f64 {
    c * slots as f64 / (initial_stake + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBound {
    pub eta: f64,
    pub expected_final_fraction: f64,
}

impl GainBound {
    pub fn relative(&self, adversary_fraction: f64) -> f64 {
        self.expected_final_fraction / adversary_fraction
    }
}

/// Whether the total reward leaves the honest side strictly nonnegative, so
/// AM-2 never clips.
pub fn am2_regime_holds(slots: usize, c: f64, adversary_fraction: f64, initial_stake: f64) -> bool {
    c * slots as f64 <= initial_stake * (1.0 - adversary_fraction)
}

/// Expected AM-2 fraction `(1 + η) v_A(0)`.
///
/// Returns [`Error::OutOfRegime`] when `cT > S(0)(1 - v_A(0))`; the process
/// can still be simulated there but the closed form is not guaranteed.
pub fn am2_mean_closed_form(
    slots: usize,
    c: f64,
    adversary_fraction: f64,
    initial_stake: f64,
) -> Result<GainBound> {
    check_params(c, adversary_fraction, initial_stake)?;
    if !am2_regime_holds(slots, c, adversary_fraction, initial_stake) {
        return Err(Error::OutOfRegime {
            total_reward: c * slots as f64,
            honest_stake: initial_stake * (1.0 - adversary_fraction),
        });
    }
    let eta = gain_eta(slots, c, initial_stake);
    Ok(GainBound {
        eta,
        expected_final_fraction: (1.0 + eta) * adversary_fraction,
    })
}

/// Iterates `E[v(t+1) | v(t)] = v(t) S(t+2)/S(t+1)` with `S(t) = S(0) + ct`.
pub fn am2_mean_recursion(
    slots: usize,
    c: f64,
    adversary_fraction: f64,
    initial_stake: f64,
) -> f64 {
    let stake = |t: usize| initial_stake + c * t as f64;
    (0..slots).fold(adversary_fraction, |v, t| v * stake(t + 2) / stake(t + 1))
}

/// Leading term of the no-compounding bound
/// `(1 + v η / (1 + (1-v) η)) v`.
pub fn no_compounding_bound(adversary_fraction: f64, eta: f64) -> Result<f64> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    let v = adversary_fraction;
    if eta.is_infinite() {
        return Ok(v / (1.0 - v));
    }
    Ok((1.0 + v * eta / (1.0 + (1.0 - v) * eta)) * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(variant: BoundVariant, a: f64, h: f64, c: f64) -> BoundProcessState {
        BoundProcessState {
            x_adversary: a,
            x_honest: h,
            c,
            variant,
        }
    }

    #[test]
    fn step_examples() {
        for draw in [0.0, 0.4, 0.99] {
            let next = am_step(state(BoundVariant::Am1, 0.0, 1.0, 0.5), draw);
            assert_eq!((next.x_adversary, next.x_honest), (0.0, 1.5));
        }
        let next = am_step(state(BoundVariant::Am1, 1.0, 1.0, 1.0), 0.3);
        assert_eq!((next.x_adversary, next.x_honest), (2.0, 0.0));

        let before = state(BoundVariant::Am2, 1.0, 2.0, 1.0);
        let next = am_step(before, 0.2);
        assert_eq!((next.x_adversary, next.x_honest), (3.0, 1.0));
        assert_eq!(next.total() - before.total(), 1.0);
    }

    #[test]
    fn empty_urn_counts_as_adversarial() {
        assert_eq!(state(BoundVariant::Am1, 0.0, 0.0, 1.0).fraction(), 1.0);
    }

    #[test]
    fn closed_form_examples() {
        let g = am2_mean_closed_form(10, 0.05, 1.0 / 3.0, 1.0).unwrap();
        assert!((g.eta - 0.5 / 1.05).abs() < 1e-15);
        assert!((g.expected_final_fraction - 0.492063492).abs() < 1e-8);

        let g = am2_mean_closed_form(10, 0.0, 0.3, 1.0).unwrap();
        assert_eq!((g.eta, g.expected_final_fraction), (0.0, 0.3));
        let g = am2_mean_closed_form(0, 0.4, 0.3, 1.0).unwrap();
        assert_eq!(g.expected_final_fraction, 0.3);

        assert!(matches!(
            am2_mean_closed_form(1, 1.0, 1.0 / 3.0, 1.0),
            Err(Error::OutOfRegime { .. })
        ));
    }

    #[test]
    fn recursion_matches_closed_form() {
        for &(t, c) in &[(10usize, 0.05), (1000, 0.0006), (1, 0.5), (0, 0.3)] {
            let closed = am2_mean_closed_form(t, c, 1.0 / 3.0, 1.0)
                .unwrap()
                .expected_final_fraction;
            let rec = am2_mean_recursion(t, c, 1.0 / 3.0, 1.0);
            assert!((closed - rec).abs() < 1e-12, "T={t}: {closed} vs {rec}");
        }
    }

    #[test]
    fn no_compounding_examples() {
        assert_eq!(no_compounding_bound(0.25, 0.0).unwrap(), 0.25);
        assert!((no_compounding_bound(1.0 / 3.0, 1.0).unwrap() - 0.4).abs() < 1e-15);
        let v = 1.0 / 3.0;
        assert!((no_compounding_bound(v, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        assert!((no_compounding_bound(v, 1e12).unwrap() - v / (1.0 - v)).abs() < 1e-9);
        assert!(no_compounding_bound(v, -1.0).is_err());
    }

    #[test]
    fn zero_reward_freezes_fraction() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for variant in [BoundVariant::Am1, BoundVariant::Am2] {
            assert_eq!(
                run_bound(variant, 500, 0.0, 0.3, 1.0, &mut rng).unwrap(),
                0.3
            );
        }
    }

    #[test]
    fn variant_names() {
        assert_eq!("AM-1".parse::<BoundVariant>().unwrap(), BoundVariant::Am1);
        assert_eq!(BoundVariant::Am2.to_string(), "am2");
        assert!("am3".parse::<BoundVariant>().is_err());
    }
}
