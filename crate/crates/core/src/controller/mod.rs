//! Sampling-based receding-horizon control, the goal reacher and the random
//! baseline policy.

mod goal;
mod mppi;

pub use goal::{goal_reacher_update, GoalReacherConfig, GoalStatus};
pub use mppi::{
    importance_weights, motion_primitives, mpc_step, rollout, sample_perturbations, trajectory_cost, update_controls, ControlSequence,
    MpcConfig, Perturbations,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{Control, VelocityLimits};

/// Uniform draws from the velocity box.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    limits: VelocityLimits,
}

impl RandomPolicy {
    pub fn new(seed: u64, limits: VelocityLimits) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            limits,
        }
    }

    pub fn next_control(&mut self) -> Control {
        let l = self.limits;
        Control::new(
            self.rng.random_range(l.v_min..=l.v_max),
            self.rng.random_range(l.omega_min..=l.omega_max),
        )
    }
}

/// The first control of a seeded random policy.
pub fn privileged_random_policy(seed: u64, limits: VelocityLimits) -> Control {
    RandomPolicy::new(seed, limits).next_control()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_policy_is_reproducible_and_bounded() {
        let lim = VelocityLimits::default();
        let mut a = RandomPolicy::new(5, lim);
        let mut b = RandomPolicy::new(5, lim);
        for _ in 0..100 {
            let u = a.next_control();
            assert_eq!(u, b.next_control());
            assert!(lim.contains(u));
        }
        assert_eq!(privileged_random_policy(9, lim), privileged_random_policy(9, lim));
    }

    #[test]
    fn collapsed_box() {
        let lim = VelocityLimits {
            v_min: 0.3,
            v_max: 0.3,
            omega_min: -0.2,
            omega_max: -0.2,
        };
        let mut p = RandomPolicy::new(1, lim);
        for _ in 0..10 {
            assert_eq!(p.next_control(), Control::new(0.3, -0.2));
        }
    }
}
