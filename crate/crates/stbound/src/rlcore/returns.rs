//! Exponentially weighted advantage estimates and value targets over
//! multi-step temporal-difference residuals.

use num_traits::Float;

/// A_t = sum_l (gamma*lambda)^l * delta_{t+l} with
/// delta_t = r_t + gamma*V_{t+1} - V_t, computed by the backward recursion.
/// `bootstrap` stands in for V at the state after the last transition
/// (0 on a true terminal).
pub fn gae<F: Float>(rewards: &[F], values: &[F], bootstrap: F, gamma: F, lambda: F) -> Vec<F> {
    assert_eq!(rewards.len(), values.len());
    let n = rewards.len();
    let mut adv = vec![F::zero(); n];
    let mut acc = F::zero();
    for t in (0..n).rev() {
        let next_v = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next_v - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    adv
}

/// Forward-view lambda-return targets; identical to V_t + A_t.
pub fn td_lambda_targets<F: Float>(
    rewards: &[F],
    values: &[F],
    bootstrap: F,
    gamma: F,
    lambda: F,
) -> Vec<F> {
    gae(rewards, values, bootstrap, gamma, lambda)
        .into_iter()
        .zip(values.iter())
        .map(|(a, &v)| v + a)
        .collect()
}
