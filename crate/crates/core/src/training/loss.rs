use crate::oracle::Vec3;

/// Default lower bound on the squared reference speed in the loss denominator.
pub const LOSS_GUARD: f64 = 1e-30;

/// Relative squared error of one velocity, `|u - u_pred|^2 / max(|u|^2, delta)`.
#[inline]
pub fn relative_sq_error(predicted: &Vec3, truth: &Vec3, delta: f64) -> f64 {
    (truth - predicted).norm_squared() / truth.norm_squared().max(delta)
}

/// Mean of per-velocity relative squared errors. Zero for empty input.
pub fn relative_mse_loss(predicted: &[Vec3], truth: &[Vec3], delta: f64) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "prediction and truth lengths differ");
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).map(|(p, t)| relative_sq_error(p, t, delta)).sum::<f64>() / truth.len() as f64
}

/// Learning rate halved every `period` epochs from `base`.
pub fn lr_schedule_with(epoch: usize, base: f64, period: usize) -> f64 {
    let halvings = (epoch / period.max(1)) as i32;
    base * 0.5f64.powi(halvings)
}

/// Default schedule: 1e-3, halved every 100 epochs.
pub fn lr_schedule(epoch: usize) -> f64 {
    lr_schedule_with(epoch, 1e-3, 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loss_reference_values() {
        let t = [Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(relative_mse_loss(&t, &t, LOSS_GUARD), 0.0);
        assert_eq!(relative_mse_loss(&[Vec3::zeros()], &[Vec3::new(0.3, -2.0, 7.0)], LOSS_GUARD), 1.0);
        let l = relative_mse_loss(&[Vec3::new(0.9, 0.0, 0.0)], &t, LOSS_GUARD);
        assert!((l - 0.01).abs() < 1e-15);
        // zero truth stays finite under the guard
        assert!(relative_mse_loss(&[Vec3::new(1e-20, 0.0, 0.0)], &[Vec3::zeros()], LOSS_GUARD).is_finite());
    }

    #[test]
    fn schedule_values() {
        assert_eq!(lr_schedule(0), 0.001);
        assert_eq!(lr_schedule(99), 0.001);
        assert_eq!(lr_schedule(150), 0.0005);
        assert_eq!(lr_schedule(350), 0.000125);
    }

    proptest! {
        #[test]
        fn loss_is_scale_invariant(
            t in prop::array::uniform3(-10.0f64..10.0),
            p in prop::array::uniform3(-10.0f64..10.0),
            k in prop_oneof![-64.0f64..-1e-3, 1e-3f64..64.0],
        ) {
            let t = Vec3::from(t);
            let p = Vec3::from(p);
            prop_assume!(t.norm() > 1e-6);
            let base = relative_sq_error(&p, &t, LOSS_GUARD);
            let scaled = relative_sq_error(&(p * k), &(t * k), LOSS_GUARD);
            prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn binary_scaling_is_bitwise_invariant(
            t in prop::array::uniform3(-10.0f64..10.0),
            p in prop::array::uniform3(-10.0f64..10.0),
            e in -30i32..30,
            negative in any::<bool>(),
        ) {
            let t = Vec3::from(t);
            let p = Vec3::from(p);
            prop_assume!(t.norm() > 1e-6);
            let k = if negative { -(2f64.powi(e)) } else { 2f64.powi(e) };
            prop_assert_eq!(relative_sq_error(&p, &t, LOSS_GUARD), relative_sq_error(&(p * k), &(t * k), LOSS_GUARD));
        }
    }
}
