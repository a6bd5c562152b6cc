//! Central finite-difference verification of analytic gradients.
//!
//! Runs in `f64`; single precision is too noisy for trustworthy differences.

use crate::nn::{Module, NnError};

/// Outcome of one gradient check sweep.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Compare analytic gradients against central differences over every
/// trainable scalar of `model`.
///
/// `run(model, accumulate)` evaluates the scalar loss; when `accumulate` is
/// true it must also run the backward pass into the parameter gradients.
/// Relative error uses max(|analytic|, |numeric|, 1e-6) as the denominator so
/// near-zero gradients degrade to an absolute comparison.
pub fn grad_check<M, F>(model: &mut M, mut run: F, eps: f64) -> Result<GradCheckReport, NnError>
where
    M: Module<f64>,
    F: FnMut(&mut M, bool) -> Result<f64, NnError>,
{
    crate::nn::param::zero_grads(model);
    run(model, true)?;

    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit_params(&mut |name, p| {
        if p.trainable {
            analytic.push((name.to_string(), p.grad.data().to_vec()));
        }
    });

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };

    for (name, grads) in &analytic {
        for idx in 0..grads.len() {
            poke(model, name, idx, eps);
            let plus = run(model, false)?;
            poke(model, name, idx, -2.0 * eps);
            let minus = run(model, false)?;
            poke(model, name, idx, eps);

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grads[idx];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            let rel = (a - numeric).abs() / denom;
            report.checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = name.clone();
                report.worst_index = idx;
            }
        }
    }
    Ok(report)
}

fn poke<M: Module<f64>>(model: &mut M, target: &str, idx: usize, delta: f64) {
    let mut found = false;
    model.visit_params_mut(&mut |name, p| {
        if name == target {
            p.value.data_mut()[idx] += delta;
            found = true;
        }
    });
    assert!(found, "parameter {target} not found during gradient check");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::losses::l2_distance;
    use crate::nn::{Dense, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_with_l2_loss_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut layer = Dense::<f64>::new(4, 3, &mut rng);
        let x = Tensor::from_vec(&[2, 4], (0..8).map(|i| 0.17 * i as f64 - 0.5).collect()).unwrap();
        let target = vec![0.2; 6];
        let report = grad_check(
            &mut layer,
            |layer, accumulate| {
                let (y, ctx) = layer.forward(&x)?;
                let (loss, grad) = l2_distance(y.data(), &target);
                if accumulate {
                    layer.backward(&ctx, &Tensor::from_vec(&[2, 3], grad).unwrap());
                }
                Ok(loss)
            },
            1e-5,
        )
        .unwrap();
        assert!(report.passes(1e-6), "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn a_wrong_backward_is_flagged_with_the_parameter_name() {
        // A layer whose backward deliberately drops the bias gradient.
        struct Broken {
            inner: Dense<f64>,
        }
        impl Module<f64> for Broken {
            fn visit_params(&self, f: &mut dyn FnMut(&str, &crate::nn::Parameter<f64>)) {
                crate::nn::param::visit_child(&self.inner, "broken", f);
            }
            fn visit_params_mut(
                &mut self,
                f: &mut dyn FnMut(&str, &mut crate::nn::Parameter<f64>),
            ) {
                crate::nn::param::visit_child_mut(&mut self.inner, "broken", f);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut broken = Broken {
            inner: Dense::new(2, 2, &mut rng),
        };
        let x = Tensor::from_vec(&[1, 2], vec![0.3, -0.7]).unwrap();
        let target = vec![1.0, -1.0];
        let report = grad_check(
            &mut broken,
            |m, accumulate| {
                let (y, ctx) = m.inner.forward(&x)?;
                let (loss, grad) = l2_distance(y.data(), &target);
                if accumulate {
                    m.inner.backward(&ctx, &Tensor::from_vec(&[1, 2], grad).unwrap());
                    // sabotage: wipe the bias gradient
                    m.inner.bias.grad.fill(0.0);
                }
                Ok(loss)
            },
            1e-5,
        )
        .unwrap();
        assert!(!report.passes(1e-4));
        assert_eq!(report.worst_param, "broken.bias");
    }

    #[test]
    fn frozen_parameters_are_excluded_from_the_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut layer = Dense::<f64>::new(3, 2, &mut rng);
        layer.weight.trainable = false;
        let x = Tensor::from_vec(&[1, 3], vec![0.1, 0.2, 0.3]).unwrap();
        let target = vec![0.0, 0.0];
        let report = grad_check(
            &mut layer,
            |layer, accumulate| {
                let (y, ctx) = layer.forward(&x)?;
                let (loss, grad) = l2_distance(y.data(), &target);
                if accumulate {
                    layer.backward(&ctx, &Tensor::from_vec(&[1, 2], grad).unwrap());
                }
                Ok(loss)
            },
            1e-5,
        )
        .unwrap();
        // only the bias (2 scalars) is swept
        assert_eq!(report.checked, 2);
    }
}
