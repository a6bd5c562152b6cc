//! Trainable parameters and the module tree that exposes them by name.

use crate::nn::Tensor;
use crate::scalar::Scalar;

/// A tensor with a gradient accumulator. Frozen parameters keep a zero
/// gradient buffer no matter what backward passes run over them.
#[derive(Clone, Debug)]
pub struct Parameter<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub trainable: bool,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            value,
            grad,
            trainable: true,
        }
    }

    pub fn frozen(value: Tensor<T>) -> Self {
        let mut p = Self::new(value);
        p.trainable = false;
        p
    }

    /// Accumulate a gradient contribution; no-op when frozen.
    pub fn accumulate(&mut self, grad: &Tensor<T>) {
        if self.trainable {
            self.grad.add_assign(grad);
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// A tree of named parameters. Implementors visit their parameters in a
/// stable order; nested modules prefix child names with a dot path.
pub trait Module<T: Scalar> {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Parameter<T>));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter<T>));
}

/// Visit a child module, prefixing its parameter names.
pub fn visit_child<T: Scalar, M: Module<T>>(
    child: &M,
    prefix: &str,
    f: &mut dyn FnMut(&str, &Parameter<T>),
) {
    child.visit_params(&mut |name, p| f(&format!("{prefix}.{name}"), p));
}

pub fn visit_child_mut<T: Scalar, M: Module<T>>(
    child: &mut M,
    prefix: &str,
    f: &mut dyn FnMut(&str, &mut Parameter<T>),
) {
    child.visit_params_mut(&mut |name, p| f(&format!("{prefix}.{name}"), p));
}

pub fn zero_grads<T: Scalar>(module: &mut dyn Module<T>) {
    module.visit_params_mut(&mut |_, p| p.zero_grad());
}

pub fn set_trainable<T: Scalar>(module: &mut dyn Module<T>, trainable: bool) {
    module.visit_params_mut(&mut |_, p| p.trainable = trainable);
}

pub fn count_params<T: Scalar>(module: &dyn Module<T>) -> usize {
    let mut n = 0;
    module.visit_params(&mut |_, p| n += p.value.len());
    n
}

pub fn param_names<T: Scalar>(module: &dyn Module<T>) -> Vec<String> {
    let mut names = Vec::new();
    module.visit_params(&mut |name, _| names.push(name.to_string()));
    names
}
