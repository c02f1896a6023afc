use std::collections::BTreeMap;

use super::{NumericsError, Tensor};

/// Handle to an entry of a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    name: String,
    value: Tensor,
    grad: Tensor,
    frozen: bool,
}

impl Param {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

/// Named trainable tensors with gradient slots.
///
/// Entries keep insertion order, so iteration (and anything serialized from
/// it) is deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    params: Vec<Param>,
    by_name: BTreeMap<String, usize>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor, frozen: bool) -> Result<ParamId, NumericsError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(NumericsError::DuplicateParameter(name));
        }
        let grad = Tensor::zeros(value.shape());
        let id = self.params.len();
        self.by_name.insert(name.clone(), id);
        self.params.push(Param {
            name,
            value,
            grad,
            frozen,
        });
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    /// Replaces a value in place, keeping the shape.
    pub fn set_value(&mut self, id: ParamId, value: Tensor) -> Result<(), NumericsError> {
        let p = &mut self.params[id.0];
        value.expect_shape(p.value.shape(), "set_value")?;
        p.value = value;
        Ok(())
    }

    /// Direct mutable access to a value. Intended for initialization and
    /// checkpoint restore, not for optimizer updates.
    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].grad
    }

    pub fn accumulate_grad(&mut self, id: ParamId, grad: &Tensor) -> Result<(), NumericsError> {
        self.params[id.0].grad.add_assign(grad)
    }

    pub fn accumulate(&mut self, buffer: &GradBuffer) -> Result<(), NumericsError> {
        if buffer.grads.len() != self.params.len() {
            return Err(NumericsError::DimensionMismatch {
                op: "accumulate",
                dimension: "parameter count",
                expected: self.params.len(),
                found: buffer.grads.len(),
            });
        }
        for (p, g) in self.params.iter_mut().zip(&buffer.grads) {
            p.grad.add_assign(g)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Zero-initialized gradient buffer matching this store's shapes.
    pub fn grad_buffer(&self) -> GradBuffer {
        GradBuffer {
            grads: self.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
        }
    }

    /// Plain SGD: `value ← value − lr·grad` on every non-frozen entry, then
    /// all gradients are zeroed.
    pub fn sgd_step(&mut self, learning_rate: f64) {
        for p in &mut self.params {
            if !p.frozen {
                for (v, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                    *v -= learning_rate * g;
                }
            }
            p.grad.fill(0.0);
        }
    }
}

/// Detached gradient accumulator, one tensor per store entry.
///
/// Lets several workers accumulate independently and be merged in a fixed
/// order afterwards.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    grads: Vec<Tensor>,
}

impl GradBuffer {
    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.grads[id.0]
    }

    pub fn add(&mut self, id: ParamId, grad: &Tensor) -> Result<(), NumericsError> {
        self.grads[id.0].add_assign(grad)
    }

    pub fn merge(&mut self, other: &GradBuffer) -> Result<(), NumericsError> {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.scale(factor);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0))
    }
}
