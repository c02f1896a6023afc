use rand::Rng;

use super::{EncoderConfig, EncoderError, ShapeTrace};
use crate::numerics::{
    concat_channels, conv1d, conv1d_backward, linear, linear_backward, maxpool1d, maxpool1d_backward, relu,
    relu_backward, split_channels, GradBuffer, ParamId, ParameterStore, Tensor,
};

const BRANCH_NAMES: [&str; 3] = ["branch_a", "branch_b", "branch_c"];

#[derive(Debug, Clone, Copy)]
struct Ids {
    branch_w: [ParamId; 3],
    branch_b: [ParamId; 3],
    l2_w: ParamId,
    l2_b: ParamId,
    l3_w: ParamId,
    l3_b: ParamId,
    fc_w: ParamId,
    fc_b: ParamId,
}

impl Ids {
    fn weights(&self) -> [ParamId; 6] {
        [
            self.branch_w[0],
            self.branch_w[1],
            self.branch_w[2],
            self.l2_w,
            self.l3_w,
            self.fc_w,
        ]
    }
}

/// Expected `(name, shape)` of every encoder parameter, in store order.
pub fn parameter_shapes(config: &EncoderConfig, trace: &ShapeTrace) -> Vec<(String, Vec<usize>)> {
    let mut shapes = Vec::new();
    for (i, name) in BRANCH_NAMES.iter().enumerate() {
        shapes.push((
            format!("{name}.filters"),
            vec![config.windows[i], config.d, config.branch_filters[i]],
        ));
        shapes.push((format!("{name}.bias"), vec![config.branch_filters[i]]));
    }
    let stacked = config.stacked_channels();
    shapes.push((
        "layer2.filters".into(),
        vec![config.layer2.window, stacked, config.layer2.filters],
    ));
    shapes.push(("layer2.bias".into(), vec![config.layer2.filters]));
    shapes.push((
        "layer3.filters".into(),
        vec![config.layer3.window, config.layer2.filters, config.layer3.filters],
    ));
    shapes.push(("layer3.bias".into(), vec![config.layer3.filters]));
    shapes.push(("fc.weight".into(), vec![trace.flat, config.k]));
    shapes.push(("fc.bias".into(), vec![config.k]));
    shapes
}

fn glorot_bound(shape: &[usize]) -> f64 {
    let (fan_in, fan_out) = match shape {
        [window, channels, filters] => (window * channels, window * filters),
        [n, k] => (*n, *k),
        _ => (1, 1),
    };
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Saved forward state needed by [`RelationEncoder::backward`].
#[derive(Debug, Clone)]
pub struct Activations {
    input: Tensor,
    branch_pre: [Tensor; 3],
    branch_argmax: [Vec<usize>; 3],
    stacked: Tensor,
    l2_pre: Tensor,
    l2_argmax: Vec<usize>,
    l2_pooled: Tensor,
    l3_pre: Tensor,
    l3_argmax: Vec<usize>,
    l3_pooled_shape: Vec<usize>,
    flat: Tensor,
}

/// The three-branch CNN relation encoder. Parameters live in a
/// [`ParameterStore`]; word vectors are held elsewhere and never touched.
#[derive(Debug, Clone)]
pub struct RelationEncoder {
    config: EncoderConfig,
    trace: ShapeTrace,
    store: ParameterStore,
    ids: Ids,
}

impl RelationEncoder {
    /// Fan-based uniform initialization for weights, zero biases.
    pub fn new<R: Rng + ?Sized>(config: EncoderConfig, rng: &mut R) -> Result<Self, EncoderError> {
        let trace = config.shape_trace()?;
        let mut store = ParameterStore::new();
        for (name, shape) in parameter_shapes(&config, &trace) {
            let value = if name.ends_with(".bias") {
                Tensor::zeros(&shape)
            } else {
                let bound = glorot_bound(&shape);
                let n: usize = shape.iter().product();
                Tensor::new(shape, (0..n).map(|_| rng.gen_range(-bound..bound)).collect())?
            };
            store.insert(name, value, false)?;
        }
        Self::from_store(config, store)
    }

    /// Wraps an existing store (e.g. from a checkpoint), checking every shape.
    pub fn from_store(config: EncoderConfig, store: ParameterStore) -> Result<Self, EncoderError> {
        let trace = config.shape_trace()?;
        let expected = parameter_shapes(&config, &trace);
        if store.len() != expected.len() {
            return Err(EncoderError::Checkpoint(format!(
                "expected {} encoder tensors, found {}",
                expected.len(),
                store.len()
            )));
        }
        let mut ids = Vec::with_capacity(expected.len());
        for (name, shape) in &expected {
            let id = store
                .id(name)
                .ok_or_else(|| EncoderError::Checkpoint(format!("missing tensor `{name}`")))?;
            if store.value(id).shape() != shape.as_slice() {
                return Err(EncoderError::Checkpoint(format!(
                    "tensor `{name}` has shape {:?}, expected {shape:?}",
                    store.value(id).shape()
                )));
            }
            ids.push(id);
        }
        let ids = Ids {
            branch_w: [ids[0], ids[2], ids[4]],
            branch_b: [ids[1], ids[3], ids[5]],
            l2_w: ids[6],
            l2_b: ids[7],
            l3_w: ids[8],
            l3_b: ids[9],
            fc_w: ids[10],
            fc_b: ids[11],
        };
        Ok(Self {
            config,
            trace,
            store,
            ids,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn trace(&self) -> &ShapeTrace {
        &self.trace
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParameterStore {
        self.store
    }

    /// Ids of the weight tensors (biases excluded), the ones regularized.
    pub fn weight_ids(&self) -> [ParamId; 6] {
        self.ids.weights()
    }

    /// Unnormalized relation vector for an `[m, d]` input.
    pub fn encode(&self, input: &Tensor) -> Result<Tensor, EncoderError> {
        self.forward(input).map(|(out, _)| out)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Activations), EncoderError> {
        input.expect_shape(&[self.config.m, self.config.d], "encode")?;
        let s = &self.store;
        let mut branch_pre: Vec<Tensor> = Vec::with_capacity(3);
        let mut branch_argmax: Vec<Vec<usize>> = Vec::with_capacity(3);
        let mut pooled: Vec<Tensor> = Vec::with_capacity(3);
        for i in 0..3 {
            let pre = conv1d(input, s.value(self.ids.branch_w[i]), s.value(self.ids.branch_b[i]), 1)?;
            let p = maxpool1d(&relu(&pre), self.config.branch_pool_window(i), 1)?;
            branch_pre.push(pre);
            branch_argmax.push(p.argmax);
            pooled.push(p.output);
        }
        let stacked = concat_channels(&[&pooled[0], &pooled[1], &pooled[2]])?;

        let l2_pre = conv1d(&stacked, s.value(self.ids.l2_w), s.value(self.ids.l2_b), self.config.layer2.stride)?;
        let l2 = maxpool1d(&relu(&l2_pre), self.config.pool.window, self.config.pool.stride)?;
        let l3_pre = conv1d(&l2.output, s.value(self.ids.l3_w), s.value(self.ids.l3_b), self.config.layer3.stride)?;
        let l3 = maxpool1d(&relu(&l3_pre), self.config.pool.window, self.config.pool.stride)?;
        let l3_pooled_shape = l3.output.shape().to_vec();
        let flat = l3.output.reshape(vec![self.trace.flat])?;
        let out = linear(&flat, s.value(self.ids.fc_w), s.value(self.ids.fc_b))?;

        let take3 = |mut v: Vec<Tensor>| -> [Tensor; 3] {
            let c = v.pop().unwrap();
            let b = v.pop().unwrap();
            let a = v.pop().unwrap();
            [a, b, c]
        };
        let mut argmax_iter = branch_argmax.into_iter();
        let branch_argmax = [
            argmax_iter.next().unwrap(),
            argmax_iter.next().unwrap(),
            argmax_iter.next().unwrap(),
        ];
        Ok((
            out,
            Activations {
                input: input.clone(),
                branch_pre: take3(branch_pre),
                branch_argmax,
                stacked,
                l2_pre,
                l2_argmax: l2.argmax,
                l2_pooled: l2.output,
                l3_pre,
                l3_argmax: l3.argmax,
                l3_pooled_shape,
                flat,
            },
        ))
    }

    /// Accumulates parameter gradients for `upstream = ∂L/∂output` into
    /// `grads` (a buffer from `self.store().grad_buffer()`).
    pub fn backward(&self, acts: &Activations, upstream: &Tensor, grads: &mut GradBuffer) -> Result<(), EncoderError> {
        if acts.input.shape() != [self.config.m, self.config.d] || acts.flat.len() != self.trace.flat {
            return Err(EncoderError::Activations(
                "activations were not produced by this encoder configuration".into(),
            ));
        }
        upstream.expect_shape(&[self.config.k], "encode_backward")?;
        let s = &self.store;
        let cfg = &self.config;

        let fc = linear_backward(&acts.flat, s.value(self.ids.fc_w), upstream)?;
        grads.add(self.ids.fc_w, &fc.weight)?;
        grads.add(self.ids.fc_b, &fc.bias)?;

        let g = fc.input.reshape(acts.l3_pooled_shape.clone())?;
        let g = maxpool1d_backward(acts.l3_pre.shape(), &acts.l3_argmax, &g)?;
        let g = relu_backward(&acts.l3_pre, &g)?;
        let l3 = conv1d_backward(&acts.l2_pooled, s.value(self.ids.l3_w), cfg.layer3.stride, &g, true)?;
        grads.add(self.ids.l3_w, &l3.filters)?;
        grads.add(self.ids.l3_b, &l3.bias)?;

        let g = maxpool1d_backward(acts.l2_pre.shape(), &acts.l2_argmax, &l3.input.expect("input grad requested"))?;
        let g = relu_backward(&acts.l2_pre, &g)?;
        let l2 = conv1d_backward(&acts.stacked, s.value(self.ids.l2_w), cfg.layer2.stride, &g, true)?;
        grads.add(self.ids.l2_w, &l2.filters)?;
        grads.add(self.ids.l2_b, &l2.bias)?;

        let parts = split_channels(&l2.input.expect("input grad requested"), &cfg.branch_filters)?;
        for (i, gp) in parts.iter().enumerate() {
            let g = maxpool1d_backward(acts.branch_pre[i].shape(), &acts.branch_argmax[i], gp)?;
            let g = relu_backward(&acts.branch_pre[i], &g)?;
            let b = conv1d_backward(&acts.input, s.value(self.ids.branch_w[i]), 1, &g, false)?;
            grads.add(self.ids.branch_w[i], &b.filters)?;
            grads.add(self.ids.branch_b[i], &b.bias)?;
        }
        Ok(())
    }

    /// `lambda · Σ w²` over the weight tensors; when `grads` is given, adds
    /// `2·lambda·w` to it.
    pub fn weight_penalty(&self, lambda: f64, grads: Option<&mut GradBuffer>) -> Result<f64, EncoderError> {
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let ids = self.weight_ids();
        let penalty = lambda * ids.iter().map(|&id| self.store.value(id).sum_of_squares()).sum::<f64>();
        if let Some(grads) = grads {
            for id in ids {
                let mut g = self.store.value(id).clone();
                g.scale(2.0 * lambda);
                grads.add(id, &g)?;
            }
        }
        Ok(penalty)
    }
}
