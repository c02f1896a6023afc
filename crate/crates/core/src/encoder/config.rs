use serde::Serialize;

use super::EncoderError;
use crate::numerics::out_len;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvLayer {
    pub window: usize,
    pub stride: usize,
    pub filters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolLayer {
    pub window: usize,
    pub stride: usize,
}

/// Hyperparameters of the relation encoder.
///
/// Three parallel convolution branches with windows `a < b < c` are pooled
/// with windows `beta − y + 1` so that each branch yields `m − beta + 1`
/// positions; the branches are stacked along the channel axis and fed through
/// two more conv → relu → maxpool stages and a fully connected layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncoderConfig {
    pub m: usize,
    pub d: usize,
    pub windows: [usize; 3],
    pub branch_filters: [usize; 3],
    pub beta: usize,
    pub layer2: ConvLayer,
    pub layer3: ConvLayer,
    pub pool: PoolLayer,
    pub k: usize,
}

/// Intermediate lengths (and channel counts) of one encoder pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShapeTrace {
    pub branch_conv: [usize; 3],
    pub branch_pooled: [usize; 3],
    pub stacked: (usize, usize),
    pub layer2_conv: usize,
    pub layer2_pool: usize,
    pub layer3_conv: usize,
    pub layer3_pool: usize,
    pub flat: usize,
}

impl EncoderConfig {
    /// Wikipedia-scale settings: m=400, d=100, windows 3/5/7 with 128/64/32
    /// filters, beta=10, layer 2 {5, 2, 280}, layer 3 {5, 3, 350}, pools {3, 1}.
    pub fn wikipedia(k: usize) -> Self {
        Self {
            m: 400,
            d: 100,
            windows: [3, 5, 7],
            branch_filters: [128, 64, 32],
            beta: 10,
            layer2: ConvLayer {
                window: 5,
                stride: 2,
                filters: 280,
            },
            layer3: ConvLayer {
                window: 5,
                stride: 3,
                filters: 350,
            },
            pool: PoolLayer { window: 3, stride: 1 },
            k,
        }
    }

    /// Pool window that aligns branch `i` to length `m − beta + 1`.
    pub fn branch_pool_window(&self, branch: usize) -> usize {
        self.beta - self.windows[branch] + 1
    }

    pub fn stacked_channels(&self) -> usize {
        self.branch_filters.iter().sum()
    }

    /// Validates the configuration and returns every intermediate length.
    pub fn shape_trace(&self) -> Result<ShapeTrace, EncoderError> {
        let [a, b, c] = self.windows;
        if !(a >= 1 && a < b && b < c && c < self.beta) {
            return Err(EncoderError::Config(format!(
                "windows must satisfy 1 <= a < b < c < beta, got {a}/{b}/{c} with beta {}",
                self.beta
            )));
        }
        let positive = [
            ("m", self.m),
            ("d", self.d),
            ("k", self.k),
            ("layer2.filters", self.layer2.filters),
            ("layer3.filters", self.layer3.filters),
            ("layer2.stride", self.layer2.stride),
            ("layer3.stride", self.layer3.stride),
            ("pool.window", self.pool.window),
            ("pool.stride", self.pool.stride),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(EncoderError::Config(format!("{name} must be positive")));
            }
        }
        if self.branch_filters.contains(&0) {
            return Err(EncoderError::Config("branch filter counts must be positive".into()));
        }
        let stage = |name: &str, len: usize, window: usize, stride: usize| {
            out_len(len, window, stride).ok_or_else(|| {
                EncoderError::Config(format!("{name}: input length {len} is shorter than window {window}"))
            })
        };
        let mut branch_conv = [0; 3];
        let mut branch_pooled = [0; 3];
        for i in 0..3 {
            branch_conv[i] = stage("branch conv", self.m, self.windows[i], 1)?;
            branch_pooled[i] = stage("branch pool", branch_conv[i], self.branch_pool_window(i), 1)?;
        }
        let stacked_len = branch_pooled[0];
        let layer2_conv = stage("layer2 conv", stacked_len, self.layer2.window, self.layer2.stride)?;
        let layer2_pool = stage("layer2 pool", layer2_conv, self.pool.window, self.pool.stride)?;
        let layer3_conv = stage("layer3 conv", layer2_pool, self.layer3.window, self.layer3.stride)?;
        let layer3_pool = stage("layer3 pool", layer3_conv, self.pool.window, self.pool.stride)?;
        Ok(ShapeTrace {
            branch_conv,
            branch_pooled,
            stacked: (stacked_len, self.stacked_channels()),
            layer2_conv,
            layer2_pool,
            layer3_conv,
            layer3_pool,
            flat: layer3_pool * self.layer3.filters,
        })
    }
}
