use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::numerics::{l2_normalize, l2_normalize_backward, Tensor};

/// Distance used to compare `ĥ + r̂` with `t̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dissimilarity {
    L1,
    L2,
}

impl Dissimilarity {
    pub fn distance(self, diff: &[f64]) -> f64 {
        match self {
            Dissimilarity::L1 => diff.iter().map(|v| v.abs()).sum(),
            Dissimilarity::L2 => diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Subgradient of [`Self::distance`] with respect to `diff`; zero at the
    /// non-differentiable points.
    fn gradient(self, diff: &[f64]) -> Vec<f64> {
        match self {
            Dissimilarity::L1 => diff
                .iter()
                .map(|&v| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
            Dissimilarity::L2 => {
                let n = self.distance(diff);
                if n == 0.0 {
                    vec![0.0; diff.len()]
                } else {
                    diff.iter().map(|v| v / n).collect()
                }
            }
        }
    }
}

impl std::str::FromStr for Dissimilarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            other => Err(format!("unknown dissimilarity `{other}` (expected L1 or L2)")),
        }
    }
}

impl std::fmt::Display for Dissimilarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dissimilarity::L1 => "L1",
            Dissimilarity::L2 => "L2",
        })
    }
}

/// Loss value and gradients with respect to the raw (unnormalized) inputs,
/// in the order head, relation, tail, corrupted head, corrupted tail.
#[derive(Debug, Clone)]
pub struct MarginLoss {
    pub loss: f64,
    pub hinge: f64,
    pub grads: [Vec<f64>; 5],
}

/// `d(ĥ + r̂, t̂)` on normalized copies of the inputs.
pub fn triple_distance(head: &[f64], relation: &[f64], tail: &[f64], dissimilarity: Dissimilarity) -> Result<f64, TrainError> {
    let h = normalized(head)?;
    let r = normalized(relation)?;
    let t = normalized(tail)?;
    let diff: Vec<f64> = (0..h.len()).map(|i| h[i] + r[i] - t[i]).collect();
    Ok(dissimilarity.distance(&diff))
}

fn normalized(v: &[f64]) -> Result<Vec<f64>, TrainError> {
    Ok(l2_normalize(&Tensor::vector(v.to_vec()))?.into_data())
}

/// `max(γ + d(ĥ + r̂, t̂) − d(ĥ' + r̂, t̂'), 0) + μ`.
///
/// Every input vector is L2-normalized before use, so the hinge is invariant
/// to positive rescaling of any of them. Gradients are zero whenever the
/// hinge is inactive; `mu` is a constant here and contributes no gradient.
#[allow(clippy::too_many_arguments)]
pub fn triple_margin_loss(
    head: &[f64],
    relation: &[f64],
    tail: &[f64],
    neg_head: &[f64],
    neg_tail: &[f64],
    gamma: f64,
    dissimilarity: Dissimilarity,
    mu: f64,
) -> Result<MarginLoss, TrainError> {
    let k = relation.len();
    for (name, v) in [
        ("head", head),
        ("tail", tail),
        ("corrupted head", neg_head),
        ("corrupted tail", neg_tail),
    ] {
        if v.len() != k {
            return Err(TrainError::Config(format!(
                "{name} vector has dimension {}, relation has {k}",
                v.len()
            )));
        }
    }
    let raw: [Tensor; 5] = [head, relation, tail, neg_head, neg_tail].map(|v| Tensor::vector(v.to_vec()));
    let mut unit = Vec::with_capacity(5);
    for t in &raw {
        unit.push(l2_normalize(t)?.into_data());
    }
    let (h, r, t, hn, tn) = (&unit[0], &unit[1], &unit[2], &unit[3], &unit[4]);
    let pos: Vec<f64> = (0..k).map(|i| h[i] + r[i] - t[i]).collect();
    let neg: Vec<f64> = (0..k).map(|i| hn[i] + r[i] - tn[i]).collect();
    let margin = gamma + dissimilarity.distance(&pos) - dissimilarity.distance(&neg);
    let hinge = margin.max(0.0);

    let grads = if margin > 0.0 {
        let gp = dissimilarity.gradient(&pos);
        let gn: Vec<f64> = dissimilarity.gradient(&neg).into_iter().map(|v| -v).collect();
        let unit_grads: [Vec<f64>; 5] = [
            gp.clone(),
            gp.iter().zip(&gn).map(|(a, b)| a + b).collect(),
            gp.iter().map(|v| -v).collect(),
            gn.clone(),
            gn.iter().map(|v| -v).collect(),
        ];
        let mut out: [Vec<f64>; 5] = Default::default();
        for (i, g) in unit_grads.into_iter().enumerate() {
            out[i] = l2_normalize_backward(&raw[i], &Tensor::vector(g))?.into_data();
        }
        out
    } else {
        std::array::from_fn(|_| vec![0.0; k])
    };

    Ok(MarginLoss {
        loss: hinge + mu,
        hinge,
        grads,
    })
}
