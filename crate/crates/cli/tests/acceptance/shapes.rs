use std::time::Instant;

use ecg_core::encoder::{ConvLayer, EncoderConfig, PoolLayer, RelationEncoder};
use ecg_core::gradcheck::{central_difference, max_relative_error};
use ecg_core::numerics::{
    concat_channels, conv1d, conv1d_backward, l2_normalize, l2_normalize_backward, linear, linear_backward, maxpool1d,
    maxpool1d_backward, relu, relu_backward, split_channels, Tensor,
};
use ecg_core::trainer::{triple_margin_loss, Dissimilarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{check, Verdict};

const EPS: f64 = 1e-6;
const TOLERANCE: f64 = 1e-4;
const BUDGET_SECS: f64 = 30.0;

pub fn tiny_encoder() -> EncoderConfig {
    EncoderConfig {
        m: 12,
        d: 4,
        windows: [2, 3, 4],
        branch_filters: [3, 2, 2],
        beta: 5,
        layer2: ConvLayer {
            window: 2,
            stride: 2,
            filters: 3,
        },
        layer3: ConvLayer {
            window: 2,
            stride: 1,
            filters: 4,
        },
        pool: PoolLayer { window: 2, stride: 1 },
        k: 3,
    }
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Keeps values away from zero so ReLU and L1 kinks are never straddled.
fn away_from_zero(mut t: Tensor) -> Tensor {
    for v in t.data_mut() {
        *v += 0.2 * v.signum();
    }
    t
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn with(t: &Tensor, vals: &[f64]) -> Tensor {
    Tensor::new(t.shape().to_vec(), vals.to_vec()).unwrap()
}

/// Records the worst relative error of `analytic` against central
/// differences of `f` around `point`.
struct Suite {
    worst: f64,
    worst_name: String,
    checks: usize,
}

impl Suite {
    fn check(&mut self, name: &str, analytic: &[f64], point: &[f64], f: impl FnMut(&[f64]) -> f64) {
        let numeric = central_difference(point, EPS, f);
        let err = max_relative_error(analytic, &numeric);
        self.checks += 1;
        if err >= self.worst {
            self.worst = err;
            self.worst_name = name.to_string();
        }
    }
}

fn ops(suite: &mut Suite, rng: &mut ChaCha8Rng) {
    for stride in [1, 2] {
        let x = random(rng, &[9, 3]);
        let w = random(rng, &[3, 3, 4]);
        let b = random(rng, &[4]);
        let g = random(rng, &[conv1d(&x, &w, &b, stride).unwrap().dim(0), 4]);
        let grads = conv1d_backward(&x, &w, stride, &g, true).unwrap();
        let name = format!("conv1d stride {stride}");
        suite.check(&format!("{name} input"), grads.input.unwrap().data(), x.data(), |v| {
            dot(&conv1d(&with(&x, v), &w, &b, stride).unwrap(), &g)
        });
        suite.check(&format!("{name} filters"), grads.filters.data(), w.data(), |v| {
            dot(&conv1d(&x, &with(&w, v), &b, stride).unwrap(), &g)
        });
        suite.check(&format!("{name} bias"), grads.bias.data(), b.data(), |v| {
            dot(&conv1d(&x, &w, &with(&b, v), stride).unwrap(), &g)
        });
    }

    let x = random(rng, &[11, 4]);
    let pooled = maxpool1d(&x, 3, 2).unwrap();
    let g = random(rng, pooled.output.shape());
    let gx = maxpool1d_backward(x.shape(), &pooled.argmax, &g).unwrap();
    suite.check("maxpool1d", gx.data(), x.data(), |v| {
        dot(&maxpool1d(&with(&x, v), 3, 2).unwrap().output, &g)
    });

    let x = away_from_zero(random(rng, &[6, 2]));
    let g = random(rng, &[6, 2]);
    let gx = relu_backward(&x, &g).unwrap();
    suite.check("relu", gx.data(), x.data(), |v| dot(&relu(&with(&x, v)), &g));

    let x = random(rng, &[7]);
    let w = random(rng, &[7, 3]);
    let b = random(rng, &[3]);
    let g = random(rng, &[3]);
    let grads = linear_backward(&x, &w, &g).unwrap();
    suite.check("linear input", grads.input.data(), x.data(), |v| {
        dot(&linear(&with(&x, v), &w, &b).unwrap(), &g)
    });
    suite.check("linear weight", grads.weight.data(), w.data(), |v| {
        dot(&linear(&x, &with(&w, v), &b).unwrap(), &g)
    });
    suite.check("linear bias", grads.bias.data(), b.data(), |v| {
        dot(&linear(&x, &w, &with(&b, v)).unwrap(), &g)
    });

    let x = random(rng, &[5]);
    let g = random(rng, &[5]);
    let gx = l2_normalize_backward(&x, &g).unwrap();
    suite.check("l2_normalize", gx.data(), x.data(), |v| {
        dot(&l2_normalize(&with(&x, v)).unwrap(), &g)
    });

    // concatenation and splitting are each other's adjoint
    let (a, b) = (random(rng, &[4, 2]), random(rng, &[4, 3]));
    let g = random(rng, &[4, 5]);
    let parts = split_channels(&g, &[2, 3]).unwrap();
    suite.check("concat_channels first", parts[0].data(), a.data(), |v| {
        dot(&concat_channels(&[&with(&a, v), &b]).unwrap(), &g)
    });
    suite.check("concat_channels second", parts[1].data(), b.data(), |v| {
        dot(&concat_channels(&[&a, &with(&b, v)]).unwrap(), &g)
    });
    let x = random(rng, &[4, 5]);
    let (g1, g2) = (random(rng, &[4, 2]), random(rng, &[4, 3]));
    let gx = concat_channels(&[&g1, &g2]).unwrap();
    suite.check("split_channels", gx.data(), x.data(), |v| {
        let p = split_channels(&with(&x, v), &[2, 3]).unwrap();
        dot(&p[0], &g1) + dot(&p[1], &g2)
    });
}

/// Margin loss plus weight penalty as a function of every encoder parameter
/// and every entity vector.
fn encoder_and_loss(suite: &mut Suite, rng: &mut ChaCha8Rng, dissimilarity: Dissimilarity) {
    let enc = RelationEncoder::new(tiny_encoder(), rng).unwrap();
    let x = random(rng, &[12, 4]);
    let entities: Vec<Vec<f64>> = (0..4)
        .map(|_| away_from_zero(random(rng, &[3])).into_data())
        .collect();
    let (gamma, lambda) = (10.0, 0.05);
    let objective = |enc: &RelationEncoder, e: &[Vec<f64>]| -> f64 {
        let r = enc.encode(&x).unwrap();
        let penalty = enc.weight_penalty(lambda, None).unwrap();
        triple_margin_loss(&e[0], r.data(), &e[1], &e[2], &e[3], gamma, dissimilarity, penalty)
            .unwrap()
            .loss
    };

    let (r, acts) = enc.forward(&x).unwrap();
    let mut grads = enc.store().grad_buffer();
    let penalty = enc.weight_penalty(lambda, Some(&mut grads)).unwrap();
    let loss = triple_margin_loss(
        &entities[0],
        r.data(),
        &entities[1],
        &entities[2],
        &entities[3],
        gamma,
        dissimilarity,
        penalty,
    )
    .unwrap();
    assert!(loss.hinge > 0.0, "the hinge must be active for a meaningful check");
    enc.backward(&acts, &Tensor::vector(loss.grads[1].clone()), &mut grads)
        .unwrap();

    for (id, p) in enc.store().iter() {
        suite.check(
            &format!("encoder+loss {dissimilarity} {}", p.name()),
            grads.get(id).data(),
            p.value().data(),
            |v| {
                let mut e = enc.clone();
                e.store_mut().value_mut(id).data_mut().copy_from_slice(v);
                objective(&e, &entities)
            },
        );
    }
    for (slot, grad) in [(0, 0), (1, 2), (2, 3), (3, 4)] {
        suite.check(
            &format!("encoder+loss {dissimilarity} entity {slot}"),
            &loss.grads[grad],
            &entities[slot],
            |v| {
                let mut e = entities.clone();
                e[slot] = v.to_vec();
                objective(&enc, &e)
            },
        );
    }
}

pub fn gradients() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut suite = Suite {
        worst: 0.0,
        worst_name: String::new(),
        checks: 0,
    };
    for _ in 0..3 {
        ops(&mut suite, &mut rng);
        encoder_and_loss(&mut suite, &mut rng, Dissimilarity::L1);
        encoder_and_loss(&mut suite, &mut rng, Dissimilarity::L2);
    }
    let secs = start.elapsed().as_secs_f64();
    check!(
        suite.worst < TOLERANCE,
        "{}: relative error {:.2e} >= {TOLERANCE:.0e}",
        suite.worst_name,
        suite.worst
    );
    check!(secs < BUDGET_SECS, "took {secs:.1}s, budget {BUDGET_SECS}s");
    Ok(format!(
        "{} gradient checks, max relative error {:.2e} ({})",
        suite.checks, suite.worst, suite.worst_name
    ))
}

/// Length after a valid sliding window, computed without the library.
fn slide(len: usize, window: usize, stride: usize) -> Option<usize> {
    (len >= window && window > 0 && stride > 0).then(|| (len - window) / stride + 1)
}

/// `[branch conv ×3, branch pooled ×3, layer2 conv, layer2 pool, layer3
/// conv, layer3 pool, flat]`.
fn oracle_trace(c: &EncoderConfig) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for w in c.windows {
        out.push(slide(c.m, w, 1)?);
    }
    for (i, w) in c.windows.into_iter().enumerate() {
        out.push(slide(out[i], c.beta - w + 1, 1)?);
    }
    let l2 = slide(out[3], c.layer2.window, c.layer2.stride)?;
    let p2 = slide(l2, c.pool.window, c.pool.stride)?;
    let l3 = slide(p2, c.layer3.window, c.layer3.stride)?;
    let p3 = slide(l3, c.pool.window, c.pool.stride)?;
    out.extend([l2, p2, l3, p3, p3 * c.layer3.filters]);
    Some(out)
}

fn flatten(t: &ecg_core::encoder::ShapeTrace) -> Vec<usize> {
    let mut v = t.branch_conv.to_vec();
    v.extend(t.branch_pooled);
    v.extend([t.layer2_conv, t.layer2_pool, t.layer3_conv, t.layer3_pool, t.flat]);
    v
}

pub fn shape_trace() -> Verdict {
    let config = EncoderConfig::wikipedia(200);
    let trace = config.shape_trace().map_err(|e| e.to_string())?;
    let expected = [398, 396, 394, 391, 391, 391, 194, 192, 63, 61, 21350];
    check!(
        flatten(&trace) == expected,
        "trace {:?}, expected {expected:?}",
        flatten(&trace)
    );
    check!(
        oracle_trace(&config).as_deref() == Some(&expected[..]),
        "oracle disagrees with the expected trace"
    );
    check!(trace.stacked == (391, 224), "stacked {:?}", trace.stacked);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut valid = 0;
    for _ in 0..2000 {
        let beta = rng.gen_range(4..20);
        let a = rng.gen_range(1..beta - 2);
        let b = rng.gen_range(a + 1..beta - 1);
        let c = rng.gen_range(b + 1..beta);
        let cfg = EncoderConfig {
            m: rng.gen_range(beta..120),
            d: rng.gen_range(1..5),
            windows: [a, b, c],
            branch_filters: [rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5)],
            beta,
            layer2: ConvLayer {
                window: rng.gen_range(1..6),
                stride: rng.gen_range(1..4),
                filters: rng.gen_range(1..5),
            },
            layer3: ConvLayer {
                window: rng.gen_range(1..6),
                stride: rng.gen_range(1..4),
                filters: rng.gen_range(1..5),
            },
            pool: PoolLayer {
                window: rng.gen_range(1..4),
                stride: rng.gen_range(1..3),
            },
            k: 2,
        };
        match (cfg.shape_trace(), oracle_trace(&cfg)) {
            (Ok(t), Some(o)) => {
                check!(flatten(&t) == o, "{cfg:?}: trace {:?}, oracle {o:?}", flatten(&t));
                let aligned = cfg.m - beta + 1;
                check!(
                    t.branch_pooled == [aligned; 3],
                    "{cfg:?}: branch lengths {:?}, expected {aligned}",
                    t.branch_pooled
                );
                valid += 1;
            }
            (Err(_), None) => {}
            (t, o) => return Err(format!("{cfg:?}: library {t:?}, oracle {o:?}")),
        }
    }
    check!(valid > 500, "only {valid} random configurations were valid");
    Ok(format!(
        "trace {expected:?}; {valid} random valid configs with equal branch lengths"
    ))
}
