use ecg_core::evaluator::{classify_cv, cosine_nearest, rank_entity, Classifier, LabelScorer, LabeledEntitySet, Ranker, RankingReport, Setting};
use ecg_core::trainer::{Dissimilarity, EmbeddingTable, Side};
use ecg_core::triples::{KnownTriples, LinkTriple, Relation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{check, Verdict};

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn distance(h: &[f64], r: &[f64], t: &[f64], d: Dissimilarity) -> f64 {
    let diff: Vec<f64> = (0..h.len()).map(|i| h[i] + r[i] - t[i]).collect();
    match d {
        Dissimilarity::L1 => diff.iter().map(|x| x.abs()).sum(),
        Dissimilarity::L2 => diff.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let mut rows: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // duplicated rows exercise ties
    if n > 2 && rng.gen_bool(0.3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let src = rows[a * k..(a + 1) * k].to_vec();
        rows[b * k..(b + 1) * k].copy_from_slice(&src);
    }
    rows
}

fn rank_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(2..=10);
    let k = rng.gen_range(1..=4);
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let rows = random_rows(rng, n, k);
    let entities = EmbeddingTable::from_rows(names.clone(), k, rows.clone()).unwrap();
    let relations = EmbeddingTable::from_rows(["r", "s"], k, (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let d = *[Dissimilarity::L1, Dissimilarity::L2].choose(rng).unwrap();
    let label = ["r", "s"].choose(rng).unwrap().to_string();
    let (h, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
    let side = if rng.gen_bool(0.5) { Side::Head } else { Side::Tail };
    let relation = Relation::Label(label.clone());
    let mut known = KnownTriples::new();
    for _ in 0..rng.gen_range(0..6) {
        known.insert(rng.gen_range(0..n), Relation::Label(["r", "s"].choose(rng).unwrap().to_string()), rng.gen_range(0..n));
    }
    let use_known = rng.gen_bool(0.5);

    let row = |i: usize| unit(&rows[i * k..(i + 1) * k]);
    let r = unit(relations.get(&label).unwrap());
    let truth = distance(&row(h), &r, &row(t), d);
    let mut expected = 1;
    for c in 0..n {
        let (ch, ct, target) = match side {
            Side::Head => (c, t, h),
            Side::Tail => (h, c, t),
        };
        if c == target || (use_known && known.contains(ch, &relation, ct)) {
            continue;
        }
        if distance(&row(ch), &r, &row(ct), d) < truth {
            expected += 1;
        }
    }
    let triple = LinkTriple {
        head: names[h].clone(),
        relation,
        tail: names[t].clone(),
    };
    let ranker = Ranker::new(&entities, d).map_err(|e| e.to_string())?;
    let got = rank_entity(&triple, side, &ranker, &LabelScorer(&relations), use_known.then_some(&known))
        .map_err(|e| e.to_string())?;
    check!(got == expected, "rank {got}, brute force {expected} (n={n}, k={k}, {d}, {side:?})");
    Ok(())
}

fn cosine_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.gen_range(2..=10);
    let k = rng.gen_range(1..=4);
    // shuffled identifiers so ties are not resolved by row order by accident
    let mut names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    names.shuffle(rng);
    let rows = random_rows(rng, n, k);
    let table = EmbeddingTable::from_rows(names.clone(), k, rows.clone()).unwrap();
    let q = rng.gen_range(0..n);
    let want = rng.gen_range(0..=n + 1);
    let cos = |a: usize, b: usize| {
        let (x, y) = (unit(&rows[a * k..(a + 1) * k]), unit(&rows[b * k..(b + 1) * k]));
        x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
    };
    let mut expected: Vec<(String, f64)> = (0..n).filter(|&i| i != q).map(|i| (names[i].clone(), cos(q, i))).collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    expected.truncate(want);
    let got = cosine_nearest(&names[q], want, &table).map_err(|e| e.to_string())?;
    check!(got.len() == expected.len(), "{} neighbours, brute force {}", got.len(), expected.len());
    for ((ge, gs), (ee, es)) in got.iter().zip(&expected) {
        check!(
            ge == ee && (gs - es).abs() < 1e-12,
            "neighbour ({ge}, {gs}), brute force ({ee}, {es})"
        );
    }
    Ok(())
}

pub fn ranking_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        rank_case(&mut rng).map_err(|e| format!("rank case {case}: {e}"))?;
        cosine_case(&mut rng).map_err(|e| format!("cosine case {case}: {e}"))?;
    }
    let report = RankingReport::from_ranks(vec![(1, 19)], Setting::Raw).map_err(|e| e.to_string())?;
    check!(report.mean_rank == 10.0, "MR of ranks {{1, 19}} is {}", report.mean_rank);
    check!(report.hits_at_10 == 0.5, "Hits@10 of ranks {{1, 19}} is {}", report.hits_at_10);
    Ok("500 rank and 500 cosine cases match brute force; ranks {1,19} give MR 10, Hits@10 0.5".into())
}

fn labelled(points: Vec<(Vec<f64>, String)>) -> (EmbeddingTable, LabeledEntitySet) {
    let k = points[0].0.len();
    let names: Vec<String> = (0..points.len()).map(|i| format!("x{i}")).collect();
    let data = points.iter().flat_map(|(v, _)| v.clone()).collect();
    let entries = names.iter().cloned().zip(points.into_iter().map(|(_, l)| l)).collect();
    (EmbeddingTable::from_rows(names, k, data).unwrap(), LabeledEntitySet { entries })
}

pub fn classification() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = 10;
    let noise = Normal::new(0.0, 0.3).unwrap();
    let centres: Vec<Vec<f64>> = (0..3)
        .map(|c| (0..k).map(|i| if i % 3 == c { 2.0 } else { 0.0 }).collect())
        .collect();
    let clustered: Vec<(Vec<f64>, String)> = (0..150)
        .map(|i| {
            let c = i % 3;
            (centres[c].iter().map(|m| m + noise.sample(&mut rng)).collect(), format!("class{c}"))
        })
        .collect();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let random: Vec<(Vec<f64>, String)> = (0..300)
        .map(|_| {
            (
                (0..k).map(|_| std_normal.sample(&mut rng)).collect(),
                format!("class{}", rng.gen_range(0..3)),
            )
        })
        .collect();

    let mut lines = Vec::new();
    for (name, clf) in [("NB", Classifier::NaiveBayes), ("KNN", Classifier::Knn { k: 5 })] {
        let (table, set) = labelled(clustered.clone());
        let sep = classify_cv(&table, &set, clf, 10, 0).map_err(|e| e.to_string())?.accuracy;
        check!(sep >= 0.95, "{name} accuracy on separable clusters {sep:.3} < 0.95");
        let (table, set) = labelled(random.clone());
        let rnd = classify_cv(&table, &set, clf, 10, 0).map_err(|e| e.to_string())?.accuracy;
        check!((rnd - 1.0 / 3.0).abs() <= 0.1, "{name} accuracy on random labels {rnd:.3} outside 1/3 ± 0.1");
        lines.push(format!("{name} {sep:.3} clustered / {rnd:.3} random"));
    }
    Ok(lines.join(", "))
}
