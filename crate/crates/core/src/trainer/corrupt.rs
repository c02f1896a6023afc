use rand::Rng;

use crate::triples::{KnownTriples, Relation};

/// Which slot of a triple was replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Head,
    Tail,
}

/// Entity rows of a corrupted triple; the relation is never changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corruption {
    pub head: usize,
    pub tail: usize,
    pub side: Side,
}

/// Uniform entity in `0..n` other than `exclude`.
fn draw_other<R: Rng + ?Sized>(exclude: usize, n: usize, rng: &mut R) -> usize {
    let x = rng.gen_range(0..n - 1);
    if x >= exclude {
        x + 1
    } else {
        x
    }
}

/// Replaces the head or the tail (probability 1/2 each) with a different,
/// uniformly drawn entity out of `n_entities`.
///
/// # Panics
/// If `n_entities < 2`.
pub fn corrupt<R: Rng + ?Sized>(head: usize, tail: usize, n_entities: usize, rng: &mut R) -> Corruption {
    assert!(n_entities >= 2, "corruption needs at least two entities");
    if rng.gen_bool(0.5) {
        Corruption {
            head: draw_other(head, n_entities, rng),
            tail,
            side: Side::Head,
        }
    } else {
        Corruption {
            head,
            tail: draw_other(tail, n_entities, rng),
            side: Side::Tail,
        }
    }
}

/// Like [`corrupt`], redrawing up to `max_tries` times while the result is a
/// known triple. The last draw is kept if every attempt collides.
pub fn corrupt_filtered<R: Rng + ?Sized>(
    head: usize,
    relation: &Relation,
    tail: usize,
    n_entities: usize,
    known: &KnownTriples,
    max_tries: usize,
    rng: &mut R,
) -> Corruption {
    let mut c = corrupt(head, tail, n_entities, rng);
    for _ in 1..max_tries.max(1) {
        if !known.contains(c.head, relation, c.tail) {
            break;
        }
        c = corrupt(head, tail, n_entities, rng);
    }
    c
}
