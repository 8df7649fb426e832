//! Scheme fixtures shared by the integration tests.
#![allow(dead_code)]

use paperfold::geometry::{polygon_validate, BoundaryPos, BoundarySegment, Point, Polygon};
use paperfold::scalar::{rat, Rational, Scalar};
use paperfold::scheme::{Arrangement, FoldingScheme, SegmentPairing, TailFamily, TailKind};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn square() -> Polygon<Rational> {
    polygon_validate(vec![
        Point::new(rat(0, 1), rat(0, 1)),
        Point::new(rat(1, 1), rat(0, 1)),
        Point::new(rat(1, 1), rat(1, 1)),
        Point::new(rat(0, 1), rat(1, 1)),
    ])
    .unwrap()
}

pub fn square_f64() -> Polygon<f64> {
    polygon_validate(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)]).unwrap()
}

pub fn pair<S: Scalar>(a: S, b: S, len: S) -> SegmentPairing<S> {
    SegmentPairing::new(BoundarySegment::new(0, a, len), BoundarySegment::new(0, b, len))
}

pub fn tail<S: Scalar>(kind: TailKind<S>, anchor: S, direction: i8, arrangement: Arrangement) -> TailFamily<S> {
    TailFamily { kind, anchor: BoundaryPos::new(0, anchor), direction, arrangement }
}

/// Unit square: right side to left side, top halves folded, geometric tail
/// of folds `1/4, 1/8, ...` ending at the bottom right corner.
pub fn tailed_square_with(kind: TailKind<Rational>, arrangement: Arrangement) -> FoldingScheme<Rational> {
    FoldingScheme::new(
        vec![square()],
        vec![pair(rat(1, 1), rat(3, 1), rat(1, 1)), pair(rat(2, 1), rat(5, 2), rat(1, 2))],
        vec![tail(kind, rat(1, 1), -1, arrangement)],
    )
}

pub fn geometric_half() -> TailKind<Rational> {
    TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 2) }
}

pub fn tailed_square() -> FoldingScheme<Rational> {
    tailed_square_with(geometric_half(), Arrangement::Contiguous)
}

pub fn cantor_square() -> FoldingScheme<Rational> {
    tailed_square_with(geometric_half(), Arrangement::DisjointCantorStyle)
}

pub fn tailed_square_f64(kind: TailKind<f64>) -> FoldingScheme<f64> {
    FoldingScheme::new(
        vec![square_f64()],
        vec![pair(1.0, 3.0, 1.0), pair(2.0, 2.5, 0.5)],
        vec![tail(kind, 1.0, -1, Arrangement::Contiguous)],
    )
}

pub fn torus() -> FoldingScheme<Rational> {
    FoldingScheme::new(vec![square()], vec![pair(rat(0, 1), rat(2, 1), rat(1, 1)), pair(rat(1, 1), rat(3, 1), rat(1, 1))], vec![])
}

/// Regular-octagon combinatorics `a b a^-1 b^-1 c d c^-1 d^-1` on a 2x2
/// square with every side halved: a genus-two surface.
pub fn genus_two() -> FoldingScheme<Rational> {
    let p = polygon_validate(vec![
        Point::new(rat(0, 1), rat(0, 1)),
        Point::new(rat(2, 1), rat(0, 1)),
        Point::new(rat(2, 1), rat(2, 1)),
        Point::new(rat(0, 1), rat(2, 1)),
    ])
    .unwrap();
    let r = |k: i128| rat(k, 1);
    FoldingScheme::new(
        vec![p],
        vec![pair(r(0), r(2), r(1)), pair(r(1), r(3), r(1)), pair(r(4), r(6), r(1)), pair(r(5), r(7), r(1))],
        vec![],
    )
}

/// Replace pairing `i` by two pairings cut at offset `s` along its `a` side.
pub fn split_pairing<S: Scalar>(scheme: &FoldingScheme<S>, i: usize, s: S) -> FoldingScheme<S> {
    let p = scheme.pairings[i];
    let len = p.length();
    let (ca, cb) = (p.a.start.component, p.b.start.component);
    let l_a = scheme.component_length(ca);
    let l_b = scheme.component_length(cb);
    let first = SegmentPairing::new(
        BoundarySegment::new(ca, p.a.start.t, s),
        BoundarySegment::new(cb, (p.b.start.t + len - s).rem_euclid_s(l_b), s),
    );
    let second = SegmentPairing::new(
        BoundarySegment::new(ca, (p.a.start.t + s).rem_euclid_s(l_a), len - s),
        BoundarySegment::new(cb, p.b.start.t, len - s),
    );
    let mut out = scheme.clone();
    out.pairings[i] = first;
    out.pairings.push(second);
    out
}

/// Random convex polygon with `k` vertices on a perturbed unit circle.
pub fn random_convex<R: Rng>(rng: &mut R, k: usize) -> Polygon<f64> {
    loop {
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..core::f64::consts::TAU)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gaps_ok = angles.windows(2).all(|w| w[1] - w[0] > 0.2)
            && angles[0] + core::f64::consts::TAU - angles[k - 1] > 0.2;
        if !gaps_ok {
            continue;
        }
        let pts: Vec<Point<f64>> = angles.iter().map(|&a| Point::new(a.cos(), a.sin())).collect();
        if let Ok(p) = polygon_validate(pts) {
            if p.is_convex() {
                return p;
            }
        }
    }
}

/// Random non-crossing perfect matching of `2m` slots; `out[i]` is the partner of `i`.
pub fn random_noncrossing<R: Rng>(rng: &mut R, m: usize) -> Vec<usize> {
    fn fill<R: Rng>(rng: &mut R, lo: usize, hi: usize, out: &mut [usize]) {
        if lo >= hi {
            return;
        }
        let choices: Vec<usize> = (lo + 1..hi).step_by(2).collect();
        let j = *choices.choose(rng).unwrap();
        out[lo] = j;
        out[j] = lo;
        fill(rng, lo + 1, j, out);
        fill(rng, j + 1, hi, out);
    }
    let mut out = vec![0; 2 * m];
    fill(rng, 0, 2 * m, &mut out);
    out
}

/// Random plain finite scheme: a convex polygon whose boundary is cut into
/// `2m` arcs glued by a random non-crossing matching.
pub fn random_plain_scheme<R: Rng>(rng: &mut R) -> FoldingScheme<f64> {
    let k = rng.gen_range(3..=7);
    let poly = random_convex(rng, k);
    let l = poly.boundary_length();
    let m = rng.gen_range(1..=8);
    let matching = random_noncrossing(rng, m);
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let scale = l / (2.0 * raw.iter().sum::<f64>());
    let mut pair_of = vec![usize::MAX; 2 * m];
    let mut next = 0;
    for i in 0..2 * m {
        if matching[i] > i {
            pair_of[i] = next;
            pair_of[matching[i]] = next;
            next += 1;
        }
    }
    let offset = rng.gen_range(0.0..l);
    let mut starts = Vec::with_capacity(2 * m);
    let mut t = 0.0;
    for &p in &pair_of {
        starts.push((offset + t).rem_euclid(l));
        t += raw[p] * scale;
    }
    let mut pairings = Vec::with_capacity(m);
    for i in 0..2 * m {
        let j = matching[i];
        if j > i {
            let len = raw[pair_of[i]] * scale;
            pairings.push(SegmentPairing::new(BoundarySegment::new(0, starts[i], len), BoundarySegment::new(0, starts[j], len)));
        }
    }
    FoldingScheme::new(vec![poly], pairings, vec![])
}
