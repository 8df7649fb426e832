//! The goodness function `iota = M / (m + r n)`, its integrals, and the
//! divergence test at singular points.

use alloc::vec::Vec;

use num_traits::Float;

use crate::scalar::Scalar;
use crate::scar::{ball_profile_with, BallEvaluator, ScarError, ScarGraph, ScarPoint, Valence, VertexKind};
use crate::scheme::TailKind;
use crate::special::integrate;

#[derive(Clone, Debug, PartialEq)]
pub enum CriterionError<S> {
    Scar(ScarError<S>),
    OutOfRange,
    NoFloorFound,
    NotRepresentable,
}

impl<S> From<ScarError<S>> for CriterionError<S> {
    fn from(e: ScarError<S>) -> Self {
        CriterionError::Scar(e)
    }
}

/// Value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

/// `M = min(rbar/hbar, hbar/rbar) / 5`.
pub fn goodness_constant(hbar: f64, rbar: f64) -> f64 {
    (rbar / hbar).min(hbar / rbar) / 5.0
}

/// Ball profile of one point together with the scaling constant `M`.
#[derive(Clone, Debug)]
pub struct GoodnessProfile<'a, S> {
    ev: BallEvaluator<'a, S>,
    g: &'a ScarGraph<S>,
    q: ScarPoint<S>,
    pub m_const: f64,
    pub rbar: f64,
}

fn to_s<S: Scalar>(x: f64) -> Result<S, CriterionError<S>> {
    S::from_f64(x).ok_or(CriterionError::NotRepresentable)
}

impl<'a, S: Scalar> GoodnessProfile<'a, S> {
    pub fn new(g: &'a ScarGraph<S>, q: ScarPoint<S>, m_const: f64, rbar: f64) -> Result<Self, CriterionError<S>> {
        if !(rbar > 0.0) || g.injectivity_radius.to_f64() < rbar {
            return Err(CriterionError::Scar(ScarError::BeyondInjectivityRadius));
        }
        Ok(GoodnessProfile { ev: BallEvaluator::new(g, q)?, g, q, m_const, rbar })
    }

    pub fn center(&self) -> ScarPoint<S> {
        self.q
    }

    pub fn graph(&self) -> &'a ScarGraph<S> {
        self.g
    }

    /// Radii in `(lo, hi]` where the ball profile may change slope.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Result<Vec<f64>, CriterionError<S>> {
        let res = (lo * 1e-9).max(1e-300);
        Ok(self.ev.breakpoints(to_s(lo)?, to_s(hi)?, to_s(res)?)?.iter().map(|b| b.to_f64()).collect())
    }

    /// Largest radius `<= x` that avoids every breakpoint.
    pub fn planar_radius_below(&self, x: f64) -> Result<f64, CriterionError<S>> {
        let bps = self.breakpoints(x * 1e-6, x * (1.0 + 1e-12))?;
        match bps.iter().rev().find(|&&b| (b - x).abs() <= 1e-12 * x) {
            None => Ok(x),
            Some(_) => {
                let prev = bps.iter().copied().filter(|&b| b < x * (1.0 - 1e-12)).fold(x * 1e-6, f64::max);
                Ok(prev + (x - prev) / 2.0)
            }
        }
    }

    pub fn measure(&self, r: f64) -> Result<f64, CriterionError<S>> {
        Ok(self.ev.measure(to_s(r)?)?.to_f64())
    }

    /// Count of the circle just beyond `r`.
    pub fn count_right(&self, r: f64) -> Result<u64, CriterionError<S>> {
        let rs: S = to_s(r)?;
        let h = (r * 1e-6).max(1e-300);
        let bps = self.ev.breakpoints(rs, to_s(r + h)?, to_s(h)?)?;
        let hi = bps.first().map_or(r + h, |b| b.to_f64());
        Ok(self.ev.circle_count(to_s((r + hi) / 2.0)?)?)
    }

    /// `iota(q; r)`, with `n` taken as its right limit.
    pub fn goodness(&self, r: f64) -> Result<f64, CriterionError<S>> {
        if !(r > 0.0) || r >= self.rbar {
            return Err(CriterionError::OutOfRange);
        }
        let m = self.measure(r)?;
        let n = self.count_right(r)? as f64;
        Ok(self.m_const / (m + r * n))
    }

    fn iota_raw(&self, r: f64) -> f64 {
        let rs = match S::from_f64(r) {
            Some(x) => x,
            None => return f64::NAN,
        };
        let m = self.ev.measure(rs).map(|x| x.to_f64()).unwrap_or(f64::NAN);
        let n = self.ev.circle_count(rs).map(|x| x as f64).unwrap_or(f64::NAN);
        self.m_const / (m + r * n)
    }

    /// `int_{r1}^{r2} iota`, closed form on every affine piece.
    pub fn integral(&self, r1: f64, r2: f64) -> Result<Bounded, CriterionError<S>> {
        if !(r1 > 0.0) || r2 > self.rbar * (1.0 + 1e-12) || r1 > r2 {
            return Err(CriterionError::OutOfRange);
        }
        if r1 == r2 {
            return Ok(Bounded { value: 0.0, error: 0.0 });
        }
        let res = ((r2 - r1) * 1e-9).max(r1 * 1e-9);
        let prof = match ball_profile_with(self.g, self.q, to_s(r1)?, to_s(r2)?, to_s(res)?) {
            Ok(p) => p,
            Err(ScarError::Overflow) => return Ok(self.integral_quadrature(r1, r2)),
            Err(e) => return Err(e.into()),
        };
        let mut value = 0.0;
        let mut error = 0.0;
        let mm = self.m_const;
        for pc in &prof.pieces {
            let (lo, hi) = (pc.lo.to_f64(), pc.hi.to_f64());
            if pc.exact {
                let (a, b) = pc.affine();
                let (a, b) = (a.to_f64(), b.to_f64());
                let k = b + pc.n as f64;
                let v = if k.abs() < 1e-300 {
                    mm * (hi - lo) / a
                } else {
                    mm / k * ((a + k * hi) / (a + k * lo)).ln()
                };
                value += v;
                error += v.abs() * 4.0 * f64::EPSILON;
            } else {
                let q = integrate(|r| self.iota_raw(r), lo, hi, 1e-14, 64);
                value += q.value;
                error += (hi - lo) * mm / pc.m_lo.to_f64();
            }
        }
        Ok(Bounded { value, error })
    }

    fn integral_quadrature(&self, r1: f64, r2: f64) -> Bounded {
        let (a, b) = (r1.ln(), r2.ln());
        let q = integrate(|w| Float::exp(w) * self.iota_raw(Float::exp(w)), a, b, 1e-11, 4000);
        Bounded { value: q.value, error: q.error }
    }
}

/// `int_{r1}^{r2} iota(q; s) ds`.
pub fn goodness_integral<S: Scalar>(gp: &GoodnessProfile<S>, r1: f64, r2: f64) -> Result<Bounded, CriterionError<S>> {
    gp.integral(r1, r2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Divergent,
    Inconclusive,
    RefusedNonIsolated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rationale {
    /// Non-singular point of valence `k`: `m + r n = 3 k r` for small `r`.
    FiniteValence { k: usize },
    /// Geometric stars: `m + r n <= r (a ln(1/r) + b)` for `0 < r <= r_s`.
    GeometricBound { a: f64, b: f64, r_s: f64 },
    /// A power-law star: `m(q; r) >= C r^(1 - 1/exponent)`, which decides nothing.
    PowerLaw { exponent: f64 },
    MiddleThirdsCantor,
    DeclaredNonIsolated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceVerdict {
    pub verdict: Verdict,
    pub rationale: Rationale,
}

/// Decide whether `int_0 dr / (m + r n)` diverges at `q`.
pub fn divergence_test<S: Scalar>(g: &ScarGraph<S>, q: ScarPoint<S>) -> Result<DivergenceVerdict, CriterionError<S>> {
    let v = match q {
        ScarPoint::Vertex(v) => v,
        ScarPoint::Edge { .. } | ScarPoint::Branch { .. } => {
            return Ok(DivergenceVerdict { verdict: Verdict::Divergent, rationale: Rationale::FiniteValence { k: 2 } });
        }
    };
    let vert = g.vertices.get(v).ok_or(CriterionError::Scar(ScarError::BadPoint))?;
    let stars: Vec<_> = g.stars.iter().filter(|s| s.center == v).collect();
    if vert.kind == VertexKind::Singular && stars.is_empty() {
        return Ok(DivergenceVerdict { verdict: Verdict::RefusedNonIsolated, rationale: Rationale::DeclaredNonIsolated });
    }
    let incident: Vec<f64> = g
        .edges
        .iter()
        .filter(|e| e.u == v || e.v == v)
        .map(|e| e.length.to_f64())
        .collect();
    let k_f: usize = g.edges.iter().map(|e| (e.u == v) as usize + (e.v == v) as usize).sum();
    if stars.is_empty() {
        let k = match vert.valence {
            Valence::Finite(k) => k,
            Valence::Infinite => k_f,
        };
        return Ok(DivergenceVerdict { verdict: Verdict::Divergent, rationale: Rationale::FiniteValence { k } });
    }
    for s in &stars {
        match s.kind {
            TailKind::PowerLaw { exponent, .. } => {
                return Ok(DivergenceVerdict { verdict: Verdict::Inconclusive, rationale: Rationale::PowerLaw { exponent } })
            }
            TailKind::MiddleThirdsCantor { .. } => {
                return Ok(DivergenceVerdict { verdict: Verdict::Inconclusive, rationale: Rationale::MiddleThirdsCantor })
            }
            TailKind::Geometric { .. } => {}
        }
    }
    let mut a = 0.0;
    let mut b = 3.0 * k_f as f64;
    let mut r_s = incident.iter().copied().fold(f64::INFINITY, f64::min);
    for s in &stars {
        if let TailKind::Geometric { ratio, scale } = s.kind {
            let l = ratio.to_f64();
            let c = scale.to_f64();
            let ln_l = l.ln();
            a += 3.0 / ln_l;
            b += 3.0 * c.ln() / ln_l + 2.0 * l / (l - 1.0);
            r_s = r_s.min(c / l);
        }
    }
    if let crate::scar::Radius::Finite(x) = g.injectivity_radius {
        r_s = r_s.min(x.to_f64());
    }
    Ok(DivergenceVerdict { verdict: Verdict::Divergent, rationale: Rationale::GeometricBound { a, b, r_s } })
}

/// Modulus lower bound on the annulus `r < d < s`, after moving non-planar
/// endpoints up to a planar radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusBound {
    pub value: Bounded,
    pub r_used: f64,
    pub s_used: f64,
    pub perturbed: bool,
}

pub fn annulus_modulus_lower_bound<S: Scalar>(gp: &GoodnessProfile<S>, r: f64, s: f64) -> Result<AnnulusBound, CriterionError<S>> {
    if !(r > 0.0) || s > gp.rbar || r > s {
        return Err(CriterionError::OutOfRange);
    }
    let planar = |x: f64| -> Result<f64, CriterionError<S>> {
        let xs: S = to_s(x)?;
        let lo: S = to_s(x * (1.0 - 1e-12))?;
        let bps = gp.ev.breakpoints(lo, to_s(gp.rbar)?, to_s(x * 1e-9)?)?;
        if bps.iter().any(|b| b.near(xs) || (b.to_f64() - x).abs() <= 1e-15 * x) {
            let next = bps.iter().map(|b| b.to_f64()).find(|&b| b > x * (1.0 + 1e-12)).unwrap_or(gp.rbar);
            Ok(x + (next - x) / 2.0)
        } else {
            Ok(x)
        }
    };
    let r2 = planar(r)?.min(s);
    let s2 = if s < gp.rbar { planar(s)?.min(gp.rbar) } else { s };
    let s2 = s2.max(r2);
    Ok(AnnulusBound { value: gp.integral(r2, s2)?, r_used: r2, s_used: s2, perturbed: r2 != r || s2 != s })
}

/// Sample points used by uniform estimates: vertices, edge midpoints and an
/// edge grid of pitch at most `pitch`.
pub fn sample_points<S: Scalar>(g: &ScarGraph<S>, pitch: f64) -> Vec<ScarPoint<S>> {
    let mut out: Vec<ScarPoint<S>> = (0..g.vertices.len()).map(ScarPoint::Vertex).collect();
    for (i, e) in g.edges.iter().enumerate() {
        let l = e.length.to_f64();
        let k = ((l / pitch).ceil() as usize).max(2);
        for j in 1..k {
            if let Some(off) = S::from_f64(l * j as f64 / k as f64) {
                out.push(ScarPoint::Edge { edge: i, offset: off });
            }
        }
        if k % 2 == 1 {
            out.push(ScarPoint::Edge { edge: i, offset: e.length / S::two() });
        }
    }
    out
}

/// `ln eta` for one point: `I(q, eta) > big_k`.
fn ln_floor_at<S: Scalar>(gp: &GoodnessProfile<S>, verdict: &DivergenceVerdict, big_k: f64) -> Result<f64, CriterionError<S>> {
    let rbar = gp.rbar;
    let mm = gp.m_const;
    match verdict.rationale {
        Rationale::GeometricBound { a, b, r_s } => {
            let rs = r_s.min(rbar);
            let i_rs = gp.integral(rs, rbar)?;
            let have = i_rs.value - i_rs.error;
            if have > big_k {
                return bisect_ln(gp, rs, big_k);
            }
            // I(eta) >= I(rs) + (M/a) ln((a L + b) / (a ln(1/rs) + b)), L = ln(1/eta)
            let base = a * (1.0 / rs).ln() + b;
            let l = (base * ((big_k - have) * a / mm).exp() - b) / a;
            Ok(-(l * (1.0 + 1e-9) + 1e-9))
        }
        Rationale::FiniteValence { .. } => {
            let bps = gp.ev.breakpoints(to_s(rbar * 1e-300_f64.max(f64::MIN_POSITIVE))?, to_s(rbar)?, to_s(rbar * 1e-12)?)?;
            let b1 = bps.first().map_or(rbar, |b| b.to_f64()).min(rbar);
            let k = gp.count_right(b1 / 2.0)? as f64;
            let i_b1 = gp.integral(b1, rbar)?;
            let have = i_b1.value - i_b1.error;
            if have > big_k {
                return bisect_ln(gp, b1, big_k);
            }
            // m + r n = k' r below b1 with k' = m(b1/2)/(b1/2) + k
            let kk = gp.measure(b1 / 2.0)? / (b1 / 2.0) + k;
            Ok(b1.ln() - (big_k - have) * kk / mm - 1e-9)
        }
        _ => Err(CriterionError::NoFloorFound),
    }
}

/// Largest `eta` in `[lo, rbar]` (in log space) with `I(q, eta) > big_k`.
fn bisect_ln<S: Scalar>(gp: &GoodnessProfile<S>, lo: f64, big_k: f64) -> Result<f64, CriterionError<S>> {
    let (mut a, mut b) = (lo.ln(), gp.rbar.ln());
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let i = gp.integral(m.exp(), gp.rbar)?;
        if i.value - i.error > big_k {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloorReport {
    /// `ln eta`; `eta` itself may underflow.
    pub ln_eta: f64,
    pub samples: usize,
    pub pitch: f64,
}

/// Find `eta` with `I(q, eta) > big_k` at every sample point `q`
/// (vertices, edge midpoints and an edge grid of pitch `rbar/64`).
pub fn uniform_i_floor<S: Scalar>(g: &ScarGraph<S>, big_k: f64, m_const: f64, rbar: f64) -> Result<FloorReport, CriterionError<S>> {
    let pitch = rbar / 64.0;
    let samples = sample_points(g, pitch);
    let mut ln_eta = rbar.ln();
    for &q in &samples {
        let verdict = divergence_test(g, q)?;
        if verdict.verdict != Verdict::Divergent {
            return Err(CriterionError::NoFloorFound);
        }
        let gp = GoodnessProfile::new(g, q, m_const, rbar)?;
        ln_eta = ln_eta.min(ln_floor_at(&gp, &verdict, big_k)?);
    }
    for s in &g.stars {
        if !matches!(s.kind, TailKind::Geometric { .. }) {
            return Err(CriterionError::NoFloorFound);
        }
    }
    Ok(FloorReport { ln_eta, samples: samples.len(), pitch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygon_validate, BoundaryPos, BoundarySegment, Point};
    use crate::scar::{build_scar_graph, EdgeSource, TailStar};
    use crate::scheme::{Arrangement, FoldingScheme, SegmentPairing, TailFamily};
    use alloc::vec;

    fn sq() -> crate::geometry::Polygon<f64> {
        polygon_validate(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)]).unwrap()
    }
    fn seg(s: f64, l: f64) -> BoundarySegment<f64> {
        BoundarySegment::new(0, s, l)
    }
    fn tail(kind: TailKind<f64>, anchor: f64, dir: i8) -> TailFamily<f64> {
        TailFamily { kind, anchor: BoundaryPos::new(0, anchor), direction: dir, arrangement: Arrangement::Contiguous }
    }
    fn tailed_square(kind: TailKind<f64>) -> FoldingScheme<f64> {
        FoldingScheme::new(
            vec![sq()],
            vec![SegmentPairing::new(seg(1.0, 1.0), seg(3.0, 1.0)), SegmentPairing::new(seg(2.0, 0.5), seg(2.5, 0.5))],
            vec![tail(kind, 1.0, -1)],
        )
    }

    #[test]
    fn verdicts_follow_tail_kind() {
        let k = 3f64.ln() / 2f64.ln();
        let cases = [
            (TailKind::Geometric { ratio: 2.0, scale: 0.5 }, Verdict::Divergent),
            (TailKind::PowerLaw { exponent: k, sum: 0.5 }, Verdict::Inconclusive),
            (TailKind::MiddleThirdsCantor { sum: 0.5 }, Verdict::Inconclusive),
        ];
        for (kind, want) in cases {
            let g = build_scar_graph(&tailed_square(kind)).unwrap();
            let v = divergence_test(&g, ScarPoint::Vertex(g.stars[0].center)).unwrap();
            assert_eq!(v.verdict, want);
        }
    }

    #[test]
    fn planar_point_goodness_and_integral() {
        let g = build_scar_graph(&tailed_square(TailKind::Geometric { ratio: 2.0, scale: 0.5 })).unwrap();
        let e = g.edges.iter().position(|e| e.length == 1.0).unwrap();
        let q = ScarPoint::Edge { edge: e, offset: 0.5 };
        let gp = GoodnessProfile::new(&g, q, 0.2, 0.25).unwrap();
        assert!((gp.goodness(0.01).unwrap() - 0.2 / 0.06).abs() < 1e-9);
        let i = gp.integral(0.01, 0.2).unwrap();
        assert!((i.value - 0.2 / 6.0 * 20f64.ln()).abs() < 1e-12);
        let a = annulus_modulus_lower_bound(&gp, 0.05, 0.1).unwrap();
        assert!((a.value.value - 0.2 / 6.0 * 2f64.ln()).abs() < 1e-12);
        assert!(!a.perturbed);
    }

    #[test]
    fn regular_vertex_goodness() {
        let e = |u, v| (u, v, 1.0, EdgeSource::Model(0));
        let g = ScarGraph::from_parts(vec![Vec::new(); 4], vec![e(0, 1), e(0, 2), e(0, 3)], vec![], &[]).unwrap();
        let gp = GoodnessProfile::new(&g, ScarPoint::Vertex(0), 1.0, 0.5).unwrap();
        assert!((gp.goodness(0.1).unwrap() - 1.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn integral_matches_quadrature_and_is_additive() {
        let g = build_scar_graph(&tailed_square(TailKind::Geometric { ratio: 2.0, scale: 0.5 })).unwrap();
        let c = g.stars[0].center;
        let qs = [ScarPoint::Vertex(c), ScarPoint::Edge { edge: 0, offset: 0.3 }, ScarPoint::Edge { edge: 1, offset: 0.05 }];
        for q in qs {
            let gp = GoodnessProfile::new(&g, q, 0.2, 0.4).unwrap();
            let a = gp.integral(1e-3, 0.05).unwrap().value;
            let b = gp.integral(0.05, 0.4).unwrap().value;
            let ab = gp.integral(1e-3, 0.4).unwrap().value;
            assert!((a + b - ab).abs() < 1e-12);
            let oracle = gp.integral_quadrature(1e-3, 0.4).value;
            assert!((ab - oracle).abs() < 1e-8, "{ab} {oracle}");
        }
    }

    #[test]
    fn geometric_bound_dominates_profile() {
        let g = build_scar_graph(&tailed_square(TailKind::Geometric { ratio: 2.0, scale: 0.5 })).unwrap();
        let c = g.stars[0].center;
        let v = divergence_test(&g, ScarPoint::Vertex(c)).unwrap();
        let Rationale::GeometricBound { a, b, r_s } = v.rationale else { panic!() };
        let gp = GoodnessProfile::new(&g, ScarPoint::Vertex(c), 1.0, 0.25).unwrap();
        let mut r = r_s;
        while r > 1e-12 {
            let lhs = gp.measure(r).unwrap() + r * gp.count_right(r).unwrap() as f64;
            assert!(lhs <= r * (a * (1.0 / r).ln() + b) + 1e-15);
            r *= 0.77;
        }
    }

    #[test]
    fn uniform_floor_on_plain_tree_and_refusal() {
        let s = FoldingScheme::new(
            vec![sq()],
            (0..4).map(|i| SegmentPairing::new(seg(i as f64, 0.5), seg(i as f64 + 0.5, 0.5))).collect(),
            vec![],
        );
        let g = build_scar_graph(&s).unwrap();
        let f = uniform_i_floor(&g, 1.0, 0.2, 0.25).unwrap();
        for q in sample_points(&g, 0.25 / 64.0) {
            let gp = GoodnessProfile::new(&g, q, 0.2, 0.25).unwrap();
            assert!(gp.integral(f.ln_eta.exp(), 0.25).unwrap().value > 1.0);
        }
        let k = 3f64.ln() / 2f64.ln();
        let g2 = build_scar_graph(&tailed_square(TailKind::PowerLaw { exponent: k, sum: 0.5 })).unwrap();
        assert_eq!(uniform_i_floor(&g2, 1.0, 0.2, 0.25), Err(CriterionError::NoFloorFound));
        let g3 = build_scar_graph(&tailed_square(TailKind::Geometric { ratio: 2.0, scale: 0.5 })).unwrap();
        let f3 = uniform_i_floor(&g3, 1.0, 0.2, 0.25).unwrap();
        assert!(f3.ln_eta.is_finite() && f3.ln_eta < 0.25f64.ln());
    }

    #[test]
    fn declared_singularity_is_refused() {
        let e = |u, v| (u, v, 1.0, EdgeSource::Model(0));
        let g = ScarGraph::<f64>::from_parts(vec![Vec::new(); 3], vec![e(0, 1), e(0, 2)], Vec::<TailStar<f64>>::new(), &[0]).unwrap();
        assert_eq!(divergence_test(&g, ScarPoint::Vertex(0)).unwrap().verdict, Verdict::RefusedNonIsolated);
    }
}
