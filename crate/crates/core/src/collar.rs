//! Foliated collar of a polygon, polygon constants, and the moduli of
//! continuity built from them.

use alloc::vec::Vec;

use core::cmp::Ordering;

use num_traits::Float;

use crate::criterion::{divergence_test, sample_points, CriterionError, GoodnessProfile, Verdict};
use crate::geometry::{GeometryError, Point, Polygon};
use crate::scalar::{Rational, Real, Scalar};
use crate::scar::{Radius, ScarGraph, ScarPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeightDefect {
    /// Top/base ratio outside `[1/2, 2]`.
    Ratio { side: usize },
    Overlap { first: usize, second: usize },
    /// Trapezoid leaves the polygon.
    Escapes { side: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CollarError {
    NoValidHeight,
    InvalidHeight(HeightDefect),
    Geometry(GeometryError),
    OutsideCollar,
    TooFar,
    RefusedNonIsolated,
    OutOfRange,
    Criterion,
}

impl<S> From<CriterionError<S>> for CollarError {
    fn from(e: CriterionError<S>) -> Self {
        match e {
            CriterionError::OutOfRange => CollarError::OutOfRange,
            _ => CollarError::Criterion,
        }
    }
}

/// Trapezoid on side `side`: base `v_i v_{i+1}`, top `w_i w_{i+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trapezoid<S> {
    pub side: usize,
    pub base: [Point<S>; 2],
    pub top: [Point<S>; 2],
    pub base_length: S,
    /// `|e| - h (cot a + cot b)`.
    pub top_length: S,
    /// Cotangents of the half angles at the two base vertices.
    pub cot: [S; 2],
    /// Unit direction of the base and inward unit normal.
    pub dir: Point<S>,
    pub normal: Point<S>,
}

fn unit<S: Real>(p: Point<S>) -> Point<S> {
    let l = p.norm2().sqrt_r();
    p.scale(S::one() / l)
}

fn left<S: Scalar>(p: Point<S>) -> Point<S> {
    Point::new(-p.y, p.x)
}

/// Top vertex over each polygon vertex: the point at distance `h` from both
/// incident side lines, together with the half-angle cotangent.
fn apexes<S: Real>(poly: &Polygon<S>, h: S) -> (Vec<Point<S>>, Vec<S>) {
    let n = poly.len();
    let dirs: Vec<Point<S>> = (0..n).map(|i| unit(poly.vertex(i + 1).sub(poly.vertex(i)))).collect();
    let mut w = Vec::with_capacity(n);
    let mut cot = Vec::with_capacity(n);
    for i in 0..n {
        let dp = dirs[(i + n - 1) % n];
        let dn = dirs[i];
        let (np, nn) = (left(dp), left(dn));
        let x = np.add(nn).scale(h / (S::one() + np.dot(nn)));
        w.push(poly.vertex(i).add(x));
        cot.push(dn.dot(x) / h);
    }
    (w, cot)
}

/// Raw trapezoids of height `h`, without checking the collaring conditions.
pub fn trapezoids<S: Real>(poly: &Polygon<S>, h: S) -> Vec<Trapezoid<S>> {
    let n = poly.len();
    let (w, cot) = apexes(poly, h);
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let l = poly.side_lengths()[i];
            let dir = unit(poly.vertex(j).sub(poly.vertex(i)));
            Trapezoid {
                side: i,
                base: [poly.vertex(i), poly.vertex(j)],
                top: [w[i], w[j]],
                base_length: l,
                top_length: l - h * (cot[i] + cot[j]),
                cot: [cot[i], cot[j]],
                dir,
                normal: left(dir),
            }
        })
        .collect()
}

impl<S: Real> Trapezoid<S> {
    /// Counterclockwise corners.
    pub fn corners(&self) -> [Point<S>; 4] {
        [self.base[0], self.base[1], self.top[1], self.top[0]]
    }
}

fn orient<S: Scalar>(a: Point<S>, b: Point<S>, c: Point<S>) -> S {
    b.sub(a).cross(c.sub(a))
}

/// Separating-axis test on two convex quadrilaterals; true when their
/// interiors overlap by more than `tol`.
fn interiors_overlap<S: Real>(p: &[Point<S>; 4], q: &[Point<S>; 4], tol: S) -> bool {
    for (a, b) in [(p, q), (q, p)] {
        for k in 0..4 {
            let e0 = a[k];
            let e1 = a[(k + 1) % 4];
            let d = e1.sub(e0);
            let len = d.norm2().sqrt_r();
            if !(len > S::zero()) {
                continue;
            }
            // a lies left of its own edges; separated if all of b is right of this edge
            if b.iter().all(|&x| orient(e0, e1, x) / len <= tol) {
                return false;
            }
        }
    }
    true
}

fn segments_cross<S: Scalar>(a: Point<S>, b: Point<S>, c: Point<S>, d: Point<S>, tol: S) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
}

/// Check the collaring conditions at height `h`.
pub fn check_collar_height<S: Real>(poly: &Polygon<S>, h: S) -> Result<Vec<Trapezoid<S>>, HeightDefect> {
    let traps = trapezoids(poly, h);
    let n = traps.len();
    let half = S::half();
    for t in &traps {
        let ratio = t.top_length / t.base_length;
        if ratio < half - S::tol() || ratio > S::two() + S::tol() {
            return Err(HeightDefect::Ratio { side: t.side });
        }
    }
    let tol = S::tol() * h.max_s(S::one());
    for (i, t) in traps.iter().enumerate() {
        for (k, v) in poly.vertices().iter().enumerate() {
            if k == i || k == (i + 1) % n {
                continue;
            }
            let c = t.corners();
            if (0..4).all(|e| orient(c[e], c[(e + 1) % 4], *v) > tol) {
                return Err(HeightDefect::Escapes { side: i });
            }
        }
        for e in 0..n {
            let (a, b) = (poly.vertex(e), poly.vertex(e + 1));
            for (p, q) in [(t.top[0], t.top[1]), (t.base[0], t.top[0]), (t.base[1], t.top[1])] {
                if segments_cross(p, q, a, b, tol) {
                    return Err(HeightDefect::Escapes { side: i });
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if interiors_overlap(&traps[i].corners(), &traps[j].corners(), tol) {
                return Err(HeightDefect::Overlap { first: i, second: j });
            }
        }
    }
    Ok(traps)
}

/// Largest `|dP| / 2^k` (`3 <= k <= 64`) passing the collaring conditions.
pub fn choose_collar_height<S: Real>(poly: &Polygon<S>) -> Result<S, CollarError> {
    let mut h = poly.boundary_length() / S::from_i64(8);
    for _ in 3..=64 {
        if check_collar_height(poly, h).is_ok() {
            return Ok(h);
        }
        h = h * S::half();
    }
    Err(CollarError::NoValidHeight)
}

/// `sin` of each half angle.
pub fn semi_angle_sines<S: Real>(traps: &[Trapezoid<S>]) -> Vec<S> {
    traps.iter().map(|t| S::one() / (S::one() + t.cot[0] * t.cot[0]).sqrt_r()).collect()
}

#[derive(Clone, Debug)]
pub struct Collar<S> {
    pub polygon: Polygon<S>,
    pub hbar: S,
    pub trapezoids: Vec<Trapezoid<S>>,
}

pub fn build_collar<S: Real>(polygon: &Polygon<S>, hbar: S) -> Result<Collar<S>, CollarError> {
    let trapezoids = check_collar_height(polygon, hbar).map_err(CollarError::InvalidHeight)?;
    Ok(Collar { polygon: polygon.clone(), hbar, trapezoids })
}

impl<S: Real> Collar<S> {
    pub fn boundary_length(&self) -> S {
        self.polygon.boundary_length()
    }

    /// Side index and offset of boundary parameter `t`.
    fn side_offset(&self, t: S) -> (usize, S) {
        let l = self.boundary_length();
        let t = t.rem_euclid_s(l);
        let i = self.polygon.side_of(t);
        (i, t - self.polygon.starts()[i])
    }

    /// Bottom and top ends of the vertical leaf through `t`.
    pub fn leaf(&self, t: S) -> (Point<S>, Point<S>) {
        let (i, s) = self.side_offset(t);
        let tr = &self.trapezoids[i];
        let f = s / tr.base_length;
        let x = tr.base[0].add(tr.base[1].sub(tr.base[0]).scale(f));
        let y = tr.top[0].add(tr.top[1].sub(tr.top[0]).scale(f));
        (x, y)
    }

    /// `gamma(t, h)`: the point of the vertical leaf at `t` with height `h`.
    pub fn gamma(&self, t: S, h: S) -> Point<S> {
        let (x, y) = self.leaf(t);
        x.add(y.sub(x).scale(h / self.hbar))
    }

    pub fn leaf_length(&self, t: S) -> S {
        let (x, y) = self.leaf(t);
        y.sub(x).norm2().sqrt_r()
    }

    /// `(t, h)` coordinates of `p` in trapezoid `i`, if it lies there.
    fn coords_in(&self, i: usize, p: Point<S>) -> Option<(S, S)> {
        let tr = &self.trapezoids[i];
        let d = p.sub(tr.base[0]);
        let h = tr.normal.dot(d);
        let eps = S::tol() * self.hbar.max_s(S::one());
        if h < -eps || h > self.hbar + eps {
            return None;
        }
        let f = h / self.hbar;
        let along = d.sub(tr.top[0].sub(tr.base[0]).scale(f)).dot(tr.dir);
        let scale = (S::one() - f) + f * tr.top_length / tr.base_length;
        let s = along / scale;
        if s < -eps || s > tr.base_length + eps {
            return None;
        }
        let s = s.max_s(S::zero()).min_s(tr.base_length);
        Some((self.polygon.starts()[i] + s, h.max_s(S::zero()).min_s(self.hbar)))
    }

    /// Collar coordinates `(t, h)` of `p`.
    pub fn locate(&self, p: Point<S>) -> Result<(S, S), CollarError> {
        (0..self.trapezoids.len()).find_map(|i| self.coords_in(i, p)).ok_or(CollarError::OutsideCollar)
    }

    /// Boundary parameter of the retraction of `p` along its vertical leaf.
    pub fn retract(&self, p: Point<S>) -> Result<S, CollarError> {
        Ok(self.locate(p)?.0)
    }

    /// Euclidean length of the polyline `pts` and boundary length of its
    /// retraction. Each segment is clipped against every trapezoid; a segment
    /// that leaves the collar is an error.
    pub fn path_image_length(&self, pts: &[Point<S>]) -> Result<(f64, f64), CollarError> {
        let mut path = 0.0;
        let mut image = 0.0;
        let l = self.boundary_length().to_f64();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = b.sub(a);
            path += d.norm2().sqrt_r().to_f64();
            let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
            for (i, tr) in self.trapezoids.iter().enumerate() {
                if let Some((u0, u1)) = clip(&tr.corners(), a, b) {
                    if u1 - u0 <= 0.0 {
                        continue;
                    }
                    let pa = a.add(d.scale(S::from_f64_r(u0)));
                    let pb = a.add(d.scale(S::from_f64_r(u1)));
                    let (ta, tb) = match (self.coords_in(i, pa), self.coords_in(i, pb)) {
                        (Some(x), Some(y)) => (x.0.to_f64(), y.0.to_f64()),
                        _ => continue,
                    };
                    let dt = (tb - ta).abs();
                    pieces.push((u0, u1, dt.min(l - dt)));
                }
            }
            pieces.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(core::cmp::Ordering::Equal));
            let mut reach = 0.0f64;
            for &(u0, u1, dt) in &pieces {
                if u0 > reach + 1e-9 {
                    return Err(CollarError::OutsideCollar);
                }
                reach = reach.max(u1);
                image += dt;
            }
            if reach < 1.0 - 1e-9 {
                return Err(CollarError::OutsideCollar);
            }
        }
        Ok((path, image))
    }
}

/// Parameter interval of segment `a b` inside a convex counterclockwise quad.
fn clip<S: Real>(c: &[Point<S>; 4], a: Point<S>, b: Point<S>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for k in 0..4 {
        let e0 = c[k];
        let e1 = c[(k + 1) % 4];
        let fa = orient(e0, e1, a).to_f64();
        let fb = orient(e0, e1, b).to_f64();
        let scale = e1.sub(e0).norm2().sqrt_r().to_f64();
        if scale == 0.0 {
            continue;
        }
        let (fa, fb) = (fa / scale, fb / scale);
        let tol = 1e-13;
        if fa < -tol && fb < -tol {
            return None;
        }
        if (fa - fb).abs() > 0.0 {
            let u = fa / (fa - fb);
            if fa < -tol && fb >= -tol {
                lo = lo.max(u);
            } else if fb < -tol && fa >= -tol {
                hi = hi.min(u);
            }
        }
    }
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Constants controlling the modulus-of-continuity formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolygonConstants {
    pub hbar: Rational,
    pub rbar: Rational,
    pub boundary_length: Rational,
    pub m: Rational,
    pub delta: Rational,
    pub a: Rational,
    /// `R = 8 / hbar`.
    pub r: Rational,
    /// `ln kappa` with `kappa = 2 exp(32 |dP| / delta)`; kappa itself overflows f64 in practice.
    pub ln_kappa: f64,
}

/// Rational lower approximation with denominator `2^40`.
fn rational_floor(x: f64) -> Rational {
    let d: i128 = 1 << 40;
    Rational::new(Float::floor(x * d as f64) as i128, d)
}

/// Polygon constants for collar height `hbar`; `injectivity` is `None` for a
/// plain scheme, where `rbar = hbar`.
pub fn compute_constants(hbar: Rational, boundary_length: Rational, injectivity: Option<f64>) -> PolygonConstants {
    let rbar = match injectivity {
        None => hbar,
        Some(x) => hbar.min(rational_floor(x)),
    };
    let quarter = Rational::new(1, 4);
    let delta = quarter * hbar.min(rbar).min(Rational::from_integer(2) * hbar * rbar / boundary_length);
    let a = rbar / (Rational::from_integer(2) * delta);
    let m = Rational::new(1, 5) * (rbar / hbar).min(hbar / rbar);
    let r = Rational::from_integer(8) / hbar;
    let ln_kappa = core::f64::consts::LN_2 + 32.0 * boundary_length.to_f64() / delta.to_f64();
    PolygonConstants { hbar, rbar, boundary_length, m, delta, a, r, ln_kappa }
}

/// Constants from a built scar: `rbar = min(hbar, injectivity radius)`.
pub fn constants_for<S: Scalar>(hbar: Rational, boundary_length: Rational, g: &ScarGraph<S>) -> PolygonConstants {
    let inj = match g.injectivity_radius {
        Radius::Infinite => None,
        Radius::Finite(x) => Some(x.to_f64()),
    };
    compute_constants(hbar, boundary_length, inj)
}

/// `4 / exp(2 pi int_{A d}^{r0} iota)` with `r0` the largest planar radius `<= rbar/2`.
pub fn local_modulus_bound<S: Scalar>(pc: &PolygonConstants, gp: &GoodnessProfile<S>, d: f64) -> Result<f64, CollarError> {
    let v = divergence_test(gp_graph(gp), gp.center())?;
    if v.verdict != Verdict::Divergent {
        return Err(CollarError::RefusedNonIsolated);
    }
    let r0 = gp.planar_radius_below(pc.rbar.to_f64() / 2.0)?;
    let a = pc.a.to_f64();
    if !(d > 0.0) || d >= pc.delta.to_f64().min(r0 / a) * (1.0 + 1e-12) {
        return Err(CollarError::TooFar);
    }
    let i = gp.integral((a * d).min(r0), r0)?;
    Ok(4.0 / libm_exp(2.0 * core::f64::consts::PI * i.value))
}

fn libm_exp(x: f64) -> f64 {
    num_traits::Float::exp(x)
}

fn gp_graph<'a, S: Scalar>(gp: &GoodnessProfile<'a, S>) -> &'a ScarGraph<S> {
    gp.graph()
}

/// Global modulus sample: `rho_hat` is a sampled supremum, not a certified maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalModulus {
    pub ln_rho_hat: f64,
    pub ln_kappa_t: f64,
    pub ln_rho_bar: f64,
    pub pitch: f64,
    pub samples: usize,
}

/// Local moduli `rho(q, t)` over the scar, with the polygon constants.
#[derive(Clone, Debug)]
pub struct ModulusProfile<'a, S> {
    pub constants: PolygonConstants,
    pub g: &'a ScarGraph<S>,
    pub pitch: f64,
    samples: Vec<ScarPoint<S>>,
}

impl<'a, S: Scalar> ModulusProfile<'a, S> {
    pub fn new(constants: PolygonConstants, g: &'a ScarGraph<S>) -> Result<Self, CollarError> {
        for s in &g.stars {
            let v = divergence_test(g, ScarPoint::Vertex(s.center))?;
            if v.verdict != Verdict::Divergent {
                return Err(CollarError::RefusedNonIsolated);
            }
        }
        for (i, v) in g.vertices.iter().enumerate() {
            if v.kind == crate::scar::VertexKind::Singular && !g.stars.iter().any(|s| s.center == i) {
                return Err(CollarError::RefusedNonIsolated);
            }
        }
        let pitch = constants.rbar.to_f64() / 64.0;
        let mut samples = sample_points(g, pitch);
        let floor = 1e-9 * constants.boundary_length.to_f64();
        for (si, s) in g.stars.iter().enumerate() {
            let mut f = 0usize;
            while f < 1 << 16 {
                let len = s.kind.fold_length_f64(f);
                if !(len >= floor) {
                    break;
                }
                if let Some(off) = S::from_f64(len / 2.0) {
                    samples.push(ScarPoint::Branch { star: si, fold: f, offset: off });
                }
                f += 1;
            }
        }
        Ok(ModulusProfile { constants, g, pitch, samples })
    }

    pub fn samples(&self) -> &[ScarPoint<S>] {
        &self.samples
    }

    pub fn heights(&self) -> [f64; 5] {
        let d = self.constants.delta.to_f64();
        [0.0, d / 8.0, d / 4.0, d / 2.0, d]
    }

    fn profile(&self, q: ScarPoint<S>) -> Result<GoodnessProfile<'a, S>, CollarError> {
        Ok(GoodnessProfile::new(self.g, q, self.constants.m.to_f64(), self.constants.rbar.to_f64())?)
    }

    /// `ln rho(q, t)` for a collar point over `q` at height `h_q`.
    pub fn ln_rho(&self, q: ScarPoint<S>, h_q: f64, t: f64) -> Result<f64, CollarError> {
        let delta = self.constants.delta.to_f64();
        if !(t >= 0.0) || t >= delta || !(0.0..=delta).contains(&h_q) {
            return Err(CollarError::OutOfRange);
        }
        if t == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let gp = self.profile(q)?;
        self.ln_rho_with(&gp, h_q, t)
    }

    fn ln_rho_with(&self, gp: &GoodnessProfile<S>, h_q: f64, t: f64) -> Result<f64, CollarError> {
        let a = self.constants.a.to_f64();
        let rbar = self.constants.rbar.to_f64();
        let ln8r = Float::ln(8.0 * self.constants.r.to_f64());
        let two_pi = 2.0 * core::f64::consts::PI;
        if t <= h_q {
            let i = gp.integral((2.0 * a * h_q).min(rbar), rbar)?;
            Ok(ln8r + Float::ln(t) - Float::ln(h_q) - two_pi * i.value)
        } else {
            let i = gp.integral((a * (t + h_q)).min(rbar), rbar)?;
            Ok(ln8r - two_pi * i.value)
        }
    }

    pub fn rho(&self, q: ScarPoint<S>, h_q: f64, t: f64) -> Result<f64, CollarError> {
        Ok(num_traits::Float::exp(self.ln_rho(q, h_q, t)?))
    }

    /// `ln rho(q, t)` for each `t` in `ts` at every height, with one profile per `q`.
    /// The integrals share one sweep down from `rbar`.
    pub fn ln_rho_table(&self, q: ScarPoint<S>, ts: &[f64]) -> Result<Vec<[f64; 5]>, CollarError> {
        let gp = self.profile(q)?;
        let hs = self.heights();
        let delta = self.constants.delta.to_f64();
        let a = self.constants.a.to_f64();
        let rbar = self.constants.rbar.to_f64();
        let lower = |t: f64, h: f64| if t <= h { (2.0 * a * h).min(rbar) } else { (a * (t + h)).min(rbar) };
        let mut ys: Vec<f64> = Vec::with_capacity(ts.len() * hs.len());
        for &t in ts {
            if !(t > 0.0) || t >= delta {
                return Err(CollarError::OutOfRange);
            }
            ys.extend(hs.iter().map(|&h| lower(t, h)));
        }
        ys.sort_by(|x, y| y.partial_cmp(x).unwrap_or(Ordering::Equal));
        ys.dedup();
        // cumulative integral from each y up to rbar
        let mut acc = Vec::with_capacity(ys.len());
        let mut prev = rbar;
        let mut sum = 0.0;
        for &y in &ys {
            if y < prev {
                sum += gp.integral(y, prev)?.value;
                prev = y;
            }
            acc.push(sum);
        }
        let at = |y: f64| acc[ys.iter().position(|&v| v == y).unwrap_or(0)];
        let ln8r = Float::ln(8.0 * self.constants.r.to_f64());
        let two_pi = 2.0 * core::f64::consts::PI;
        Ok(ts
            .iter()
            .map(|&t| {
                let mut row = [0.0; 5];
                for (k, &h) in hs.iter().enumerate() {
                    let i = at(lower(t, h));
                    row[k] = if t <= h { ln8r + Float::ln(t) - Float::ln(h) - two_pi * i } else { ln8r - two_pi * i };
                }
                row
            })
            .collect())
    }

    /// `rho_bar(t) = max(2 max_q rho(q, t), kappa t)`, all in logs.
    pub fn global_modulus(&self, t: f64) -> Result<GlobalModulus, CollarError> {
        let mut best = f64::NEG_INFINITY;
        for &q in &self.samples {
            for row in self.ln_rho_table(q, &[t])? {
                for v in row {
                    best = best.max(v);
                }
            }
        }
        let ln_rho_hat = core::f64::consts::LN_2 + best;
        let ln_kappa_t = self.constants.ln_kappa + Float::ln(t);
        Ok(GlobalModulus {
            ln_rho_hat,
            ln_kappa_t,
            ln_rho_bar: ln_rho_hat.max(ln_kappa_t),
            pitch: self.pitch,
            samples: self.samples.len(),
        })
    }
}
