//! Command implementations. Each returns a [`Bundle`] with its exit code.

use paperfold::collar::{choose_collar_height, constants_for, CollarError, ModulusProfile, PolygonConstants};
use paperfold::criterion::{divergence_test, Rationale, Verdict};
use paperfold::dd::Dd;
use paperfold::geometry::{BoundaryPos, Point};
use paperfold::horseshoe::{
    build_pn, check_gn_bounds, convergence_report, kneading, log_grid, nbt_constants, HorseshoeError, Side, Symbol,
    NBT_RBAR,
};
use paperfold::scalar::{Rational, Scalar};
use paperfold::scar::{build_scar_graph, project, BallEvaluator, Radius, ScarError, ScarGraph, ScarPoint, Valence, VertexKind};
use paperfold::scheme::{classify_topology, scheme_validate, Classification, FoldingScheme, SchemeError, TailKind, UnlinkedCount};
use serde_json::{json, Value};

use crate::file::{from_scheme, to_text, AnyScheme};
use crate::report::{fmt17, num, obj, scalar, Bundle, Table};
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

macro_rules! dispatch {
    ($scheme:expr, $f:ident $(, $arg:expr)*) => {
        match $scheme {
            AnyScheme::Rational(s) => $f(s $(, $arg)*),
            AnyScheme::Float(s) => $f(s $(, $arg)*),
            AnyScheme::DoubleDouble(s) => $f(s $(, $arg)*),
        }
    };
}

fn failure(command: &str, error: String) -> Bundle {
    let mut b = Bundle::new(json!({ "command": command, "ok": false, "error": error }));
    b.exit = EXIT_FAIL;
    b
}

fn scheme_error<S: Scalar>(e: &SchemeError<S>) -> Value {
    match e {
        SchemeError::NotFull { deficit } => json!({ "kind": "not-full", "deficit": scalar(*deficit) }),
        other => json!({ "kind": "invalid", "detail": format!("{other:?}") }),
    }
}

fn boundary_segments<S: Scalar>(s: &FoldingScheme<S>) -> Vec<(Point<f64>, Point<f64>, usize)> {
    let mut out = Vec::new();
    if s.polygons.len() != 1 {
        return out;
    }
    let p = &s.polygons[0];
    let l = p.boundary_length();
    // split a boundary interval at polygon corners so each piece is straight
    let mut add = |start: S, len: S, colour: usize| {
        let end = start + len;
        let mut cuts = vec![start];
        for &c in p.starts() {
            let mut c = c;
            while c < start {
                c = c + l;
            }
            if c > start && c < end {
                cuts.push(c);
            }
        }
        cuts.sort_by(|a, b| a.cmp_s(b));
        cuts.push(end);
        for w in cuts.windows(2) {
            let a = p.point_at(w[0].rem_euclid_s(l));
            // the end of a piece is approached from inside the side it lies on
            let mid = (w[0] + w[1]) / S::two();
            let side = p.side_of(mid.rem_euclid_s(l));
            let (va, vb) = (p.vertex(side).to_f64(), p.vertex((side + 1) % p.len()).to_f64());
            let frac = |t: S| {
                let off = (t - p.starts()[side]).rem_euclid_s(l).to_f64() / p.side_lengths()[side].to_f64();
                Point::new(va.x + (vb.x - va.x) * off, va.y + (vb.y - va.y) * off)
            };
            if a.is_ok() {
                let b_end = if (w[1] - p.starts()[side]).rem_euclid_s(l).is_pos() { frac(w[1]) } else { vb };
                out.push((frac(w[0]), b_end, colour));
            }
        }
    };
    for (i, pr) in s.pairings.iter().enumerate() {
        add(pr.a.start.t, pr.a.length, i);
        add(pr.b.start.t, pr.b.length, i);
    }
    out
}

pub fn validate(scheme: &AnyScheme) -> Bundle {
    dispatch!(scheme, validate_s)
}

fn validate_s<S: Scalar>(s: &FoldingScheme<S>) -> Bundle {
    let figure = svg::polygon(s.polygons.first().map(|p| p.vertices()).unwrap_or(&[]), None, &boundary_segments(s));
    let mut b = match scheme_validate(s) {
        Ok(v) => Bundle::new(json!({
            "command": "validate",
            "ok": true,
            "total_pairing_length": scalar(v.total_pairing_length),
            "folds": v.folds,
        })),
        Err(e) => {
            let mut b = Bundle::new(json!({ "command": "validate", "ok": false, "error": scheme_error(&e) }));
            b.exit = EXIT_FAIL;
            b
        }
    };
    b.figures.push(("scheme".into(), figure));
    b
}

pub fn classify(scheme: &AnyScheme) -> Bundle {
    dispatch!(scheme, classify_s)
}

fn classify_s<S: Scalar>(s: &FoldingScheme<S>) -> Bundle {
    let r = match classify_topology(s) {
        Ok(r) => r,
        Err(e) => {
            let mut b = Bundle::new(json!({ "command": "classify", "ok": false, "error": scheme_error(&e) }));
            b.exit = EXIT_FAIL;
            return b;
        }
    };
    let class = match &r.classification {
        Classification::PlainSphere => json!({ "kind": "plain-sphere" }),
        Classification::SurfaceGenus(g) => json!({ "kind": "surface", "genus": g }),
        Classification::NotCompactSurface => json!({ "kind": "not-compact-surface" }),
        Classification::Unknown => json!({ "kind": "unknown" }),
    };
    let mut table = Table::new("plain_arcs", &["component", "start", "length"]);
    let arcs: Vec<Value> = r
        .maximal_plain_arcs
        .iter()
        .map(|a| {
            table.push(vec![a.component.to_string(), a.start.emit(), a.length.emit()]);
            json!({ "component": a.component, "start": scalar(a.start), "length": scalar(a.length) })
        })
        .collect();
    let unlinked = match r.maximal_unlinked_arcs {
        UnlinkedCount::Finite(k) => json!(k),
        UnlinkedCount::Unbounded => json!("unbounded"),
    };
    let mut b = Bundle::new(json!({
        "command": "classify",
        "ok": true,
        "classification": class,
        "maximal_plain_arcs": arcs,
        "maximal_unlinked_arcs": unlinked,
        "euler_characteristics": r.euler_characteristics,
    }));
    b.tables.push(table);
    b.figures.push((
        "scheme".into(),
        svg::polygon(s.polygons.first().map(|p| p.vertices()).unwrap_or(&[]), None, &boundary_segments(s)),
    ));
    b
}

fn point_json<S: Scalar>(p: ScarPoint<S>) -> Value {
    match p {
        ScarPoint::Vertex(v) => json!({ "vertex": v }),
        ScarPoint::Edge { edge, offset } => json!({ "edge": edge, "offset": scalar(offset) }),
        ScarPoint::Branch { star, fold, offset } => json!({ "star": star, "fold": fold, "offset": scalar(offset) }),
    }
}

fn kind_json<S: Scalar>(k: &TailKind<S>) -> Value {
    match *k {
        TailKind::Geometric { ratio, scale } => json!({ "type": "geometric", "ratio": scalar(ratio), "scale": scalar(scale) }),
        TailKind::PowerLaw { exponent, sum } => json!({ "type": "power-law", "exponent": num(exponent), "sum": scalar(sum) }),
        TailKind::MiddleThirdsCantor { sum } => json!({ "type": "middle-thirds-cantor", "sum": scalar(sum) }),
    }
}

fn graph_json<S: Scalar>(g: &ScarGraph<S>) -> Value {
    let vertices: Vec<Value> = g
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            json!({
                "id": i,
                "valence": match v.valence { Valence::Finite(k) => json!(k), Valence::Infinite => json!("infinite") },
                "kind": match v.kind {
                    VertexKind::Planar => "planar",
                    VertexKind::RegularVertex => "regular",
                    VertexKind::Singular => "singular",
                },
                "preimages": v.preimages.iter().map(|p| json!({ "component": p.component, "t": scalar(p.t) })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| json!({ "id": i, "u": e.u, "v": e.v, "length": scalar(e.length), "measure": scalar(e.measure) }))
        .collect();
    let stars: Vec<Value> = g.stars.iter().map(|s| json!({ "center": s.center, "kind": kind_json(&s.kind), "tail": s.tail })).collect();
    json!({
        "vertices": vertices,
        "edges": edges,
        "stars": stars,
        "total_measure": scalar(g.total_measure),
        "injectivity_radius": match g.injectivity_radius { Radius::Finite(x) => scalar(x), Radius::Infinite => json!("infinite") },
    })
}

/// `--at` values: `t` on component 0, or `component:t`.
pub fn parse_position<S: Scalar>(text: &str) -> Option<BoundaryPos<S>> {
    match text.split_once(':') {
        Some((c, t)) => Some(BoundaryPos::new(c.trim().parse().ok()?, S::parse(t)?)),
        None => Some(BoundaryPos::new(0, S::parse(text)?)),
    }
}

pub struct ScarArgs<'a> {
    pub at: &'a [String],
    pub radii: &'a [String],
    pub grid: usize,
}

pub fn scar(scheme: &AnyScheme, args: &ScarArgs) -> Bundle {
    dispatch!(scheme, scar_s, args)
}

fn scar_s<S: Scalar>(s: &FoldingScheme<S>, args: &ScarArgs) -> Bundle {
    let g = match build_scar_graph(s) {
        Ok(g) => g,
        Err(e) => return failure("scar", format!("{e:?}")),
    };
    let mut radii: Vec<S> = Vec::new();
    for r in args.radii {
        match S::parse(r) {
            Some(v) if v.is_pos() => radii.push(v),
            _ => {
                let mut b = failure("scar", format!("bad radius {r:?}"));
                b.exit = EXIT_PARSE;
                return b;
            }
        }
    }
    if radii.is_empty() {
        let mut r = s.total_boundary_length() / S::from_i64(8);
        for _ in 0..args.grid {
            radii.push(r);
            r = r / S::two();
        }
    }
    let mut table = Table::new("ball_profile", &["query", "r", "m", "n"]);
    let mut queries = Vec::new();
    for (qi, text) in args.at.iter().enumerate() {
        let Some(pos) = parse_position::<S>(text) else {
            let mut b = failure("scar", format!("bad query point {text:?}"));
            b.exit = EXIT_PARSE;
            return b;
        };
        let q = match project(&g, s, pos) {
            Ok(q) => q,
            Err(e) => return failure("scar", format!("query {text:?}: {e:?}")),
        };
        let ev = match BallEvaluator::new(&g, q) {
            Ok(ev) => ev,
            Err(e) => return failure("scar", format!("query {text:?}: {e:?}")),
        };
        let mut rows = Vec::new();
        for &r in &radii {
            match (ev.measure(r), ev.circle_count(r)) {
                (Ok(m), Ok(n)) => {
                    table.push(vec![qi.to_string(), r.emit(), m.emit(), n.to_string()]);
                    rows.push(json!({ "r": scalar(r), "m": scalar(m), "n": n }));
                }
                (Err(ScarError::BeyondInjectivityRadius), _) | (_, Err(ScarError::BeyondInjectivityRadius)) => {
                    rows.push(json!({ "r": scalar(r), "beyond_injectivity_radius": true }));
                }
                (Err(e), _) | (_, Err(e)) => return failure("scar", format!("query {text:?}: {e:?}")),
            }
        }
        queries.push(json!({ "at": text, "point": point_json(q), "rows": rows }));
    }
    let mut b = Bundle::new(json!({ "command": "scar", "ok": true, "graph": graph_json(&g), "queries": queries }));
    if !args.at.is_empty() {
        b.tables.push(table);
    }
    b.figures.push(("scar".into(), svg::scar(&g)));
    b
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Divergent => "divergent",
        Verdict::Inconclusive => "inconclusive",
        Verdict::RefusedNonIsolated => "refused-non-isolated",
    }
}

fn rationale_json(r: Rationale) -> Value {
    match r {
        Rationale::FiniteValence { k } => json!({ "kind": "finite-valence", "k": k }),
        Rationale::GeometricBound { a, b, r_s } => json!({ "kind": "geometric-bound", "a": num(a), "b": num(b), "r_s": num(r_s) }),
        Rationale::PowerLaw { exponent } => json!({ "kind": "power-law", "exponent": num(exponent) }),
        Rationale::MiddleThirdsCantor => json!({ "kind": "middle-thirds-cantor" }),
        Rationale::DeclaredNonIsolated => json!({ "kind": "declared-non-isolated" }),
    }
}

pub fn criterion(scheme: &AnyScheme) -> Bundle {
    dispatch!(scheme, criterion_s)
}

fn criterion_s<S: Scalar>(s: &FoldingScheme<S>) -> Bundle {
    let g = match build_scar_graph(s) {
        Ok(g) => g,
        Err(e) => return failure("criterion", format!("{e:?}")),
    };
    let mut singular: Vec<usize> = g.stars.iter().map(|st| st.center).collect();
    singular.extend(g.vertices.iter().enumerate().filter(|(_, v)| v.kind == VertexKind::Singular).map(|(i, _)| i));
    singular.sort_unstable();
    singular.dedup();
    let mut table = Table::new("verdicts", &["vertex", "verdict"]);
    let mut out = Vec::new();
    let mut exit = EXIT_OK;
    for v in singular {
        let d = match divergence_test(&g, ScarPoint::Vertex(v)) {
            Ok(d) => d,
            Err(e) => return failure("criterion", format!("vertex {v}: {e:?}")),
        };
        exit = exit.max(match d.verdict {
            Verdict::Divergent => EXIT_OK,
            Verdict::Inconclusive => EXIT_FAIL,
            Verdict::RefusedNonIsolated => EXIT_REFUSED,
        });
        table.push(vec![v.to_string(), verdict_name(d.verdict).into()]);
        out.push(json!({ "vertex": v, "verdict": verdict_name(d.verdict), "rationale": rationale_json(d.rationale) }));
    }
    let mut b = Bundle::new(json!({ "command": "criterion", "ok": exit == EXIT_OK, "verdicts": out }));
    b.tables.push(table);
    b.exit = exit;
    b
}

/// Nearest simple rational at most `x`; falls back to a `2^-40` floor.
fn rational_below(x: f64) -> Rational {
    if let Some(r) = Rational::approximate_float(x) {
        if r.to_f64() <= x && (x - r.to_f64()).abs() <= 1e-12 * x.abs().max(1.0) && *r.denom() < 1 << 20 {
            return r;
        }
    }
    let d: i128 = 1 << 40;
    Rational::new((x * d as f64).floor() as i128, d)
}

/// Rational value of a length known to float precision.
fn rational_near(x: f64) -> Rational {
    match Rational::approximate_float(x) {
        Some(r) if (x - r.to_f64()).abs() <= 1e-12 * x.abs().max(1.0) && *r.denom() < 1 << 20 => r,
        _ => rational_below(x),
    }
}

fn constants_json(pc: &PolygonConstants) -> Value {
    json!({
        "hbar": pc.hbar.emit(),
        "rbar": pc.rbar.emit(),
        "boundary_length": pc.boundary_length.emit(),
        "M": pc.m.emit(),
        "delta": pc.delta.emit(),
        "A": pc.a.emit(),
        "R": pc.r.emit(),
        "ln_kappa": num(pc.ln_kappa),
    })
}

pub fn modulus(scheme: &AnyScheme, collar_height: Option<&str>, grid: usize) -> Bundle {
    dispatch!(scheme, modulus_s, collar_height, grid)
}

fn modulus_s<S: Scalar>(s: &FoldingScheme<S>, collar_height: Option<&str>, grid: usize) -> Bundle {
    let g = match build_scar_graph(s) {
        Ok(g) => g,
        Err(e) => return failure("modulus", format!("{e:?}")),
    };
    let hbar = match collar_height {
        Some(h) => match Rational::parse(h) {
            Some(h) if h > Rational::from_integer(0) => h,
            _ => {
                let mut b = failure("modulus", format!("bad collar height {h:?}"));
                b.exit = EXIT_PARSE;
                return b;
            }
        },
        None => {
            let mut best = f64::INFINITY;
            for p in &s.polygons {
                match choose_collar_height(&p.to_f64()) {
                    Ok(h) => best = best.min(h),
                    Err(e) => return failure("modulus", format!("{e:?}")),
                }
            }
            rational_below(best)
        }
    };
    let length = if S::EXACT {
        Rational::parse(&s.total_boundary_length().emit()).unwrap_or_else(|| rational_near(s.total_boundary_length().to_f64()))
    } else {
        rational_near(s.total_boundary_length().to_f64())
    };
    let pc = constants_for(hbar, length, &g);
    let mp = match ModulusProfile::new(pc, &g) {
        Ok(mp) => mp,
        Err(CollarError::RefusedNonIsolated) => {
            let mut b = Bundle::new(json!({
                "command": "modulus",
                "ok": false,
                "constants": constants_json(&pc),
                "error": "refused: a singular point is not known to be conformally removable",
            }));
            b.exit = EXIT_REFUSED;
            return b;
        }
        Err(e) => return failure("modulus", format!("{e:?}")),
    };
    let delta = pc.delta.to_f64();
    let mut table = Table::new("rho_bar", &["t", "ln_rho_hat", "ln_kappa_t", "ln_rho_bar"]);
    let mut rows = Vec::new();
    for k in 1..=grid.max(1) {
        let t = delta / 2f64.powi(k as i32);
        let gm = match mp.global_modulus(t) {
            Ok(gm) => gm,
            Err(e) => return failure("modulus", format!("t = {t}: {e:?}")),
        };
        table.push(vec![fmt17(t), fmt17(gm.ln_rho_hat), fmt17(gm.ln_kappa_t), fmt17(gm.ln_rho_bar)]);
        rows.push(json!({
            "t": num(t),
            "ln_rho_hat": num(gm.ln_rho_hat),
            "ln_kappa_t": num(gm.ln_kappa_t),
            "ln_rho_bar": num(gm.ln_rho_bar),
        }));
    }
    let mut b = Bundle::new(json!({
        "command": "modulus",
        "ok": true,
        "constants": constants_json(&pc),
        "sampling": { "pitch": num(mp.pitch), "samples": mp.samples().len(), "supremum": "sampled" },
        "rows": rows,
    }));
    b.tables.push(table);
    b
}

fn side_label(s: Side) -> String {
    match s {
        Side::V(i) => format!("V{i}"),
        Side::H(i) => format!("H{i}"),
    }
}

fn horseshoe_error(e: HorseshoeError) -> Bundle {
    failure("horseshoe", format!("{e:?}"))
}

pub fn horseshoe(n: usize, grid: usize) -> Bundle {
    let pn = match build_pn(n) {
        Ok(pn) => pn,
        Err(e) => return horseshoe_error(e),
    };
    let p = &pn.params;
    let labels: Vec<String> = pn.sides.iter().map(|&s| side_label(s)).collect();
    let sides: Vec<Value> = pn
        .sides
        .iter()
        .map(|&s| json!({ "side": side_label(s), "start": num(pn.side_start(s).to_f64()), "length": num(pn.side_length(s).to_f64()) }))
        .collect();
    let symbols: String = match kneading(p.lambda, n + 2) {
        Ok(k) => k
            .iter()
            .map(|s| match s {
                Symbol::Zero => '0',
                Symbol::One => '1',
                Symbol::C => 'C',
            })
            .collect(),
        Err(e) => return horseshoe_error(e),
    };
    let grid = grid.max(2);
    let bounds = match check_gn_bounds(n, &log_grid(1e-6, NBT_RBAR, grid), &log_grid(1e-6, NBT_RBAR / 2.0, grid)) {
        Ok(r) => r,
        Err(e) => return horseshoe_error(e),
    };
    let mut center = Table::new("bounds_center", &["r", "m", "m_bound", "n", "n_bound"]);
    for r in &bounds.center {
        center.push(vec![fmt17(r.r), fmt17(r.m), fmt17(r.m_bound), r.count.to_string(), fmt17(r.count_bound)]);
    }
    let mut integral = Table::new("bounds_integral", &["d", "t", "integral", "error", "script_i"]);
    let mut slack = f64::INFINITY;
    for r in &bounds.integral {
        slack = slack.min(r.integral - r.script_i);
        integral.push(vec![fmt17(r.d), fmt17(r.t), fmt17(r.integral), fmt17(r.error), fmt17(r.script_i)]);
    }
    let pc = nbt_constants();
    let scar_graph = match build_scar_graph(&pn.scheme) {
        Ok(g) => g,
        Err(e) => return failure("horseshoe", format!("{e:?}")),
    };
    let scheme_file = to_text(&from_scheme(&pn.scheme, Some("1/24".into())));
    let orbit: Vec<Value> = pn.orbit_points.iter().map(|q| num(q.t.to_f64())).collect();
    let mut b = Bundle::new(json!({
        "command": "horseshoe",
        "ok": true,
        "n": n,
        "lambda": num(p.lambda.to_f64()),
        "lambda_residual": num(p.residual()),
        "alpha": num(p.alpha.to_f64()),
        "beta": num(p.beta.to_f64()),
        "v0_height": num(p.v0_height.to_f64()),
        "q0_x": num(p.q0x.to_f64()),
        "kneading": symbols,
        "side_count": pn.sides.len(),
        "sides": sides,
        "orbit_boundary_positions": orbit,
        "constants": constants_json(&pc),
        "bounds": {
            "center_rows": bounds.center.len(),
            "integral_rows": bounds.integral.len(),
            "min_integral_slack": num(slack),
        },
    }));
    let mut segs = Vec::new();
    for (i, pr) in pn.scheme.pairings.iter().enumerate() {
        for seg in [pr.a, pr.b] {
            let a = pn.point(seg.start.t).map(|q| q.to_f64());
            let e = pn.point((seg.start.t + seg.length).rem_euclid_s(pn.polygon.boundary_length())).map(|q| q.to_f64());
            if let (Ok(a), Ok(e)) = (a, e) {
                segs.push((a, e, i));
            }
        }
    }
    b.figures.push(("polygon".into(), svg::polygon::<Dd>(pn.polygon.vertices(), Some(&labels), &segs)));
    b.figures.push(("scar".into(), svg::scar(&scar_graph)));
    b.tables.push(center);
    b.tables.push(integral);
    b.files.push((format!("p{n}.scheme.json"), scheme_file));
    b
}

pub fn converge(max_n: usize, eps: f64) -> Bundle {
    let rep = match convergence_report(max_n, eps) {
        Ok(r) => r,
        Err(e) => return failure("converge", format!("{e:?}")),
    };
    let mut table = Table::new(
        "convergence",
        &["n", "hausdorff", "grid_error", "contains_inner_square", "v1_distance", "relation_forward", "relation_backward"],
    );
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            table.push(vec![
                r.n.to_string(),
                fmt17(r.hausdorff),
                fmt17(r.grid_error),
                r.contains_inner_square.to_string(),
                fmt17(r.v1_distance),
                r.relation_forward.to_string(),
                r.relation_backward.to_string(),
            ]);
            json!({
                "n": r.n,
                "hausdorff": obj([("value", num(r.hausdorff)), ("error", num(r.grid_error))]),
                "contains_inner_square": r.contains_inner_square,
                "v1_distance": num(r.v1_distance),
                "relation_forward": r.relation_forward,
                "relation_backward": r.relation_backward,
            })
        })
        .collect();
    let mut b = Bundle::new(json!({
        "command": "converge",
        "ok": rep.n0.is_some(),
        "eps": num(rep.eps),
        "max_n": max_n,
        "n0": rep.n0,
        "rows": rows,
    }));
    b.tables.push(table);
    if rep.n0.is_none() {
        b.exit = EXIT_FAIL;
    }
    b
}
