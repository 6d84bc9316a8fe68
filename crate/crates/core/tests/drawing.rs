mod common;

use std::f64::consts::FRAC_PI_2;

use partlex::domain::{Domain, Subdomain};
use partlex::drawing::{
    eval_drawing, geometry_equal, render_drawing_svg, Geometry, SvgStyle, TransformMatrix,
};
use partlex::program::{parse_sexpr, Expr, NodeKind};
use partlex::semantics::{evaluate, Rendering};
use proptest::prelude::*;

fn eval(src: &str) -> Geometry {
    eval_drawing(&parse_sexpr(src, &Domain::Drawings.base_inventory()).unwrap()).unwrap()
}

#[test]
fn repeated_rotated_edge_closes_a_square() {
    let g = eval(&format!(
        "(repeat (apply_transform (line) (graphics_matrix 1 0 -0.5 -0.5)) 4 (graphics_matrix 1 {FRAC_PI_2} 0 0))"
    ));
    // copies k = 1..4 of the edge (-0.5,-0.5)-(0.5,-0.5) rotated by k quarter turns
    let rot = |k: f64, (x, y): (f64, f64)| {
        let (s, c) = (k * FRAC_PI_2).sin_cos();
        (c * x - s * y, s * x + c * y)
    };
    let segs = (1..=4)
        .map(|k| {
            let (a, b) = (rot(k as f64, (-0.5, -0.5)), rot(k as f64, (0.5, -0.5)));
            [a.0, a.1, b.0, b.1]
        })
        .collect();
    let want = Geometry::new(segs, vec![]);
    assert!(geometry_equal(&g, &want, 1e-9));
    let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
    for s in &g.segments {
        for end in [(s[0], s[1]), (s[2], s[3])] {
            assert!(corners
                .iter()
                .any(|c| (c.0 - end.0).abs() < 1e-9 && (c.1 - end.1).abs() < 1e-9));
        }
    }
}

#[test]
fn small_translation_is_detected() {
    let a = eval("(line)");
    let b = eval("(apply_transform (line) (graphics_matrix 1 0 0.001 0))");
    assert!(geometry_equal(&a, &a, 1e-6));
    assert!(!geometry_equal(&a, &b, 1e-6));
}

fn svg_elements(svg: &str) -> usize {
    svg.matches("<path ").count() + svg.matches("<circle ").count()
}

#[test]
fn svg_has_one_element_per_primitive_and_is_stable() {
    let corpus = common::corpus(Subdomain::NutsBolts);
    for s in corpus.stimuli.iter().take(25) {
        let r = evaluate(Domain::Drawings, s.base()).unwrap();
        let Rendering::Drawing(g) = &r else {
            panic!("drawing expected")
        };
        let svg = render_drawing_svg(g, SvgStyle::default()).unwrap();
        assert_eq!(svg_elements(&svg), g.len());
        assert_eq!(svg, r.to_svg().unwrap());
        let again = evaluate(Domain::Drawings, s.base())
            .unwrap()
            .to_svg()
            .unwrap();
        assert_eq!(svg, again);
    }
}

#[test]
fn empty_geometry_cannot_be_rendered() {
    let g = eval("(repeat (line) 0 (graphics_matrix 1 0 1 0))");
    assert!(g.is_empty());
    assert!(render_drawing_svg(&g, SvgStyle::default()).is_err());
}

fn num(v: f64) -> Expr {
    Expr::num(v)
}

fn arb_shape() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::prim("line")),
        Just(Expr::prim("circle")),
        Just(Expr::prim("square"))
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Expr::op("connect", vec![a, b]))
    })
}

fn arb_matrix() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.25f64..3.0, -3.2f64..3.2, -5.0f64..5.0, -5.0f64..5.0)
}

fn matrix_expr((s, t, x, y): (f64, f64, f64, f64)) -> Expr {
    Expr::node(
        NodeKind::Operator,
        "graphics_matrix",
        vec![num(s), num(t), num(x), num(y)],
    )
}

/// Maps every point of `g` through `m` directly, without the evaluator.
fn transform_points(g: &Geometry, m: &TransformMatrix) -> Geometry {
    let segs = g
        .segments
        .iter()
        .map(|s| {
            let (a, b) = (m.apply(s[0], s[1]), m.apply(s[2], s[3]));
            [a.0, a.1, b.0, b.1]
        })
        .collect();
    let circles = g
        .circles
        .iter()
        .map(|c| {
            let (x, y) = m.apply(c[0], c[1]);
            [x, y, c[2] * m.scale()]
        })
        .collect();
    Geometry::new(segs, circles)
}

proptest! {
    #[test]
    fn nested_transforms_compose(e in arb_shape(), a in arb_matrix(), b in arb_matrix()) {
        let inner = Expr::op("apply_transform", vec![e.clone(), matrix_expr(a)]);
        let outer = Expr::op("apply_transform", vec![inner, matrix_expr(b)]);
        let got = eval_drawing(&outer).unwrap();
        let ma = TransformMatrix::new(a.0, a.1, a.2, a.3).unwrap();
        let mb = TransformMatrix::new(b.0, b.1, b.2, b.3).unwrap();
        let want = transform_points(&eval_drawing(&e).unwrap(), &mb.compose(&ma));
        prop_assert!(geometry_equal(&got, &want, 1e-9));
    }

    #[test]
    fn repeat_is_a_union_of_powers(e in arb_shape(), m in arb_matrix(), n in 0usize..5) {
        let m = (m.0.clamp(0.5, 1.5), m.1, m.2, m.3);
        let rep = Expr::op("repeat", vec![e.clone(), num(n as f64), matrix_expr(m)]);
        let got = eval_drawing(&rep).unwrap();
        let base = eval_drawing(&e).unwrap();
        let step = TransformMatrix::new(m.0, m.1, m.2, m.3).unwrap();
        let mut power = TransformMatrix::identity();
        let (mut segs, mut circles) = (vec![], vec![]);
        for _ in 0..n {
            power = step.compose(&power);
            let g = transform_points(&base, &power);
            segs.extend(g.segments);
            circles.extend(g.circles);
        }
        prop_assert!(geometry_equal(&got, &Geometry::new(segs, circles), 1e-9));
    }

    #[test]
    fn canonical_form_is_idempotent(e in arb_shape(), m in arb_matrix()) {
        let g = eval_drawing(&Expr::op("apply_transform", vec![e, matrix_expr(m)])).unwrap();
        prop_assert!(g.is_canonical());
        let again = Geometry::new(g.segments.clone(), g.circles.clone());
        prop_assert_eq!(again.digest(), g.digest());
    }
}
