use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{Instance, SubroutineDef};
use crate::domain::Subdomain;
use crate::program::Expr;

const POLYGON: &str = "(repeat (apply_transform (line) (graphics_matrix $s 0 (times -0.5 $s) \
    (minus 0 (div (times 0.5 $s) (div (sin (div 3.141592653589793 $n)) (cos (div 3.141592653589793 $n))))))) \
    $n (graphics_matrix 1 (div 6.283185307179586 $n) 0 0))";

fn tier1(sub: Subdomain) -> Vec<SubroutineDef> {
    let circle_r = SubroutineDef::new(
        "circle_r",
        1,
        &["r"],
        "(apply_transform (circle) (graphics_matrix $r 0 0 0))",
    );
    match sub {
        Subdomain::NutsBolts => vec![
            SubroutineDef::new("polygon", 1, &["n", "s"], POLYGON),
            circle_r,
        ],
        _ => vec![
            SubroutineDef::new(
                "box",
                1,
                &["w", "h", "x", "y"],
                "(apply_transform (scaled_rect $w $h) (graphics_matrix 1 0 $x $y))",
            ),
            circle_r,
            SubroutineDef::new(
                "stick",
                1,
                &["l", "t", "x", "y"],
                "(apply_transform (line) (graphics_matrix $l $t $x $y))",
            ),
        ],
    }
}

fn tier2(sub: Subdomain) -> Vec<SubroutineDef> {
    let row = SubroutineDef::new(
        "row",
        2,
        &["shape", "k", "dx", "x", "y"],
        "(repeat (apply_transform $shape (graphics_matrix 1 0 $x $y)) $k (graphics_matrix 1 0 $dx 0))",
    );
    let column = SubroutineDef::new(
        "column",
        2,
        &["shape", "k", "dy", "x", "y"],
        "(repeat (apply_transform $shape (graphics_matrix 1 0 $x $y)) $k (graphics_matrix 1 0 0 $dy))",
    );
    let antenna = SubroutineDef::new(
        "antenna",
        2,
        &["l", "x", "y", "top"],
        "(connect (stick $l 1.5707963267948966 $x $y) \
         (apply_transform (circle_r 0.15) (graphics_matrix 1 0 $x $top)))",
    );
    match sub {
        Subdomain::NutsBolts => vec![
            SubroutineDef::new(
                "ring",
                2,
                &["shape", "k", "r", "t"],
                "(repeat (apply_transform $shape (graphics_matrix 1 0 $r 0)) $k (graphics_matrix 1 $t 0 0))",
            ),
            SubroutineDef::new(
                "threads",
                2,
                &["shape", "k", "s"],
                "(repeat $shape $k (graphics_matrix $s 0 0 0))",
            ),
        ],
        Subdomain::Vehicles => vec![
            row,
            SubroutineDef::new(
                "wheel",
                2,
                &["r", "hub", "x", "y"],
                "(apply_transform (connect (circle_r $r) (circle_r $hub)) (graphics_matrix 1 0 $x $y))",
            ),
            antenna,
            column.clone(),
        ],
        Subdomain::Gadgets => vec![
            row,
            SubroutineDef::new(
                "dial",
                2,
                &["r", "x", "y"],
                "(apply_transform (connect (circle_r $r) (stick $r 0.7853981633974483 0 0)) (graphics_matrix 1 0 $x $y))",
            ),
            antenna,
            column.clone(),
        ],
        Subdomain::Furniture => vec![
            row,
            column,
            SubroutineDef::new(
                "drawer",
                2,
                &["w", "h", "x", "y"],
                "(connect (box $w $h $x $y) (apply_transform (circle_r 0.1) (graphics_matrix 1 0 $x $y)))",
            ),
            SubroutineDef::new(
                "drawer2",
                2,
                &["w", "h", "x", "y", "left", "right"],
                "(connect (box $w $h $x $y) (connect \
                 (apply_transform (circle_r 0.1) (graphics_matrix 1 0 $left $y)) \
                 (apply_transform (circle_r 0.1) (graphics_matrix 1 0 $right $y))))",
            ),
        ],
        _ => unreachable!("towers subdomain in drawings catalog"),
    }
}

/// Discrete axes of variation; each axis lists its options.
pub fn axes(sub: Subdomain) -> Vec<(&'static str, Vec<&'static str>)> {
    match sub {
        Subdomain::NutsBolts => vec![
            ("outer", vec!["polygon", "circle"]),
            ("inner", vec!["circle", "polygon"]),
            ("perforation", vec!["circle", "polygon"]),
            ("rings", vec!["1", "2"]),
        ],
        Subdomain::Vehicles => vec![
            ("body", vec!["bus", "car", "truck"]),
            ("wheels", vec!["hub", "plain"]),
            ("topper", vec!["antenna", "windows"]),
            ("fitting", vec!["light", "grille"]),
        ],
        Subdomain::Gadgets => vec![
            ("base", vec!["plain", "screen", "handle"]),
            ("controls", vec!["dials", "buttons"]),
            ("antenna", vec!["none", "antenna"]),
            ("fitting", vec!["light", "grille"]),
        ],
        Subdomain::Furniture => vec![
            ("base", vec!["cabinet", "desk"]),
            ("drawer", vec!["knob", "twoknob"]),
            ("layout", vec!["single", "double"]),
            ("feet", vec!["legs", "round"]),
        ],
        _ => unreachable!("towers subdomain in drawings catalog"),
    }
}

fn prefix(sub: Subdomain) -> &'static str {
    match sub {
        Subdomain::NutsBolts => "nut",
        Subdomain::Vehicles => "vehicle",
        Subdomain::Gadgets => "gadget",
        Subdomain::Furniture => "furniture",
        _ => unreachable!("towers subdomain in drawings catalog"),
    }
}

/// Every combination of axis options, in lexicographic index order.
pub fn skeletons(sub: Subdomain) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (_, opts) in axes(sub) {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..opts.len()).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn template_name(sub: Subdomain, skel: &[usize]) -> String {
    let axes = axes(sub);
    let mut name = prefix(sub).to_string();
    for (i, &c) in skel.iter().enumerate() {
        name.push('_');
        name.push_str(axes[i].1[c]);
    }
    name
}

/// Allocates template parameters while drawing their values.
struct Builder<'r> {
    rng: &'r mut dyn RngCore,
    params: Vec<String>,
    values: Vec<f64>,
}

impl<'r> Builder<'r> {
    fn new(rng: &'r mut dyn RngCore) -> Self {
        Builder {
            rng,
            params: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Binds `value` to a fresh parameter named `name`; returns `$name`.
    fn lit(&mut self, name: &str, value: f64) -> String {
        debug_assert!(
            !self.params.iter().any(|p| p == name),
            "duplicate slot {name}"
        );
        self.params.push(name.to_string());
        self.values.push(value);
        format!("${name}")
    }

    fn pick<T: Copy>(&mut self, options: &[T]) -> T {
        *options.choose(&mut self.rng).expect("nonempty options")
    }

    fn int(&mut self, lo: i64, hi: i64) -> f64 {
        self.rng.gen_range(lo..=hi) as f64
    }
}

fn polygon_side(circumradius: f64, n: f64) -> f64 {
    2.0 * circumradius * (std::f64::consts::PI / n).sin()
}

fn nut_shape(
    b: &mut Builder,
    slot: &str,
    kind: &str,
    radius_opts: &[f64],
    sides: &[f64],
) -> String {
    if kind == "circle" {
        let r = b.pick(radius_opts);
        format!("(circle_r {})", b.lit(&format!("{slot}_r"), r))
    } else {
        let n = b.pick(sides);
        let r = b.pick(radius_opts);
        let n_ref = b.lit(&format!("{slot}_n"), n);
        let s_ref = b.lit(&format!("{slot}_s"), polygon_side(r, n));
        format!("(polygon {n_ref} {s_ref})")
    }
}

fn nut_ring(b: &mut Builder, slot: &str, kind: &str, counts: &[f64], radii: &[f64]) -> String {
    let shape = nut_shape(b, slot, kind, &[0.15, 0.2, 0.25], &[3.0, 4.0, 6.0]);
    let k = b.pick(counts);
    let r = b.pick(radii);
    let k_ref = b.lit(&format!("{slot}_k"), k);
    let r_ref = b.lit(&format!("{slot}_radius"), r);
    let t_ref = b.lit(&format!("{slot}_angle"), TAU / k);
    format!("(ring {shape} {k_ref} {r_ref} {t_ref})")
}

fn build_nut(b: &mut Builder, choice: &[&str]) -> String {
    let outer = nut_shape(b, "outer", choice[0], &[2.4, 2.7, 3.0], &[5.0, 6.0, 8.0]);
    // polygons are turned off the axis; circles need no turning
    let outer = if choice[0] == "polygon" {
        let turn = b.pick(&[0.1, 0.2, 0.3]);
        format!(
            "(apply_transform {outer} (graphics_matrix 1 {} 0 0))",
            b.lit("outer_turn", turn)
        )
    } else {
        outer
    };
    // a threaded hole: the shape shrunk once or more about the centre
    let inner = nut_shape(b, "inner", choice[1], &[0.5, 0.625, 0.75], &[4.0, 6.0]);
    let turns = b.int(2, 3);
    let inner = format!(
        "(threads {inner} {} {})",
        b.lit("thread_count", turns),
        b.lit("thread_scale", 0.8)
    );
    let ring = nut_ring(b, "ring", choice[2], &[4.0, 5.0, 6.0, 8.0], &[1.0, 1.2]);
    if choice[3] == "1" {
        format!("(connect {outer} (connect {inner} {ring}))")
    } else {
        let ring2 = nut_ring(b, "ring2", choice[2], &[6.0, 8.0, 10.0], &[1.7, 1.9]);
        format!("(connect {outer} (connect {inner} (connect {ring} {ring2})))")
    }
}

/// `k` copies spread evenly between `lo` and `hi`; returns `(x, dx)` for `row`.
fn spread(k: f64, lo: f64, hi: f64) -> (f64, f64) {
    let dx = if k > 1.0 { (hi - lo) / (k - 1.0) } else { 1.0 };
    (lo - dx, dx)
}

fn build_vehicle(b: &mut Builder, choice: &[&str]) -> String {
    let w = b.pick(&[4.0, 5.0, 6.0]);
    let h = b.pick(&[1.2, 1.6]);
    let (body, top) = match choice[0] {
        "bus" => {
            let s = format!(
                "(scaled_rect {} {})",
                b.lit("body_w", w),
                b.lit("body_h", h)
            );
            (s, h / 2.0)
        }
        "car" => {
            let cab_h = b.pick(&[0.7, 0.9]);
            let s = format!(
                "(connect (scaled_rect {} {}) (box {} {} 0 {}))",
                b.lit("body_w", w),
                b.lit("body_h", h),
                b.lit("cabin_w", w * 0.5),
                b.lit("cabin_h", cab_h),
                b.lit("cabin_y", (h + cab_h) / 2.0)
            );
            (s, h / 2.0 + cab_h)
        }
        _ => {
            let cab_w = b.pick(&[1.2, 1.5]);
            let s = format!(
                "(connect (box {} {} {} 0) (box {} {} {} {}))",
                b.lit("cargo_w", w - cab_w),
                b.lit("cargo_h", h),
                b.lit("cargo_x", -cab_w / 2.0),
                b.lit("cab_w", cab_w),
                b.lit("cab_h", h * 0.75),
                b.lit("cab_x", (w - cab_w) / 2.0),
                b.lit("cab_y", -h * 0.125)
            );
            (s, h / 2.0)
        }
    };
    let k = b.int(2, 4);
    let r = b.pick(&[0.4, 0.5]);
    let (x, dx) = spread(k, -w / 2.0 + r + 0.1, w / 2.0 - r - 0.1);
    let wheel = match choice[1] {
        "hub" => format!(
            "(wheel {} {} 0 0)",
            b.lit("wheel_r", r),
            b.lit("hub_r", 0.4 * r)
        ),
        _ => format!("(circle_r {})", b.lit("wheel_r", r)),
    };
    let wheels = format!(
        "(row {wheel} {} {} {} {})",
        b.lit("wheel_count", k),
        b.lit("wheel_dx", dx),
        b.lit("wheel_x", x),
        b.lit("wheel_y", -h / 2.0)
    );
    let topper = match choice[2] {
        "antenna" => {
            let m = b.int(1, 3);
            let l = b.pick(&[0.8, 1.2]);
            let (x, dx) = spread(m, -w / 4.0, w / 4.0);
            format!(
                "(row (antenna {} 0 0 {}) {} {} {} {})",
                b.lit("antenna_l", l),
                b.lit("antenna_top", l),
                b.lit("antenna_count", m),
                b.lit("antenna_dx", dx),
                b.lit("antenna_x", x),
                b.lit("antenna_y", top)
            )
        }
        _ => {
            let m = b.int(2, 4);
            let wh = b.pick(&[0.4, 0.5]);
            let (x, dx) = spread(m, -w / 2.0 + 0.6, w / 2.0 - 0.6);
            format!(
                "(row (box {} {} 0 0) {} {} {} {})",
                b.lit("window_w", 0.5),
                b.lit("window_h", wh),
                b.lit("window_count", m),
                b.lit("window_dx", dx),
                b.lit("window_x", x),
                b.lit("window_y", 0.0)
            )
        }
    };
    let fitting = fitting(b, choice[3], w, 2.0 * top);
    format!("(connect (connect {body} {fitting}) (connect {wheels} {topper}))")
}

/// A strip of pilot lights or a small grille of parallel lines near the top corners.
fn fitting(b: &mut Builder, kind: &str, w: f64, h: f64) -> String {
    if kind == "light" {
        let n = b.int(1, 3);
        format!(
            "(column (circle_r {}) {} {} {} {})",
            b.lit("light_r", 0.12),
            b.lit("light_count", n),
            b.lit("light_gap", -0.3),
            b.lit("light_x", w / 2.0 - 0.3),
            b.lit("light_y", h / 2.0 + 0.25)
        )
    } else {
        let n = b.int(2, 4);
        format!(
            "(apply_transform (repeat (line) {} (graphics_matrix 1 0 0 {})) (graphics_matrix {} 0 {} {}))",
            b.lit("grille_count", n),
            b.lit("grille_gap", 0.25),
            b.lit("grille_w", 0.6),
            b.lit("grille_x", -w / 2.0 + 0.2),
            b.lit("grille_y", h / 2.0 - 0.5)
        )
    }
}

fn build_gadget(b: &mut Builder, choice: &[&str]) -> String {
    let w = b.pick(&[3.0, 4.0, 5.0]);
    let h = b.pick(&[2.0, 2.5, 3.0]);
    let (base, top) = match choice[0] {
        "plain" => (
            format!(
                "(scaled_rect {} {})",
                b.lit("base_w", w),
                b.lit("base_h", h)
            ),
            h / 2.0,
        ),
        "screen" => (
            format!(
                "(connect (scaled_rect {} {}) (box {} {} 0 {}))",
                b.lit("base_w", w),
                b.lit("base_h", h),
                b.lit("screen_w", w * 0.6),
                b.lit("screen_h", h * 0.35),
                b.lit("screen_y", h * 0.2)
            ),
            h / 2.0,
        ),
        _ => (
            format!(
                "(connect (scaled_rect {} {}) (connect (stick {} 1.5707963267948966 {} {}) \
                 (connect (stick {} 1.5707963267948966 {} {}) (stick {} 0 {} {}))))",
                b.lit("base_w", w),
                b.lit("base_h", h),
                b.lit("handle_l", 0.3),
                b.lit("handle_left", -w * 0.15),
                b.lit("handle_y", h / 2.0),
                b.lit("handle_r", 0.3),
                b.lit("handle_right", w * 0.15),
                b.lit("handle_ry", h / 2.0),
                b.lit("handle_w", w * 0.3),
                b.lit("handle_x", -w * 0.15),
                b.lit("handle_top", h / 2.0 + 0.3)
            ),
            h / 2.0 + 0.3,
        ),
    };
    let base = format!("(connect {base} {})", fitting(b, choice[3], w, h));
    let k = b.int(2, 5);
    let (x, dx) = spread(k, -w / 2.0 + 0.5, w / 2.0 - 0.5);
    let y = -h * 0.25;
    let controls = match choice[1] {
        "dials" => {
            let r = b.pick(&[0.25, 0.3]);
            format!(
                "(row (dial {} 0 0) {} {} {} {})",
                b.lit("dial_r", r),
                b.lit("dial_count", k),
                b.lit("dial_dx", dx),
                b.lit("dial_x", x),
                b.lit("dial_y", y)
            )
        }
        _ => {
            let s = b.pick(&[0.3, 0.4]);
            format!(
                "(row (box {} {} 0 0) {} {} {} {})",
                b.lit("button_w", s),
                b.lit("button_h", s),
                b.lit("button_count", k),
                b.lit("button_dx", dx),
                b.lit("button_x", x),
                b.lit("button_y", y)
            )
        }
    };
    if choice[2] == "none" {
        format!("(connect {base} {controls})")
    } else {
        let m = b.int(1, 2);
        let l = b.pick(&[0.6, 1.0]);
        let (x, dx) = spread(m, -w / 3.0, w / 3.0);
        let antennas = format!(
            "(row (antenna {} 0 0 {}) {} {} {} {})",
            b.lit("antenna_l", l),
            b.lit("antenna_top", l),
            b.lit("antenna_count", m),
            b.lit("antenna_dx", dx),
            b.lit("antenna_x", x),
            b.lit("antenna_y", top)
        );
        format!("(connect {base} (connect {controls} {antennas}))")
    }
}

fn build_furniture(b: &mut Builder, choice: &[&str]) -> String {
    let w = b.pick(&[2.5, 3.0, 3.5]);
    let h = b.pick(&[3.0, 3.5, 4.0]);
    let base = if choice[0] == "cabinet" {
        format!(
            "(scaled_rect {} {})",
            b.lit("base_w", w),
            b.lit("base_h", h)
        )
    } else {
        format!(
            "(connect (scaled_rect {} {}) (box {} {} 0 {}))",
            b.lit("base_w", w),
            b.lit("base_h", h),
            b.lit("top_w", w + 0.6),
            b.lit("top_h", 0.3),
            b.lit("top_y", h / 2.0 + 0.15)
        )
    };
    let k = b.int(2, 4);
    let dy = h / k;
    let two_knobs = choice[1] != "knob";
    let column = |b: &mut Builder, slot: &str, dw: f64, x: f64| {
        let size = format!(
            "{} {} 0 0",
            b.lit(&format!("{slot}_w"), dw),
            b.lit(&format!("{slot}_h"), dy * 0.8)
        );
        let drawer = if two_knobs {
            format!(
                "(drawer2 {size} {} {})",
                b.lit(&format!("{slot}_knob_left"), -0.25 * dw),
                b.lit(&format!("{slot}_knob_right"), 0.25 * dw)
            )
        } else {
            format!("(drawer {size})")
        };
        format!(
            "(column {drawer} {} {} {} {})",
            b.lit(&format!("{slot}_count"), k),
            b.lit(&format!("{slot}_dy"), dy),
            b.lit(&format!("{slot}_x"), x),
            b.lit(&format!("{slot}_y"), -h / 2.0 + dy / 2.0 - dy)
        )
    };
    let drawers = if choice[2] == "single" {
        column(b, "drawers", w * 0.8, 0.0)
    } else {
        let left = column(b, "left_drawers", w * 0.4, -w / 4.0);
        let right = column(b, "right_drawers", w * 0.4, w / 4.0);
        format!("(connect {left} {right})")
    };
    let feet_k = b.int(2, 3);
    let (x, dx) = spread(feet_k, -w / 2.0 + 0.2, w / 2.0 - 0.2);
    let feet = if choice[3] == "legs" {
        let l = b.pick(&[0.3, 0.5]);
        format!(
            "(row (stick {} {} 0 0) {} {} {} {})",
            b.lit("leg_l", l),
            b.lit("leg_angle", -FRAC_PI_2),
            b.lit("feet_count", feet_k),
            b.lit("feet_dx", dx),
            b.lit("feet_x", x),
            b.lit("feet_y", -h / 2.0)
        )
    } else {
        let r = b.pick(&[0.15, 0.2]);
        format!(
            "(row (circle_r {}) {} {} {} {})",
            b.lit("foot_r", r),
            b.lit("feet_count", feet_k),
            b.lit("feet_dx", dx),
            b.lit("feet_x", x),
            b.lit("feet_y", -h / 2.0 - r)
        )
    };
    format!("(connect {base} (connect {drawers} {feet}))")
}

fn build(sub: Subdomain, skel: &[usize], b: &mut Builder) -> (String, String) {
    let axes = axes(sub);
    let choice: Vec<&str> = skel
        .iter()
        .enumerate()
        .map(|(i, &c)| axes[i].1[c])
        .collect();
    let body = match sub {
        Subdomain::NutsBolts => build_nut(b, &choice),
        Subdomain::Vehicles => build_vehicle(b, &choice),
        Subdomain::Gadgets => build_gadget(b, &choice),
        Subdomain::Furniture => build_furniture(b, &choice),
        _ => unreachable!("towers subdomain in drawings catalog"),
    };
    (template_name(sub, skel), body)
}

pub fn definitions(sub: Subdomain) -> Vec<SubroutineDef> {
    let mut defs = tier1(sub);
    defs.extend(tier2(sub));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for skel in skeletons(sub) {
        let mut b = Builder::new(&mut rng);
        let (name, body) = build(sub, &skel, &mut b);
        defs.push(SubroutineDef {
            name,
            level: 3,
            params: b.params,
            body,
        });
    }
    defs
}

/// Draws one object uniformly: a skeleton, then its numeric choices.
pub fn sample(sub: Subdomain, rng: &mut dyn RngCore) -> Instance {
    let skels = skeletons(sub);
    let skel = skels[rng.gen_range(0..skels.len())].clone();
    let mut b = Builder::new(rng);
    let (name, _) = build(sub, &skel, &mut b);
    let mut features = BTreeMap::new();
    for (i, (axis, opts)) in axes(sub).iter().enumerate() {
        features.insert(axis.to_string(), Value::from(opts[skel[i]]));
    }
    for (p, v) in b.params.iter().zip(&b.values) {
        features.insert(p.clone(), Value::from(*v));
    }
    let program = Expr::call(&name, b.values.iter().map(|&v| Expr::num(v)).collect());
    Instance {
        template: name,
        program,
        features,
    }
}
