//! Block-tower part catalogs.
//!
//! A tier-1 part is a fixed list of `(column offset, block)` pairs whose
//! first block sits at offset 0. Its body enters with `left $dx` from the
//! incoming canvas `$c` and places the remaining blocks with literal
//! `right` moves. Higher tiers are sequences of items (parts, composites or
//! raw blocks) at fixed origins relative to the first item. Each item after
//! the first enters with a literal `left` move from the previous item's
//! exit column, so every program starts a new item exactly at a `left`.

use std::collections::{BTreeMap, HashMap};

use serde_json::Value;

use super::{Instance, SubroutineDef};
use crate::domain::Subdomain;
use crate::program::Expr;
use crate::tower::{BlockKind, GRID, START_CURSOR};

use BlockKind::{HorizontalBlue as B, VerticalRed as R};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Part(String),
    Block(BlockKind),
}

fn part(name: &str) -> Item {
    Item::Part(name.to_string())
}

#[derive(Debug, Clone)]
pub struct Composite {
    pub name: String,
    pub level: usize,
    pub items: Vec<(Item, i64)>,
}

/// A whole structure: tier-3 template calls at origins relative to the first.
#[derive(Debug, Clone)]
pub struct Structure {
    pub calls: Vec<(String, i64)>,
    pub features: BTreeMap<String, Value>,
}

#[derive(Debug, Default)]
pub struct Catalog {
    pub parts: Vec<(String, Vec<(i64, BlockKind)>)>,
    pub composites: Vec<Composite>,
    pub structures: Vec<Structure>,
    exits: HashMap<String, i64>,
    entries: HashMap<String, i64>,
}

fn block_symbol(kind: BlockKind) -> &'static str {
    match kind {
        R => "vertical_red",
        B => "horizontal_blue",
    }
}

impl Catalog {
    fn part(&mut self, name: &str, blocks: &[(i64, BlockKind)]) {
        debug_assert!(blocks.len() >= 2 && blocks[0].0 == 0);
        self.exits
            .insert(name.to_string(), blocks.last().unwrap().0);
        self.parts.push((name.to_string(), blocks.to_vec()));
    }

    fn exit_of(&self, item: &Item) -> i64 {
        match item {
            Item::Part(n) => *self
                .exits
                .get(n)
                .unwrap_or_else(|| panic!("undefined tower part {n}")),
            Item::Block(_) => 0,
        }
    }

    /// Column of an item's first block relative to its nominal origin.
    fn entry_of(&self, item: &Item) -> i64 {
        match item {
            Item::Part(n) => self.entries.get(n).copied().unwrap_or(0),
            Item::Block(_) => 0,
        }
    }

    fn composite(&mut self, name: &str, level: usize, items: Vec<(Item, i64)>) {
        debug_assert!(items.len() >= 2);
        let (last, origin) = items.last().unwrap();
        self.exits
            .insert(name.to_string(), origin + self.exit_of(last));
        let entry = items[0].1 + self.entry_of(&items[0].0);
        self.entries.insert(name.to_string(), entry);
        self.composites.push(Composite {
            name: name.to_string(),
            level,
            items,
        });
    }

    fn structure(&mut self, calls: Vec<(String, i64)>, features: &[(&str, Value)]) {
        self.structures.push(Structure {
            calls,
            features: features
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        });
    }

    pub fn definitions(&self) -> Vec<SubroutineDef> {
        let mut defs = Vec::new();
        for (name, blocks) in &self.parts {
            let mut body = format!("(left $dx $c ({}))", block_symbol(blocks[0].1));
            for w in blocks.windows(2) {
                body = format!(
                    "(right {} {body} ({}))",
                    w[1].0 - w[0].0,
                    block_symbol(w[1].1)
                );
            }
            defs.push(SubroutineDef::new(name, 1, &["c", "dx"], &body));
        }
        let mut comps: Vec<&Composite> = self.composites.iter().collect();
        comps.sort_by_key(|c| c.level);
        for c in comps {
            let mut body = String::new();
            let mut prev_exit = 0;
            for (i, (item, origin)) in c.items.iter().enumerate() {
                let (canvas, dx) = if i == 0 {
                    ("$c".to_string(), "$dx".to_string())
                } else {
                    (
                        std::mem::take(&mut body),
                        (prev_exit - origin - self.entry_of(item)).to_string(),
                    )
                };
                body = match item {
                    Item::Part(n) => format!("({n} {canvas} {dx})"),
                    Item::Block(k) => format!("(left {dx} {canvas} ({}))", block_symbol(*k)),
                };
                prev_exit = origin + self.exit_of(item);
            }
            defs.push(SubroutineDef::new(&c.name, c.level, &["c", "dx"], &body));
        }
        defs
    }

    /// The structure placed with its first call's origin at column `x0`.
    pub fn instance(&self, s: &Structure, x0: i64) -> Instance {
        let mut program = Expr::prim("empty");
        let mut cursor = START_CURSOR;
        for (name, rel) in &s.calls {
            let origin = x0 + rel;
            let entry = origin + self.entries.get(name).copied().unwrap_or(0);
            program = Expr::call(name, vec![program, Expr::num((cursor - entry) as f64)]);
            cursor = origin + self.exits[name];
        }
        let mut features = s.features.clone();
        features.insert("x0".into(), Value::from(x0));
        Instance {
            template: s
                .calls
                .iter()
                .map(|c| c.0.as_str())
                .collect::<Vec<_>>()
                .join("+"),
            program,
            features,
        }
    }

    /// Every structure at every starting column; placements may still leave
    /// the grid and must be filtered by evaluation.
    pub fn candidates(&self) -> Vec<Instance> {
        self.structures
            .iter()
            .flat_map(|s| (0..GRID as i64).map(move |x0| self.instance(s, x0)))
            .collect()
    }
}

/// Picks the post placed at a given column index.
type PostFn = Box<dyn Fn(usize) -> Item>;

fn row_blocks(n: i64) -> Vec<(i64, BlockKind)> {
    (0..n).map(|i| (2 * i, B)).collect()
}

fn bridges() -> Catalog {
    let mut c = Catalog::default();
    c.part("arch", &[(0, R), (3, R), (0, B), (2, B)]);
    c.part(
        "tall_arch",
        &[(0, R), (0, R), (3, R), (3, R), (0, B), (2, B)],
    );
    c.part("row2", &row_blocks(2));
    c.part("pillar2", &[(0, R), (0, R)]);
    c.part("pillar3", &[(0, R), (0, R), (0, R)]);

    c.composite("span", 2, vec![(part("arch"), 0), (part("row2"), 0)]);
    c.composite(
        "tall_span",
        2,
        vec![(part("tall_arch"), 0), (part("row2"), 0)],
    );
    // Posts stand on the deck at the left edge of each internal span and at
    // the deck's right end.
    for n in 1..=3i64 {
        let cols: Vec<i64> = (0..n).map(|i| 4 * i).chain([4 * n - 1]).collect();
        let last = cols.len() - 1;
        let kinds: [(&str, PostFn); 3] = [
            ("uniform", Box::new(|_| part("pillar2"))),
            (
                "increasing",
                Box::new(move |i| {
                    if i == 0 || i == last {
                        Item::Block(R)
                    } else {
                        part("pillar3")
                    }
                }),
            ),
            (
                "decreasing",
                Box::new(move |i| {
                    if i == 0 || i == last {
                        part("pillar3")
                    } else {
                        Item::Block(R)
                    }
                }),
            ),
        ];
        for (kind, item) in &kinds {
            if n == 1 && *kind != "uniform" {
                continue;
            }
            let items = cols
                .iter()
                .enumerate()
                .map(|(i, &x)| (item(i), x))
                .collect();
            c.composite(&format!("posts_{kind}{n}"), 2, items);
        }
    }

    for n in 1..=3i64 {
        for (inner, span, outer) in [
            ("arch", "span", "tall_arch"),
            ("tall_arch", "tall_span", "arch"),
        ] {
            for ext in 0..=2i64 {
                let mut suspensions = vec!["none", "uniform"];
                if n > 1 {
                    suspensions.extend(["increasing", "decreasing"]);
                }
                for susp in suspensions {
                    if n == 1 && ext == 0 && susp == "none" {
                        // a lone span is a tier-2 part, not a bridge
                        continue;
                    }
                    let mut items = Vec::new();
                    if ext >= 1 {
                        items.push((part(outer), 0));
                    }
                    let shift = if ext >= 1 { 4 } else { 0 };
                    for i in 0..n {
                        items.push((part(span), shift + 4 * i));
                    }
                    if ext == 2 {
                        items.push((part(outer), shift + 4 * n));
                    }
                    if susp != "none" {
                        items.push((part(&format!("posts_{susp}{n}")), shift));
                    }
                    let name = format!("bridge_{inner}_{n}_ext{ext}_{susp}");
                    c.composite(&name, 3, items);
                    c.structure(
                        vec![(name, 0)],
                        &[
                            ("internal_arches", Value::from(n)),
                            ("arch", Value::from(inner)),
                            ("external_arches", Value::from(ext)),
                            ("suspension", Value::from(susp)),
                        ],
                    );
                }
            }
        }
    }
    c
}

fn cities() -> Catalog {
    let mut c = Catalog::default();
    c.part("tile_l", &[(0, R), (0, B)]);
    c.part("tile_l_mirror", &[(0, R), (-1, B)]);
    c.part("tile_s", &[(0, B), (0, R)]);
    c.part("tile_s_mirror", &[(0, B), (1, R)]);
    c.part("row2", &row_blocks(2));

    for tile in ["tile_l", "tile_l_mirror", "tile_s", "tile_s_mirror"] {
        for h in 2..=4 {
            c.composite(&format!("stack_{tile}_{h}"), 2, vec![(part(tile), 0); h]);
        }
    }
    c.composite("pyramid", 2, vec![(part("row2"), 0), (Item::Block(B), 1)]);

    let mut skyscrapers = Vec::new();
    for tile in ["l", "s"] {
        for mirrored in [false, true] {
            for h in 2..=4 {
                for roof in ["row", "pyramid"] {
                    let left = format!("stack_tile_{tile}_{h}");
                    let (right, at) = match (mirrored, tile) {
                        (false, _) => (left.clone(), 2),
                        (true, "l") => (format!("stack_tile_l_mirror_{h}"), 3),
                        (true, _) => (format!("stack_tile_s_mirror_{h}"), 2),
                    };
                    let roof_item = if roof == "row" { "row2" } else { "pyramid" };
                    let name = format!(
                        "skyscraper_{tile}_{}_{h}_{roof}",
                        if mirrored { "mirrored" } else { "plain" }
                    );
                    c.composite(
                        &name,
                        3,
                        vec![(part(&left), 0), (part(&right), at), (part(roof_item), 0)],
                    );
                    skyscrapers.push(name);
                }
            }
        }
    }
    for a in &skyscrapers {
        for b in &skyscrapers {
            for gap in 1..=6i64 {
                c.structure(
                    vec![(a.clone(), 0), (b.clone(), 4 + gap)],
                    &[
                        ("left", Value::from(a.as_str())),
                        ("right", Value::from(b.as_str())),
                        ("gap", Value::from(gap)),
                    ],
                );
            }
        }
    }
    c
}

fn permutations(items: &[&'static str]) -> Vec<Vec<&'static str>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn houses() -> Catalog {
    let mut c = Catalog::default();
    c.part("window", &[(0, B), (2, B), (0, R), (3, R), (0, B), (2, B)]);
    c.part("bricks", &[(0, B), (2, B), (1, B), (0, B), (2, B), (1, B)]);
    c.part(
        "door",
        &[(0, R), (0, R), (3, R), (3, R), (0, B), (2, B), (1, B)],
    );
    for n in 2..=6 {
        c.part(&format!("row{n}"), &row_blocks(n));
    }

    let floor_name = |perm: &[&str]| perm.join("_");
    let ground = permutations(&["window", "bricks", "door"]);
    let upper = permutations(&["window", "bricks"]);
    for p in &ground {
        let items = p
            .iter()
            .enumerate()
            .map(|(i, n)| (part(n), 4 * i as i64))
            .collect();
        c.composite(&format!("floor_{}", floor_name(p)), 2, items);
    }
    for p in &upper {
        let items = p
            .iter()
            .enumerate()
            .map(|(i, n)| (part(n), 4 * i as i64))
            .collect();
        c.composite(&format!("upper_{}", floor_name(p)), 2, items);
    }
    let mut roof: Vec<(Item, i64)> = (0..5)
        .map(|i| (part(&format!("row{}", 6 - i)), i))
        .collect();
    roof.push((Item::Block(B), 5));
    c.composite("roof", 2, roof);

    let mut stories: Vec<Vec<&Vec<&str>>> = vec![vec![]];
    stories.extend(upper.iter().map(|u| vec![u]));
    for a in &upper {
        for b in &upper {
            stories.push(vec![a, b]);
        }
    }
    for g in &ground {
        for s in &stories {
            let mut items = vec![(part(&format!("floor_{}", floor_name(g))), 0)];
            let mut name = format!("house_{}", floor_name(g));
            for u in s {
                items.push((part(&format!("upper_{}", floor_name(u))), 2));
                name.push_str(&format!("__{}", floor_name(u)));
            }
            items.push((part("roof"), 0));
            c.composite(&name, 3, items);
            c.structure(
                vec![(name, 0)],
                &[
                    ("ground_floor", Value::from(floor_name(g))),
                    ("upper_floors", Value::from(s.len())),
                ],
            );
        }
    }
    c
}

fn castles() -> Catalog {
    let mut c = Catalog::default();
    c.part("tile_a", &[(0, B), (0, B)]);
    c.part("tile_d", &[(0, R), (1, R)]);
    c.part("row2", &row_blocks(2));
    c.part("row3", &row_blocks(3));

    for tile in ["tile_a", "tile_d"] {
        for h in 2..=3 {
            c.composite(&format!("stack_{tile}_{h}"), 2, vec![(part(tile), 0); h]);
        }
        for w in 2..=3i64 {
            for hw in 2..=4 {
                let items = (0..hw)
                    .flat_map(|_| (0..w).map(|j| (part(tile), 2 * j)))
                    .collect();
                c.composite(&format!("wall_{tile}_{w}_{hw}"), 2, items);
            }
        }
    }
    c.composite("pyramid4", 2, vec![(part("row2"), 0), (Item::Block(B), 1)]);
    c.composite(
        "pyramid6",
        2,
        vec![(part("row3"), 0), (part("row2"), 1), (Item::Block(B), 2)],
    );
    c.composite(
        "dome4",
        2,
        vec![(Item::Block(B), 1), (part("row2"), 0), (Item::Block(B), 1)],
    );
    c.composite(
        "dome6",
        2,
        vec![
            (part("row2"), 1),
            (part("row3"), 0),
            (part("row2"), 1),
            (Item::Block(B), 2),
        ],
    );

    for wall_tile in ["a", "d"] {
        for stack_tile in ["a", "d"] {
            for w in 2..=3i64 {
                for (hs, hw) in [(2, 3), (2, 4), (3, 4)] {
                    for roof in ["pyramid", "dome"] {
                        let right = 2 + 2 * w;
                        let stack = format!("stack_tile_{stack_tile}_{hs}");
                        let items = vec![
                            (part(&stack), 0),
                            (part(&format!("wall_tile_{wall_tile}_{w}_{hw}")), 2),
                            (part(&stack), right),
                            (Item::Block(B), 0),
                            (Item::Block(B), right),
                            (part(&format!("{roof}{}", 2 * w)), 2),
                        ];
                        let name = format!("castle_{wall_tile}{stack_tile}_{w}_{hs}{hw}_{roof}");
                        c.composite(&name, 3, items);
                        c.structure(
                            vec![(name, 0)],
                            &[
                                ("wall_tile", Value::from(wall_tile)),
                                ("stack_tile", Value::from(stack_tile)),
                                ("wall_width", Value::from(w)),
                                ("stack_height", Value::from(hs)),
                                ("wall_height", Value::from(hw)),
                                ("roof", Value::from(roof)),
                            ],
                        );
                    }
                }
            }
        }
    }
    c
}

pub fn catalog(sub: Subdomain) -> Catalog {
    match sub {
        Subdomain::Bridges => bridges(),
        Subdomain::Cities => cities(),
        Subdomain::Houses => houses(),
        Subdomain::Castles => castles(),
        _ => unreachable!("drawings subdomain in towers catalog"),
    }
}

pub fn definitions(sub: Subdomain) -> Vec<SubroutineDef> {
    catalog(sub).definitions()
}
