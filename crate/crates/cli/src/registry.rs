//! Models and functionals addressable from a configuration file, with the
//! parameters each one accepts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// Whether a model's local state is a lattice height/spin or a cube of
/// marked points; functionals must match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lattice,
    Points,
    Any,
}

impl Family {
    pub fn accepts(self, model: Family) -> bool {
        self == Family::Any || self == model
    }

    fn label(self) -> &'static str {
        match self {
            Family::Lattice => "lattice",
            Family::Points => "points",
            Family::Any => "any",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    /// A real number in `[min, max]`, or `(min, max]` when `open_min`.
    Real { min: f64, open_min: bool, max: f64 },
    /// An integer in `[min, max]`.
    Integer { min: i64, max: i64 },
    /// A whitespace-separated list of non-negative reals.
    RealList,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fallback {
    Required,
    Optional,
    Value(&'static str),
}

#[derive(Clone, Copy, Debug)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Fallback,
    pub doc: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Integer(i64),
    Real(f64),
    Reals(Vec<f64>),
}

impl Value {
    pub fn real(&self) -> f64 {
        match self {
            Value::Integer(i) => *i as f64,
            Value::Real(x) => *x,
            Value::Reals(_) => f64::NAN,
        }
    }

    pub fn integer(&self) -> i64 {
        match self {
            Value::Integer(i) => *i,
            _ => 0,
        }
    }
}

pub type Params = BTreeMap<String, Value>;

pub struct Entry {
    pub name: &'static str,
    pub family: Family,
    pub params: &'static [Param],
    pub doc: &'static str,
}

impl Entry {
    pub fn param(&self, key: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.key == key)
    }
}

const POSITIVE: Kind = Kind::Real {
    min: 0.0,
    open_min: true,
    max: f64::INFINITY,
};
const NON_NEGATIVE: Kind = Kind::Real {
    min: 0.0,
    open_min: false,
    max: f64::INFINITY,
};
const PROBABILITY: Kind = Kind::Real {
    min: 0.0,
    open_min: false,
    max: 1.0,
};

const LAMBDA: Param = Param {
    key: "lambda",
    kind: POSITIVE,
    default: Fallback::Required,
    doc: "arrival intensity",
};

const NEIGHBORHOOD: Param = Param {
    key: "neighborhood_radius",
    kind: Kind::Integer { min: 1, max: 8 },
    default: Fallback::Value("1"),
    doc: "box radius of the neighborhood",
};

const CAP: Param = Param {
    key: "cap",
    kind: Kind::Integer {
        min: 1,
        max: 1_000_000,
    },
    default: Fallback::Optional,
    doc: "height cap; deposits above it are suppressed (needed by oracle)",
};

const EPSILON: Param = Param {
    key: "epsilon",
    kind: Kind::Real {
        min: 0.0,
        open_min: true,
        max: 1.0,
    },
    default: Fallback::Required,
    doc: "exclusion or counting radius",
};

const JUMP_RADIUS: Param = Param {
    key: "jump_radius",
    kind: Kind::Real {
        min: 0.0,
        open_min: true,
        max: 4.0,
    },
    default: Fallback::Required,
    doc: "radius of the uniform jump law",
};

const INITIAL_DENSITY: Param = Param {
    key: "initial_density",
    kind: PROBABILITY,
    default: Fallback::Value("0.5"),
    doc: "probability that a cube starts with one particle",
};

/// Models, sorted by name.
pub static MODELS: &[Entry] = &[
    Entry {
        name: "exclusion",
        family: Family::Points,
        params: &[LAMBDA, EPSILON, JUMP_RADIUS, INITIAL_DENSITY],
        doc: "continuum exclusion process",
    },
    Entry {
        name: "flip",
        family: Family::Lattice,
        params: &[
            Param {
                key: "up",
                kind: NON_NEGATIVE,
                default: Fallback::Value("1"),
                doc: "rate of 0 -> 1",
            },
            Param {
                key: "down",
                kind: NON_NEGATIVE,
                default: Fallback::Value("1"),
                doc: "rate of 1 -> 0",
            },
        ],
        doc: "independent two-state spins",
    },
    Entry {
        name: "lattice_bd",
        family: Family::Lattice,
        params: &[LAMBDA, NEIGHBORHOOD, CAP],
        doc: "lattice ballistic deposition",
    },
    Entry {
        name: "lattice_bd_relaxed",
        family: Family::Lattice,
        params: &[LAMBDA, NEIGHBORHOOD, CAP],
        doc: "deposition onto the lowest neighbor",
    },
    Entry {
        name: "monolayer_bd_rolling_1d",
        family: Family::Points,
        params: &[LAMBDA],
        doc: "monolayer ballistic deposition with rolling, d = 1",
    },
    Entry {
        name: "multilayer_bd_stick",
        family: Family::Points,
        params: &[LAMBDA],
        doc: "multilayer ballistic deposition, sticking on first contact, d <= 2",
    },
    Entry {
        name: "rsa",
        family: Family::Points,
        params: &[
            LAMBDA,
            Param {
                key: "desorption",
                kind: NON_NEGATIVE,
                default: Fallback::Value("0"),
                doc: "per-particle removal rate",
            },
        ],
        doc: "random sequential adsorption of unit balls",
    },
    Entry {
        name: "voter_I",
        family: Family::Points,
        params: &[
            LAMBDA,
            Param {
                key: "range",
                kind: POSITIVE,
                default: Fallback::Value("1"),
                doc: "copying range",
            },
            Param {
                key: "p",
                kind: PROBABILITY,
                default: Fallback::Required,
                doc: "probability of copying a uniform neighbor",
            },
        ],
        doc: "continuum voter, copy a uniform neighbor with probability p",
    },
    Entry {
        name: "voter_II",
        family: Family::Points,
        params: &[
            LAMBDA,
            Param {
                key: "range",
                kind: POSITIVE,
                default: Fallback::Value("1"),
                doc: "copying range",
            },
        ],
        doc: "continuum voter, copy the nearest neighbor",
    },
    Entry {
        name: "zero_range",
        family: Family::Points,
        params: &[
            Param {
                key: "lambda",
                kind: POSITIVE,
                default: Fallback::Value("1"),
                doc: "rates lambda/(n+1) unless `rates` is given",
            },
            Param {
                key: "rates",
                kind: Kind::RealList,
                default: Fallback::Optional,
                doc: "explicit rates for n = 0, 1, ...; zero beyond the list",
            },
            EPSILON,
            JUMP_RADIUS,
            INITIAL_DENSITY,
        ],
        doc: "continuum zero-range process",
    },
];

/// Functionals, sorted by name.
pub static FUNCTIONALS: &[Entry] = &[
    Entry {
        name: "moment",
        family: Family::Lattice,
        params: &[Param {
            key: "k",
            kind: Kind::Integer { min: 1, max: 16 },
            default: Fallback::Value("1"),
            doc: "power of the center state",
        }],
        doc: "center state to the power k",
    },
    Entry {
        name: "one",
        family: Family::Any,
        params: &[],
        doc: "constant 1",
    },
    Entry {
        name: "phi1",
        family: Family::Points,
        params: &[],
        doc: "number of points",
    },
    Entry {
        name: "phi2",
        family: Family::Points,
        params: &[Param {
            key: "r1",
            kind: Kind::Real {
                min: 1.0,
                open_min: false,
                max: 4.0,
            },
            default: Fallback::Value("1"),
            doc: "pair radius",
        }],
        doc: "half the number of other points within r1",
    },
    Entry {
        name: "phi3",
        family: Family::Points,
        params: &[Param {
            key: "r3",
            kind: POSITIVE,
            default: Fallback::Value("0.5"),
            doc: "height threshold",
        }],
        doc: "balls with height at most r3",
    },
    Entry {
        name: "phi4",
        family: Family::Points,
        params: &[],
        doc: "half the number of balls in contact",
    },
    Entry {
        name: "phi5",
        family: Family::Points,
        params: &[],
        doc: "height of exposed balls, d = 1",
    },
];

pub fn model(name: &str) -> Option<&'static Entry> {
    MODELS.iter().find(|e| e.name == name)
}

pub fn functional(name: &str) -> Option<&'static Entry> {
    FUNCTIONALS.iter().find(|e| e.name == name)
}

pub fn names(entries: &[Entry]) -> String {
    entries
        .iter()
        .map(|e| e.name)
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe(kind: Kind) -> String {
    match kind {
        Kind::Real { min, open_min, max } => {
            let lo = if open_min { "(" } else { "[" };
            if max.is_infinite() {
                format!("real in {lo}{min}, inf)")
            } else {
                format!("real in {lo}{min}, {max}]")
            }
        }
        Kind::Integer { min, max } => format!("integer in [{min}, {max}]"),
        Kind::RealList => "list of non-negative reals".into(),
    }
}

fn list_section(out: &mut String, title: &str, entries: &[Entry]) {
    let _ = writeln!(out, "{title}:");
    let mut sorted: Vec<&Entry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.name);
    for e in sorted {
        let _ = writeln!(out, "  {} [{}] {}", e.name, e.family.label(), e.doc);
        for p in e.params {
            let default = match p.default {
                Fallback::Required => ", required".to_string(),
                Fallback::Optional => ", optional".to_string(),
                Fallback::Value(d) => format!(", default {d}"),
            };
            let _ = writeln!(
                out,
                "    {}: {}{}; {}",
                p.key,
                describe(p.kind),
                default,
                p.doc
            );
        }
    }
}

/// Sorted listing of models and functionals with their parameters.
pub fn listing() -> String {
    let mut out = String::new();
    list_section(&mut out, "models", MODELS);
    list_section(&mut out, "functionals", FUNCTIONALS);
    out
}
