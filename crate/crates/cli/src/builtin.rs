//! Manifests compiled into the binary.

const BUILTINS: [(&str, &str); 5] = [
    ("heisenberg3", include_str!("../manifests/heisenberg3.json")),
    ("heisenberg5", include_str!("../manifests/heisenberg5.json")),
    (
        "foliation-flat",
        include_str!("../manifests/foliation-flat.json"),
    ),
    (
        "contact-darboux",
        include_str!("../manifests/contact-darboux.json"),
    ),
    (
        "degenerate-rank2",
        include_str!("../manifests/degenerate-rank2.json"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// Raw JSON of the built-in manifest `name`.
pub fn source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
