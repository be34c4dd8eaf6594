// SPDX-License-Identifier: Apache-2.0

//! Example programs shipped with the crate, each as a MiniJS/MiniPy twin.

/// One example program in both frontends.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub name: &'static str,
    pub minijs: &'static str,
    pub minipy: &'static str,
    /// False for programs that are expected to trip the escape guard when
    /// partitioned.
    pub guard_clean: bool,
}

impl Example {
    pub fn sources(&self) -> [(String, &'static str); 2] {
        [
            (format!("{}.mjs.txt", self.name), self.minijs),
            (format!("{}.mpy.txt", self.name), self.minipy),
        ]
    }
}

macro_rules! example {
    ($name:literal, $clean:expr) => {
        Example {
            name: $name,
            minijs: include_str!(concat!("../corpus/", $name, ".mjs.txt")),
            minipy: include_str!(concat!("../corpus/", $name, ".mpy.txt")),
            guard_clean: $clean,
        }
    };
}

pub const REGRESSION: Example = example!("regression", true);
pub const PAGERANK: Example = example!("pagerank", true);
pub const POLYGLOT: Example = example!("polyglot", true);
pub const SECURE_INT: Example = example!("secure_int", false);
pub const ESCAPE: Example = example!("escape", false);

pub const ALL: [Example; 5] = [REGRESSION, PAGERANK, POLYGLOT, SECURE_INT, ESCAPE];

pub fn by_name(name: &str) -> Option<Example> {
    ALL.into_iter().find(|e| e.name == name)
}
