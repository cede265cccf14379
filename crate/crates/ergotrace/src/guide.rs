//! A guided tour of the crate, shared verbatim with the mdbook under
//! `book/`. Every chapter below includes its markdown source as a doc page,
//! so the book's code blocks compile and run as doc-tests — the guide cannot
//! drift from the library.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        pub mod $name {}
    };
}

chapter!(ch01_domains, "../book/src/ch01-domains.md");
chapter!(ch02_billiard, "../book/src/ch02-billiard.md");
chapter!(ch03_classical, "../book/src/ch03-classical.md");
chapter!(ch04_layer_potentials, "../book/src/ch04-layer-potentials.md");
chapter!(ch05_grids_operators, "../book/src/ch05-grids-operators.md");
chapter!(ch06_eigenvalues, "../book/src/ch06-eigenvalues.md");
chapter!(ch07_traces, "../book/src/ch07-traces.md");
chapter!(ch08_statistics, "../book/src/ch08-statistics.md");
chapter!(ch09_transport_heat, "../book/src/ch09-transport-heat.md");
chapter!(ch10_cli, "../book/src/ch10-cli.md");
