//! Compiles every chapter of `book/` as documentation so `cargo test` runs
//! its code blocks.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(propositions, "propositions.md");
chapter!(reference_classes, "reference-classes.md");
chapter!(intervals, "intervals.md");
chapter!(calculi, "calculi.md");
chapter!(betting, "betting.md");
chapter!(experiments, "experiments.md");
chapter!(sessions, "sessions.md");
