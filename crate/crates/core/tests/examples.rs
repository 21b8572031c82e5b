//! Every example runs to completion.

macro_rules! examples {
    ($($name:ident),* $(,)?) => {$(
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().expect(concat!(stringify!($name), " example failed"));
            }
        }
    )*};
}

examples!(
    generate_data,
    ci_tests,
    pc_discovery,
    prior_knowledge,
    var_discovery,
    tabular_models,
    markov_blanket,
    treatment_effects,
    root_cause,
    benchmark_sweep,
);
