//! Every example runs to completion.

macro_rules! example {
    ($($name:ident = $path:literal),* $(,)?) => {
        $(
            #[path = $path]
            mod $name;
        )*

        mod run {
            $(
                #[test]
                fn $name() {
                    super::$name::main();
                }
            )*
        }
    };
}

example! {
    spectral_identities = "../examples/spectral_identities.rs",
    constitutive_laws = "../examples/constitutive_laws.rs",
    nsk_energy = "../examples/nsk_energy.rs",
    qg_decay = "../examples/qg_decay.rs",
    limit_run = "../examples/limit_run.rs",
    eps_sweep = "../examples/eps_sweep.rs",
    snapshots = "../examples/snapshots.rs",
    config_file = "../examples/config_file.rs",
}
