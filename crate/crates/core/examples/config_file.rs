//! Reading an experiment config: defaults, validation errors and the
//! defaulted document printed back.

use nskqg::harness::parse_config;

pub fn main() {
    let cfg = parse_config(
        r#"
experiment = "limit"
N = 32
eps = 0.1
phi0_modes = [[1, 0, 1.0, 0.0], [2, 1, 0.2, 0.5]]
"#,
    )
    .unwrap();
    print!("{}", cfg.to_toml());

    for bad in [
        "experiment = \"qg\"\ns = 0\n",
        "experiment = \"nsk\"\nN = 16\nphi0_modes = [[8, 0, 1.0, 0.0]]\n",
        "experiment = \"sweep\"\neps_list = [0.4, 0.2]\n",
        "experiment = \"qg\"\nviscosity = 2\n",
    ] {
        println!("{}", parse_config(bad).unwrap_err());
    }
}
