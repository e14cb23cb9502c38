//! Snapshot files: write a few named fields and read them back bit for bit.

use nskqg::harness::{read_snapshot, write_snapshot, Snapshot};
use nskqg::ScalarField;

pub fn main() {
    let snap = Snapshot {
        fields: vec![
            ("rho".into(), ScalarField::from_fn(16, |x, y| 1.0 + 0.1 * (x - y).sin())),
            ("phi".into(), ScalarField::from_fn(16, |x, _| x.cos())),
        ],
    };
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &snap).unwrap();
    println!("{} bytes, header {:?}", bytes.len(), &bytes[..4]);
    let back = read_snapshot(bytes.as_slice()).unwrap();
    println!("identical: {}", back == snap);
    println!("phi[0][0] = {}", back.get("phi").unwrap().values()[[0, 0]]);
}
