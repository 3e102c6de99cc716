//! Writes the bundled three-peak scan: `cargo run --example make_fixture -- out.xy [seed]`.

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "three_peaks.xy".into());
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let s = diffraxis::fixtures::three_peaks(seed);
    std::fs::write(&path, diffraxis::fixtures::to_text(&s.data)).expect("cannot write fixture");
}
