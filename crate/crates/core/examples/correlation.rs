//! Pearson correlation, including the undefined zero-variance case.
use skill_corpus::eval::pearson;

fn main() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    for ys in [[2.0, 1.0, 4.0, 3.0], [2.0, 4.0, 6.0, 8.0], [4.0, 3.0, 2.0, 1.0], [3.0, 3.0, 3.0, 3.0]] {
        match pearson(&xs, &ys) {
            Ok(r) => println!("{ys:?}: r = {r:+.4}"),
            Err(e) => println!("{ys:?}: {e}"),
        }
    }
}
