use modelspace::Dataset;
use sha2::{Digest, Sha256};

/// SHA-256 of the parsed numbers: `n` and `p`, then each row as the response
/// followed by the candidate columns, all little-endian.
pub fn dataset_digest(data: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update(b"modelspace-matrix-v1");
    h.update((data.n() as u64).to_le_bytes());
    h.update((data.p() as u64).to_le_bytes());
    for i in 0..data.n() {
        h.update(data.y()[i].to_le_bytes());
        for j in 0..data.p() {
            h.update(data.column(j)[i].to_le_bytes());
        }
    }
    let bytes = h.finalize();
    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(y: Vec<f64>) -> Dataset {
        Dataset::new("y", y, vec!["a".into()], vec![vec![1.0, 2.0, 4.0, 3.0]]).unwrap()
    }

    #[test]
    fn depends_on_values_only() {
        let a = dataset_digest(&data(vec![1.0, 2.0, 3.0, 5.0]));
        assert_eq!(a, dataset_digest(&data(vec![1.0, 2.0, 3.0, 5.0])));
        assert_ne!(a, dataset_digest(&data(vec![1.0, 2.0, 3.0, 5.5])));
        assert!(a.starts_with("sha256:") && a.len() == 7 + 64);
    }
}
