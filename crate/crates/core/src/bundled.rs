//! Parameter sets shipped with the crate.
//!
//! Three simulated settings share `kappa = [1, 0.75, 0.6, 0.3, 0.1]` over
//! ten items whose attraction is close to zero, typical of web click data,
//! or close to one. Eight behavioral settings come from ad-click logs of
//! eight search queries; only their size, `theta` range and `kappa` are
//! known, so `theta` is spread evenly over that range.

use crate::pbm::PbmParams;

macro_rules! bundled {
    ($name:ident, $file:literal) => {
        pub fn $name() -> PbmParams {
            serde_json::from_str(include_str!(concat!("../configs/params/", $file)))
                .expect(concat!("bundled params ", $file))
        }
    };
}

bundled!(simulated_small, "simulated_small.json");
bundled!(simulated_std, "simulated_std.json");
bundled!(simulated_big, "simulated_big.json");

const BEHAVIORAL: [&str; 8] = [
    include_str!("../configs/params/behavioral_q1.json"),
    include_str!("../configs/params/behavioral_q2.json"),
    include_str!("../configs/params/behavioral_q3.json"),
    include_str!("../configs/params/behavioral_q4.json"),
    include_str!("../configs/params/behavioral_q5.json"),
    include_str!("../configs/params/behavioral_q6.json"),
    include_str!("../configs/params/behavioral_q7.json"),
    include_str!("../configs/params/behavioral_q8.json"),
];

/// The eight behavioral settings, in table order.
pub fn behavioral() -> Vec<PbmParams> {
    BEHAVIORAL
        .iter()
        .map(|s| serde_json::from_str(s).expect("bundled behavioral params"))
        .collect()
}

/// Looks a bundled setting up by file stem, e.g. `simulated_std` or
/// `behavioral_q3`.
pub fn by_name(name: &str) -> Option<PbmParams> {
    match name {
        "simulated_small" => Some(simulated_small()),
        "simulated_std" => Some(simulated_std()),
        "simulated_big" => Some(simulated_big()),
        _ => {
            let q: usize = name.strip_prefix("behavioral_q")?.parse().ok()?;
            behavioral().into_iter().nth(q.checked_sub(1)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let b = behavioral();
        let sizes: Vec<usize> = b.iter().map(PbmParams::n_items).collect();
        assert_eq!(sizes, vec![5, 5, 6, 6, 6, 8, 11, 11]);
        let q6 = &b[5];
        assert_eq!(q6.kappa(), &[1.0, 0.178, 0.101]);
        let lo = q6.theta().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q6.theta().iter().copied().fold(0.0, f64::max);
        assert_eq!((lo, hi), (0.108, 0.146));
    }

    #[test]
    fn simulated_settings() {
        assert_eq!(simulated_std().theta()[0], 0.3);
        assert_eq!(simulated_small().theta()[9], 0.01);
        assert_eq!(simulated_big().theta()[0], 0.99);
        assert!(by_name("behavioral_q8").is_some());
        assert!(by_name("behavioral_q9").is_none());
        assert!(by_name("behavioral_q0").is_none());
    }
}
