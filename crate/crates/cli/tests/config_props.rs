use proptest::prelude::*;
use teichlab::config::{format_point, parse_point, RunConfig};
use teichlab_core::deformation::TeichPoint;
use teichlab_core::C64;

proptest! {
    #[test]
    fn point_format_roundtrips(v in prop::array::uniform6(-1e3f64..1e3)) {
        let z = TeichPoint([C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])]);
        let back = parse_point(&format_point(&z)).unwrap();
        prop_assert_eq!(back, z);
    }

    #[test]
    fn digest_tracks_numeric_keys(level in 1u32..=7, seed in any::<u64>()) {
        let a = RunConfig { mesh_level: level, seed, ..RunConfig::default() };
        let mut b = a.clone();
        b.cache_dir = "elsewhere".into();
        prop_assert_eq!(a.digest(), b.digest());
        b.seed = seed.wrapping_add(1);
        prop_assert_ne!(a.digest(), b.digest());
    }
}
